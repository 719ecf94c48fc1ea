use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lastmile::bipartite::{cache_key, direct_reachability_ratio, BipartiteGraph, GraphCache, SearchOptions};
use lastmile::coverage::{
    montecarlo_coverage_oracle, ptn_coverage, write_coverage_csv, BoundingBox, CoverageKind, CoverageMethod,
    CoverageReport, DEFAULT_CELL_SIZE_M,
};
use lastmile::experiments::{run_experiment2, summarize_fare_distance, write_trip_records, Experiment1, ParameterGrid};
use lastmile::fare::{lm_fare, pt_fare, FareConfig};
use lastmile::network::{generate_grid_city, load_network, PtMode, RoutePlan, TransitNetwork};
use lastmile::service::{plan_response, serve, AppState, PlanParams, ServeConfig};

#[derive(Parser)]
#[command(name = "lastmile", version, about = "First/last-mile aware transit trip planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Precompute the direct-connection graph and print its statistics.
    BuildGraph {
        #[command(flatten)]
        net: NetArgs,
        /// Write the graph snapshot here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan one trip and print the JSON response.
    Plan {
        #[command(flatten)]
        net: NetArgs,
        /// Origin as LAT,LON.
        #[arg(long, value_parser = parse_point)]
        from: (f64, f64),
        /// Destination as LAT,LON.
        #[arg(long, value_parser = parse_point)]
        to: (f64, f64),
        #[command(flatten)]
        prefs: Prefs,
        #[arg(long, default_value_t = 5)]
        limit: usize,
    },
    /// Sweep sampled trips over a parameter grid; one CSV row per solve.
    Experiment1 {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, default_value_t = 100)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Preset::Table)]
        preset: Preset,
        /// Comma-separated fare caps overriding the preset.
        #[arg(long = "max-fare", value_delimiter = ',')]
        max_fare: Vec<u32>,
        #[arg(long = "w-lm", value_delimiter = ',')]
        w_lm: Vec<f64>,
        #[arg(long = "lm-range-km", value_delimiter = ',')]
        lm_range_km: Vec<f64>,
        #[arg(long = "transfer-penalty-min", value_delimiter = ',')]
        transfer_penalty_min: Vec<f64>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the paired fare/distance summary as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Network and direct-reachability coverage per box and radius.
    Experiment2 {
        #[command(flatten)]
        net: NetArgs,
        /// LABEL:MIN_LAT,MAX_LAT,MIN_LON,MAX_LON; repeatable. Defaults to the
        /// network extent padded by 1 km.
        #[arg(long, value_parser = parse_bbox)]
        bbox: Vec<BoundingBox>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
        radii_km: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_CELL_SIZE_M)]
        cell_size_m: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stop-circle coverage of one box, optionally cross-checked by sampling.
    Coverage {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, value_parser = parse_bbox)]
        bbox: Option<BoundingBox>,
        #[arg(long, default_value_t = 0.5)]
        radius_km: f64,
        #[arg(long, default_value_t = DEFAULT_CELL_SIZE_M)]
        cell_size_m: f64,
        /// Number of Monte Carlo points; 0 skips the check.
        #[arg(long, default_value_t = 0)]
        montecarlo: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fare configuration.
    Fares {
        #[command(subcommand)]
        command: FaresCommand,
    },
    /// Serve the HTTP API.
    Serve {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Static UI bundle mounted at /ui.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FaresCommand {
    /// Print the fare table as TOML, plus sample fares.
    Show {
        #[arg(long)]
        fares: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 46 fares x 5 weights x 3 ranges.
    Table,
    /// Rs 60, w_lm 0.2, 5 km.
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridPlan {
    RowsAndCols,
    RowsOnly,
}

#[derive(Args)]
struct NetArgs {
    /// Stops CSV (id,name,lat,lon,mode).
    #[arg(long, requires = "routes", conflicts_with = "grid")]
    stops: Option<PathBuf>,
    /// Routes JSON.
    #[arg(long, requires = "stops")]
    routes: Option<PathBuf>,
    /// Synthetic grid city as ROWSxCOLS.
    #[arg(long, value_parser = parse_shape)]
    grid: Option<(usize, usize)>,
    #[arg(long, default_value_t = 1.0)]
    grid_spacing_km: f64,
    #[arg(long, value_enum, default_value_t = GridPlan::RowsAndCols)]
    grid_plan: GridPlan,
    #[arg(long, default_value_t = 0)]
    grid_seed: u64,
    #[arg(long, default_value_t = 2)]
    max_transfers: u32,
    #[arg(long, default_value_t = 0.0)]
    dwell_min: f64,
    /// Reuse graphs built for identical inputs.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Fare table TOML; built-in table when absent.
    #[arg(long)]
    fares: Option<PathBuf>,
}

#[derive(Args)]
struct Prefs {
    #[arg(long, default_value_t = 60)]
    max_fare: u32,
    #[arg(long, default_value_t = 0.2)]
    w_lm: f64,
    #[arg(long, default_value_t = 5.0)]
    lm_range_km: f64,
    #[arg(long, default_value_t = 0.0)]
    transfer_penalty_min: f64,
    /// Direct connections only.
    #[arg(long)]
    optimile: bool,
}

struct Loaded {
    graph: Arc<BipartiteGraph>,
    fares: FareConfig,
}

impl NetArgs {
    fn network(&self) -> Result<(TransitNetwork, Vec<u8>, Vec<u8>)> {
        if let (Some(s), Some(r)) = (&self.stops, &self.routes) {
            let sb = std::fs::read(s).with_context(|| format!("reading {}", s.display()))?;
            let rb = std::fs::read(r).with_context(|| format!("reading {}", r.display()))?;
            let net = load_network(sb.as_slice(), rb.as_slice()).context("loading network")?;
            return Ok((net, sb, rb));
        }
        let Some((rows, cols)) = self.grid else {
            bail!("give --stops and --routes, or --grid ROWSxCOLS");
        };
        let plan = match self.grid_plan {
            GridPlan::RowsAndCols => RoutePlan::RowsAndCols,
            GridPlan::RowsOnly => RoutePlan::RowsOnly,
        };
        let net = generate_grid_city(rows, cols, self.grid_spacing_km, plan, self.grid_seed)?;
        let (mut sb, mut rb) = (Vec::new(), Vec::new());
        net.save(&mut sb, &mut rb)?;
        Ok((net, sb, rb))
    }

    fn load(&self) -> Result<Loaded> {
        let fares = match &self.fares {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                FareConfig::from_toml(&text).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?
            }
            None => FareConfig::default(),
        };
        let (net, sb, rb) = self.network()?;
        let opts = SearchOptions {
            max_transfers: self.max_transfers,
            transfer_dwell_min: self.dwell_min,
        };
        let net = Arc::new(net);
        let graph = match &self.cache_dir {
            Some(dir) => {
                let (g, hit) = GraphCache::new(dir).load_or_build(net, &sb, &rb, opts)?;
                eprintln!(
                    "graph cache {}: {}",
                    if hit { "hit" } else { "miss" },
                    cache_key(&sb, &rb, &opts)
                );
                g
            }
            None => BipartiteGraph::build(net, opts),
        };
        Ok(Loaded {
            graph: Arc::new(graph),
            fares,
        })
    }
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LAT,LON")?;
    let lat = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let lon = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lat, lon))
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or("expected ROWSxCOLS")?;
    Ok((
        a.parse().map_err(|e| format!("{e}"))?,
        b.parse().map_err(|e| format!("{e}"))?,
    ))
}

fn parse_bbox(s: &str) -> Result<BoundingBox, String> {
    let (label, rest) = s
        .split_once(':')
        .ok_or("expected LABEL:MIN_LAT,MAX_LAT,MIN_LON,MAX_LON")?;
    let v: Vec<f64> = rest
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if v.len() != 4 {
        return Err("expected four numbers".into());
    }
    // degenerate boxes are reported by the commands, not rejected here
    Ok(BoundingBox {
        label: label.to_string(),
        min_lat: v[0],
        max_lat: v[1],
        min_lon: v[2],
        max_lon: v[3],
    })
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn extent(graph: &BipartiteGraph) -> Result<BoundingBox> {
    BoundingBox::of_network("network", graph.network(), 1.0).context("network has no extent")
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::BuildGraph { net, out } => {
            let l = net.load()?;
            let g = &l.graph;
            println!("stops: {}", g.network().stop_count());
            println!("routes: {}", g.network().routes().len());
            println!("edges: {}", g.edge_count());
            println!("max_transfers: {}", g.max_transfers());
            if let Ok(r) = direct_reachability_ratio(g) {
                println!("direct_reachability: {r:.4}");
            }
            if let Some(p) = out {
                std::fs::write(&p, g.to_json_bytes()?).with_context(|| format!("writing {}", p.display()))?;
                println!("snapshot: {}", p.display());
            }
        }
        Command::Plan {
            net,
            from,
            to,
            prefs,
            limit,
        } => {
            let l = net.load()?;
            let params = PlanParams {
                from_lat: from.0,
                from_lon: from.1,
                to_lat: to.0,
                to_lon: to.1,
                max_fare: Some(prefs.max_fare),
                w_lm: Some(prefs.w_lm),
                lm_range_km: Some(prefs.lm_range_km),
                transfer_penalty_min: Some(prefs.transfer_penalty_min),
                optimile: Some(prefs.optimile),
                limit: Some(limit),
            };
            let state = AppState::new(l.graph, l.fares);
            match plan_response(&state, &params) {
                Ok(r) => writeln!(io::stdout().lock(), "{}", serde_json::to_string_pretty(&r)?)?,
                Err(e) => bail!("{}: {e}", e.code()),
            }
        }
        Command::Experiment1 {
            net,
            pairs,
            seed,
            preset,
            max_fare,
            w_lm,
            lm_range_km,
            transfer_penalty_min,
            out,
            summary,
        } => {
            let l = net.load()?;
            let mut grid = match preset {
                Preset::Table => ParameterGrid::default(),
                Preset::Baseline => ParameterGrid::baseline(),
            };
            if !max_fare.is_empty() {
                grid.max_fares = max_fare;
            }
            if !w_lm.is_empty() {
                grid.w_lm_values = w_lm;
            }
            if !lm_range_km.is_empty() {
                grid.lm_ranges_km = lm_range_km;
            }
            if !transfer_penalty_min.is_empty() {
                grid.transfer_penalties_min = transfer_penalty_min;
            }
            let records = Experiment1::new(pairs, grid, seed).run(&l.graph, &l.fares)?;
            write_trip_records(&records, output(&out)?)?;
            if let Some(p) = summary {
                match summarize_fare_distance(&records) {
                    Ok(s) => std::fs::write(&p, serde_json::to_string_pretty(&s)?)?,
                    Err(e) => eprintln!("summary: {e}"),
                }
            }
        }
        Command::Experiment2 {
            net,
            bbox,
            radii_km,
            samples,
            seed,
            cell_size_m,
            out,
        } => {
            let l = net.load()?;
            let boxes = if bbox.is_empty() { vec![extent(&l.graph)?] } else { bbox };
            let res = run_experiment2(&l.graph, &boxes, &radii_km, samples, seed, cell_size_m)?;
            for (label, e) in &res.skipped {
                eprintln!("skipped {label}: {e}");
            }
            write_coverage_csv(&res.reports, output(&out)?)?;
        }
        Command::Coverage {
            net,
            bbox,
            radius_km,
            cell_size_m,
            montecarlo,
            seed,
        } => {
            let l = net.load()?;
            let b = match bbox {
                Some(b) => b,
                None => extent(&l.graph)?,
            };
            let mut reports = vec![ptn_coverage(l.graph.network(), &b, radius_km, cell_size_m)?];
            if montecarlo > 0 {
                let centers: Vec<_> = l.graph.network().stops().iter().map(|s| s.location).collect();
                reports.push(CoverageReport {
                    label: b.label.clone(),
                    kind: CoverageKind::Ptn,
                    radius_km,
                    covered_fraction: montecarlo_coverage_oracle(&centers, radius_km, &b, montecarlo, seed)?,
                    method: CoverageMethod::Montecarlo,
                    cell_size_m,
                    n_samples: Some(montecarlo),
                    seed: Some(seed),
                });
            }
            write_coverage_csv(&reports, output(&None)?)?;
        }
        Command::Fares {
            command: FaresCommand::Show { fares },
        } => {
            let cfg = match fares {
                Some(p) => FareConfig::from_toml(&std::fs::read_to_string(&p)?)
                    .map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?,
                None => FareConfig::default(),
            };
            print!("{}", cfg.to_toml());
            println!();
            println!("# km    lm  bus  metro");
            for d in [0.5, 1.0, 2.0, 4.0, 8.0, 12.0, 21.0, 32.0, 40.0] {
                println!(
                    "# {d:<5} {:>3} {:>4} {:>6}",
                    lm_fare(d, &cfg)?,
                    pt_fare(PtMode::Bus, d, &cfg)?,
                    pt_fare(PtMode::Metro, d, &cfg)?
                );
            }
        }
        Command::Serve { net, addr, ui_dir } => {
            let l = net.load()?;
            let state = Arc::new(AppState::new(l.graph, l.fares));
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("listening on http://{addr}");
            rt.block_on(serve(state, ServeConfig { addr, ui_dir }))
                .with_context(|| format!("serving on {addr}"))?;
        }
    }
    Ok(())
}
