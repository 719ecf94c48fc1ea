//! Fares in integer Rupees.
//!
//! First/last-mile legs are metered: a base fare covers the first kilometre
//! and every started kilometre after that costs `lm_per_km_rs`. Legs no longer
//! than `walk_free_km` are walked and cost nothing. Public transit fares are
//! distance slabs per mode.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::PtMode;

pub type Rupees = u32;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FareError {
    #[error("negative distance {0} km")]
    NegativeDistance(f64),
    #[error("invalid {mode} slab table: {reason}")]
    InvalidSlabs { mode: PtMode, reason: String },
    #[error("walk_free_km must be finite and non-negative, got {0}")]
    InvalidWalkFree(f64),
}

/// Fare charged for rides up to `upper_km`; `None` means no upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_km: Option<f64>,
    pub fare_rs: Rupees,
}

impl Slab {
    pub const fn upto(upper_km: f64, fare_rs: Rupees) -> Self {
        Slab {
            upper_km: Some(upper_km),
            fare_rs,
        }
    }

    pub const fn beyond(fare_rs: Rupees) -> Self {
        Slab {
            upper_km: None,
            fare_rs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FareConfig {
    pub lm_base_rs: Rupees,
    pub lm_per_km_rs: Rupees,
    pub walk_free_km: f64,
    pub bus_slabs: Vec<Slab>,
    pub metro_slabs: Vec<Slab>,
    /// Charge a slab lookup per boarding instead of once per mode on the
    /// total ride distance.
    pub fare_per_boarding: bool,
}

impl Default for FareConfig {
    fn default() -> Self {
        FareConfig {
            lm_base_rs: 25,
            lm_per_km_rs: 10,
            walk_free_km: 0.5,
            // placeholder agency tables; override them in a config file
            bus_slabs: vec![
                Slab::upto(4.0, 5),
                Slab::upto(8.0, 10),
                Slab::upto(12.0, 15),
                Slab::beyond(25),
            ],
            metro_slabs: vec![
                Slab::upto(2.0, 10),
                Slab::upto(5.0, 20),
                Slab::upto(12.0, 30),
                Slab::upto(21.0, 40),
                Slab::upto(32.0, 50),
                Slab::beyond(60),
            ],
            fare_per_boarding: false,
        }
    }
}

impl FareConfig {
    pub fn from_toml(text: &str) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let cfg: FareConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("fare config serializes")
    }

    pub fn slabs(&self, mode: PtMode) -> &[Slab] {
        match mode {
            PtMode::Bus => &self.bus_slabs,
            PtMode::Metro => &self.metro_slabs,
        }
    }

    pub fn validate(&self) -> Result<(), FareError> {
        if !(self.walk_free_km >= 0.0 && self.walk_free_km.is_finite()) {
            return Err(FareError::InvalidWalkFree(self.walk_free_km));
        }
        for mode in [PtMode::Bus, PtMode::Metro] {
            let bad = |reason: &str| FareError::InvalidSlabs {
                mode,
                reason: reason.to_string(),
            };
            let slabs = self.slabs(mode);
            let Some((last, init)) = slabs.split_last() else {
                return Err(bad("empty"));
            };
            if last.upper_km.is_some() {
                return Err(bad("last slab must be unbounded"));
            }
            let mut prev: Option<Slab> = None;
            for s in init {
                let Some(up) = s.upper_km else {
                    return Err(bad("only the last slab may be unbounded"));
                };
                if !(up >= 0.0 && up.is_finite()) {
                    return Err(bad("slab bounds must be finite and non-negative"));
                }
                if let Some(p) = prev {
                    if p.upper_km.is_some_and(|pu| up <= pu) {
                        return Err(bad("slab bounds must strictly increase"));
                    }
                    if s.fare_rs < p.fare_rs {
                        return Err(bad("slab fares must not decrease"));
                    }
                }
                prev = Some(*s);
            }
            if prev.is_some_and(|p| last.fare_rs < p.fare_rs) {
                return Err(bad("slab fares must not decrease"));
            }
        }
        Ok(())
    }
}

fn check_distance(d: f64) -> Result<(), FareError> {
    if d >= 0.0 {
        Ok(())
    } else {
        Err(FareError::NegativeDistance(d))
    }
}

/// Fare of one first/last-mile leg.
pub fn lm_fare(distance_km: f64, config: &FareConfig) -> Result<Rupees, FareError> {
    check_distance(distance_km)?;
    if distance_km <= config.walk_free_km {
        return Ok(0);
    }
    // every started kilometre past the first
    let extra_km = (distance_km - 1.0).max(0.0).ceil() as Rupees;
    Ok(config.lm_base_rs + config.lm_per_km_rs * extra_km)
}

/// Slab fare for a ride of `ride_distance_km` on `mode`.
pub fn pt_fare(mode: PtMode, ride_distance_km: f64, config: &FareConfig) -> Result<Rupees, FareError> {
    check_distance(ride_distance_km)?;
    let slabs = config.slabs(mode);
    let slab = slabs
        .iter()
        .find(|s| s.upper_km.is_none_or(|u| ride_distance_km <= u))
        .or(slabs.last())
        .ok_or_else(|| FareError::InvalidSlabs {
            mode,
            reason: "empty".into(),
        })?;
    Ok(slab.fare_rs)
}

/// One boarding of the public transit leg, for fare purposes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtRide {
    pub mode: PtMode,
    pub distance_km: f64,
}

impl PtRide {
    pub fn new(mode: PtMode, distance_km: f64) -> Self {
        PtRide { mode, distance_km }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FareBreakdown {
    pub lm_first_rs: Rupees,
    pub lm_last_rs: Rupees,
    pub pt_rs: Rupees,
    pub total_rs: Rupees,
}

impl FareBreakdown {
    pub fn lm_rs(&self) -> Rupees {
        self.lm_first_rs + self.lm_last_rs
    }
}

impl fmt::Display for FareBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Rs {} (first mile {}, transit {}, last mile {})",
            self.total_rs, self.lm_first_rs, self.pt_rs, self.lm_last_rs
        )
    }
}

/// Public transit part of a trip fare.
///
/// By default each mode is charged once on its total ride distance, so a
/// same-mode transfer costs nothing extra. With `fare_per_boarding` every
/// ride is looked up on its own.
pub fn pt_trip_fare(rides: &[PtRide], config: &FareConfig) -> Result<Rupees, FareError> {
    if config.fare_per_boarding {
        return rides.iter().map(|r| pt_fare(r.mode, r.distance_km, config)).sum();
    }
    let mut total = 0;
    for mode in [PtMode::Bus, PtMode::Metro] {
        let mut used = false;
        let mut km = 0.0;
        for r in rides.iter().filter(|r| r.mode == mode) {
            check_distance(r.distance_km)?;
            used = true;
            km += r.distance_km;
        }
        if used {
            total += pt_fare(mode, km, config)?;
        }
    }
    Ok(total)
}

/// Full door-to-door fare.
pub fn trip_fare(
    first_lm_km: f64,
    last_lm_km: f64,
    rides: &[PtRide],
    config: &FareConfig,
) -> Result<FareBreakdown, FareError> {
    let lm_first_rs = lm_fare(first_lm_km, config)?;
    let lm_last_rs = lm_fare(last_lm_km, config)?;
    let pt_rs = pt_trip_fare(rides, config)?;
    Ok(FareBreakdown {
        lm_first_rs,
        lm_last_rs,
        pt_rs,
        total_rs: lm_first_rs + lm_last_rs + pt_rs,
    })
}
