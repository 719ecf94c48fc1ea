//! Path efficiency.
//!
//! Convenience is distance per unit of weighted cost and cost-effectiveness is
//! distance per Rupee. Both are min-max normalized over the set of paths of
//! one origin-destination pair, and efficiency is their weighted sum. A path
//! is better than another iff its efficiency is strictly higher.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{Plan, PlanSet};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MetricsError {
    #[error("plan has zero cost")]
    ZeroCost,
    #[error("plan has zero fare")]
    ZeroFare,
    #[error("cannot normalize an empty set")]
    EmptySet,
    #[error("efficiency weights must be positive and sum to 1 (w_c = {w_c}, w_e = {w_e})")]
    WeightConstraintViolated { w_c: f64, w_e: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyWeights {
    pub w_c: f64,
    pub w_e: f64,
}

impl Default for EfficiencyWeights {
    fn default() -> Self {
        EfficiencyWeights { w_c: 0.5, w_e: 0.5 }
    }
}

impl EfficiencyWeights {
    pub fn new(w_c: f64, w_e: f64) -> Result<Self, MetricsError> {
        let w = EfficiencyWeights { w_c, w_e };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.w_c > 0.0 && self.w_e > 0.0 && (self.w_c + self.w_e - 1.0).abs() <= 1e-9 {
            Ok(())
        } else {
            Err(MetricsError::WeightConstraintViolated {
                w_c: self.w_c,
                w_e: self.w_e,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathScore {
    /// km per weighted minute
    pub convenience: f64,
    /// km per Rupee
    pub cost_effectiveness: f64,
    pub c_norm: f64,
    pub e_norm: f64,
    pub lambda: f64,
}

/// The three quantities a score is computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreInput {
    pub distance_km: f64,
    pub cost: f64,
    pub fare_rs: f64,
}

impl From<&Plan> for ScoreInput {
    fn from(p: &Plan) -> Self {
        ScoreInput {
            distance_km: p.total_distance_km,
            cost: p.cost,
            fare_rs: p.fare.total_rs as f64,
        }
    }
}

pub fn convenience(plan: &Plan) -> Result<f64, MetricsError> {
    convenience_of(plan.total_distance_km, plan.cost)
}

pub fn cost_effectiveness(plan: &Plan) -> Result<f64, MetricsError> {
    cost_effectiveness_of(plan.total_distance_km, plan.fare.total_rs as f64)
}

pub fn convenience_of(distance_km: f64, cost: f64) -> Result<f64, MetricsError> {
    if cost == 0.0 {
        return Err(MetricsError::ZeroCost);
    }
    Ok(distance_km / cost)
}

pub fn cost_effectiveness_of(distance_km: f64, fare_rs: f64) -> Result<f64, MetricsError> {
    if fare_rs == 0.0 {
        return Err(MetricsError::ZeroFare);
    }
    Ok(distance_km / fare_rs)
}

/// Min-max normalization; a constant column maps to 1.0 everywhere.
pub fn min_max(values: &[f64]) -> Result<Vec<f64>, MetricsError> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if values.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    Ok(values.iter().map(|&v| normalize_value(v, lo, hi)).collect())
}

/// One min-max normalized value given the set's extremes.
pub fn normalize_value(v: f64, lo: f64, hi: f64) -> f64 {
    if hi == lo {
        1.0
    } else {
        (v - lo) / (hi - lo)
    }
}

/// Fills `c_norm` and `e_norm` in place.
pub fn normalize(scores: &mut [PathScore]) -> Result<(), MetricsError> {
    let c = min_max(&scores.iter().map(|s| s.convenience).collect::<Vec<_>>())?;
    let e = min_max(&scores.iter().map(|s| s.cost_effectiveness).collect::<Vec<_>>())?;
    for (s, (c, e)) in scores.iter_mut().zip(c.into_iter().zip(e)) {
        s.c_norm = c;
        s.e_norm = e;
    }
    Ok(())
}

pub fn efficiency(score: &PathScore, weights: &EfficiencyWeights) -> Result<f64, MetricsError> {
    weights.validate()?;
    // w_c + w_e may round one ulp above 1
    Ok((weights.w_c * score.c_norm + weights.w_e * score.e_norm).min(1.0))
}

/// Scores every input relative to the whole slice.
pub fn score_inputs(inputs: &[ScoreInput], weights: &EfficiencyWeights) -> Result<Vec<PathScore>, MetricsError> {
    weights.validate()?;
    let mut scores = inputs
        .iter()
        .map(|i| {
            Ok(PathScore {
                convenience: convenience_of(i.distance_km, i.cost)?,
                cost_effectiveness: cost_effectiveness_of(i.distance_km, i.fare_rs)?,
                c_norm: 0.0,
                e_norm: 0.0,
                lambda: 0.0,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    normalize(&mut scores)?;
    for s in &mut scores {
        s.lambda = efficiency(s, weights)?;
    }
    Ok(scores)
}

/// Scores aligned with `plan_set.plans`.
pub fn score_plan_set(plan_set: &PlanSet, weights: &EfficiencyWeights) -> Result<Vec<PathScore>, MetricsError> {
    let inputs: Vec<ScoreInput> = plan_set.plans.iter().map(ScoreInput::from).collect();
    score_inputs(&inputs, weights)
}
