//! Replicated estimation runs: simulate, estimate at several `p`, summarise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Result};
use crate::models::spectral_measure;
use crate::numeric::{mean, sample_variance};
use crate::quantile::{estimate_many, EstimateKind, QuantileEstimate};
use crate::sample::{generate, SimulationPlan};
use crate::spectral::{raw_periodogram, smoothed_density, FrequencyGrid, WindowSpec};

/// Which spectrum estimate the quantiles are read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum Estimator {
    Raw,
    Smoothed {
        #[serde(default)]
        window: WindowSpec,
    },
}

impl Estimator {
    pub fn kind(&self) -> EstimateKind {
        match self {
            Estimator::Raw => EstimateKind::Raw,
            Estimator::Smoothed { .. } => EstimateKind::Smoothed,
        }
    }
}

/// Estimates for every replicate (outer) and every `p` (inner), in order.
pub fn replicate_estimates(
    plan: &SimulationPlan,
    ps: &[f64],
    estimator: &Estimator,
) -> Result<Vec<Vec<QuantileEstimate>>> {
    for &p in ps {
        check_probability("p", p)?;
    }
    let grid = FrequencyGrid::for_length(plan.n)?;
    let window = match estimator {
        Estimator::Raw => None,
        Estimator::Smoothed { window } => Some(window.resolve(plan.n)?),
    };
    (0..plan.replications)
        .into_par_iter()
        .map(|k| {
            let series = generate(&plan.model, plan.n, plan.replicate_seed(k))?;
            let pgram = match &window {
                None => raw_periodogram(&series, &grid)?,
                Some(w) => smoothed_density(&series, w, &grid)?,
            };
            let mut estimates = estimate_many(&pgram, ps)?;
            for e in &mut estimates {
                e.seed = series.seed();
            }
            Ok(estimates)
        })
        .collect()
}

/// One `(model, p)` cell of an estimation table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub model: String,
    pub p: f64,
    pub kind: EstimateKind,
    pub n: usize,
    pub true_quantile: f64,
    /// Estimate from the first replicate.
    pub single: f64,
    pub mean: f64,
    pub sd: f64,
    pub replications: usize,
}

/// Column-wise summaries of [`replicate_estimates`] output.
pub fn summarise(
    plan: &SimulationPlan,
    ps: &[f64],
    estimator: &Estimator,
) -> Result<Vec<EstimateSummary>> {
    let runs = replicate_estimates(plan, ps, estimator)?;
    let measure = spectral_measure(&plan.model);
    ps.iter()
        .enumerate()
        .map(|(j, &p)| {
            let column: Vec<f64> = runs.iter().map(|r| r[j].lambda_hat).collect();
            Ok(EstimateSummary {
                model: plan.model.label(),
                p,
                kind: estimator.kind(),
                n: plan.n,
                true_quantile: measure.quantile(p)?,
                single: column[0],
                mean: mean(&column),
                sd: if column.len() > 1 {
                    sample_variance(&column).sqrt()
                } else {
                    0.0
                },
                replications: column.len(),
            })
        })
        .collect()
}
