//! Domain-adapted transfer: train on all source-country rows plus a share of
//! the target country's rows, then predict the target's GDP.

mod experiments;
mod missing;
mod pipeline;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use experiments::{
    pairwise_matrix, td_sweep, CountryData, RunFailure, RunOutcome, SweepResult, SweepRow,
};
pub use missing::{
    estimate_missing, reference_selection, CandidateRow, MissingEstimateReport, MissingOptions,
    ReferenceSelection, ValidationSplit, YearEstimate,
};
pub use pipeline::{fit_pipeline, FittedPipeline};

use crate::data::Dataset;
use crate::exec::Execution;
use crate::fraction::Fraction;
use crate::metrics::{r_squared, rmse, rrmse, MetricError, PredictionPairs};
use crate::regress::{FitError, Hyperparameters, Method, RegressorSpec};

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("source dataset is empty")]
    EmptySource,
    #[error("target dataset is empty")]
    EmptyTarget,
    #[error("fraction {fraction} of {target_rows} target rows needs {needed} rows")]
    InfeasibleFraction {
        fraction: Fraction,
        target_rows: usize,
        needed: usize,
    },
    #[error("{context}: {source}")]
    Fit {
        context: String,
        #[source]
        source: FitError,
    },
    #[error("{context}: {source}")]
    Metric {
        context: String,
        #[source]
        source: MetricError,
    },
    #[error("need at least two countries, got {0}")]
    TooFewCountries(usize),
    #[error("country {0} listed more than once")]
    DuplicateCountry(String),
    #[error("{0}")]
    Precondition(String),
    #[error("all candidates failed: {}", .0.join("; "))]
    AllCandidatesFailed(Vec<String>),
}

/// Which target rows enter the mixed training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingPolicy {
    /// The chronologically first `k` target rows.
    #[default]
    EarliestYears,
    /// `k` rows drawn without replacement from the seed.
    SeededRandom,
}

impl fmt::Display for MixingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MixingPolicy::EarliestYears => "earliest_years",
            MixingPolicy::SeededRandom => "seeded_random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    pub source: String,
    pub target: String,
    pub td_fraction: Fraction,
    pub mixing: MixingPolicy,
    pub seed: u64,
    pub regressor: RegressorSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedDomain {
    pub data: Dataset,
    /// Target years included in `data`, ascending.
    pub mixed_target_years: Vec<i32>,
    /// Positions of those rows within the target dataset, ascending.
    pub mixed_target_rows: Vec<usize>,
}

/// Picks `k` of `n` row positions, returned ascending.
pub(crate) fn draw_rows(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = rand::seq::index::sample(&mut rng, n, k).into_vec();
    rows.sort_unstable();
    rows
}

/// All source rows followed by `round(fraction * target.len())` target rows.
pub fn construct_mixed_domain(
    source: &Dataset,
    target: &Dataset,
    fraction: Fraction,
    policy: MixingPolicy,
    seed: u64,
) -> Result<MixedDomain, TransferError> {
    if source.is_empty() {
        return Err(TransferError::EmptySource);
    }
    let k = fraction.count_of(target.len());
    if k > target.len() {
        return Err(TransferError::InfeasibleFraction {
            fraction,
            target_rows: target.len(),
            needed: k,
        });
    }
    let rows: Vec<usize> = match policy {
        MixingPolicy::EarliestYears => {
            let mut order: Vec<usize> = (0..target.len()).collect();
            order.sort_by_key(|&i| (target.years()[i], i));
            let mut first: Vec<usize> = order.into_iter().take(k).collect();
            first.sort_unstable();
            first
        }
        MixingPolicy::SeededRandom => draw_rows(target.len(), k, seed),
    };
    let picked = target.select(&rows);
    let mut mixed_target_years = picked.years().to_vec();
    mixed_target_years.sort_unstable();
    Ok(MixedDomain {
        data: source.concat(&picked),
        mixed_target_years,
        mixed_target_rows: rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearPrediction {
    pub year: i32,
    pub actual: f64,
    pub predicted: f64,
    /// Whether this target row was part of the training mix.
    pub in_training: bool,
}

/// Metrics over target rows that were not mixed into training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeldOutMetrics {
    pub rows: usize,
    pub rmse: f64,
    pub r2: Option<f64>,
    pub rrmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: TransferConfig,
    pub regressor: Method,
    pub rmse: f64,
    pub r2: f64,
    pub rrmse: f64,
    pub held_out: Option<HeldOutMetrics>,
    pub per_year: Vec<YearPrediction>,
    pub chosen_hyperparameters: Hyperparameters,
    pub validation_rmse: Option<f64>,
}

impl EvalReport {
    pub fn summary_line(&self) -> String {
        format!(
            "{}-to-{} {} f={} RMSE={} R2={} RRMSE={}",
            self.config.source,
            self.config.target,
            self.regressor,
            self.config.td_fraction,
            self.rmse,
            self.r2,
            self.rrmse
        )
    }
}

fn held_out_metrics(rows: &[YearPrediction]) -> Option<HeldOutMetrics> {
    let (actual, predicted): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| !r.in_training)
        .map(|r| (r.actual, r.predicted))
        .unzip();
    let pairs = PredictionPairs::new(&actual, &predicted).ok()?;
    Some(HeldOutMetrics {
        rows: actual.len(),
        rmse: rmse(&pairs),
        r2: r_squared(&pairs).ok(),
        rrmse: rrmse(&pairs).ok(),
    })
}

/// Builds the mixed domain, trains the configured regressor on it and scores
/// the predictions over every target row.
pub fn datl_run(
    source: &Dataset,
    target: &Dataset,
    cfg: &TransferConfig,
    exec: Execution,
) -> Result<EvalReport, TransferError> {
    let context = || {
        format!(
            "{}-to-{} {} f={}",
            cfg.source, cfg.target, cfg.regressor.method, cfg.td_fraction
        )
    };
    let mixed = construct_mixed_domain(source, target, cfg.td_fraction, cfg.mixing, cfg.seed)?;
    if target.is_empty() {
        return Err(TransferError::EmptyTarget);
    }
    let fitted =
        fit_pipeline(&mixed.data, &cfg.regressor, exec).map_err(|source| TransferError::Fit {
            context: context(),
            source,
        })?;
    let predicted = fitted.predict(target);
    let pairs = PredictionPairs::new(target.labels(), &predicted).map_err(|source| {
        TransferError::Metric {
            context: context(),
            source,
        }
    })?;
    let metric = |r: Result<f64, MetricError>| {
        r.map_err(|source| TransferError::Metric {
            context: context(),
            source,
        })
    };
    let mut in_training = vec![false; target.len()];
    for &i in &mixed.mixed_target_rows {
        in_training[i] = true;
    }
    let per_year: Vec<YearPrediction> = (0..target.len())
        .map(|i| YearPrediction {
            year: target.years()[i],
            actual: target.labels()[i],
            predicted: predicted[i],
            in_training: in_training[i],
        })
        .collect();
    Ok(EvalReport {
        config: cfg.clone(),
        regressor: cfg.regressor.method,
        rmse: rmse(&pairs),
        r2: metric(r_squared(&pairs))?,
        rrmse: metric(rrmse(&pairs))?,
        held_out: held_out_metrics(&per_year),
        per_year,
        chosen_hyperparameters: fitted.hyperparameters,
        validation_rmse: fitted.validation_rmse,
    })
}
