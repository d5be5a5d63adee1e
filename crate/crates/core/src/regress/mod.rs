//! Regressors behind one fit/predict contract, plus validation grid search.

mod elm;
mod grnn;
mod qp_oracle;
mod svr;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use elm::{default_hidden_nodes, ElmModel, RandomElmModel};
pub use grnn::GrnnModel;
pub use qp_oracle::{qp_oracle, OracleSolution, MAX_ORACLE_ROWS};
pub use svr::{SvrModel, SvrOptions};

use crate::data::{Dataset, FeatureRow, FEATURE_DIM};
use crate::exec::Execution;
use crate::kernel::{mean_pairwise_distance, KernelKind, KernelSpec};
use crate::metrics::{rmse, PredictionPairs};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("invalid hyperparameter {name} = {value}")]
    InvalidHyperparameter { name: &'static str, value: f64 },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("validation set is empty")]
    EmptyValidationSet,
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("no convergence after {updates} updates (KKT violation {violation:e})")]
    NoConvergence { violation: f64, updates: usize },
    #[error("dense oracle limited to {MAX_ORACLE_ROWS} rows, got {0}")]
    OracleTooLarge(usize),
    #[error("all {} grid candidates failed: {}", .0.len(), .0.join("; "))]
    AllCandidatesFailed(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Grnn,
    Elm,
    Svr,
    /// Random-hidden-node ELM; a reference variant, not used by default.
    ElmRandom,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Grnn => "grnn",
            Method::Elm => "elm",
            Method::Svr => "svr",
            Method::ElmRandom => "elm-random",
        }
    }

    /// Upper-case label used in tables (`GRNN`, `ELM`, `SVR`).
    pub fn label(self) -> &'static str {
        match self {
            Method::Grnn => "GRNN",
            Method::Elm => "ELM",
            Method::Svr => "SVR",
            Method::ElmRandom => "ELM-RANDOM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "grnn" => Ok(Method::Grnn),
            "elm" => Ok(Method::Elm),
            "svr" => Ok(Method::Svr),
            "elm-random" => Ok(Method::ElmRandom),
            other => Err(format!(
                "unknown regressor {other:?} (expected grnn, elm, svr or elm-random)"
            )),
        }
    }
}

/// A regression method with its hyperparameter grid. `None` entries fall back
/// to data-dependent defaults resolved by [`RegressorSpec::grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressorSpec {
    pub method: Method,
    #[serde(default)]
    pub kernel: KernelKind,
    /// GRNN spreads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
    /// ELM and SVR regularization constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_values: Option<Vec<f64>>,
    /// RBF bandwidths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    /// SVR tube half-widths, in label units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    /// Hidden node count for the random ELM.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// One concrete hyperparameter setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Hyperparameters {
    Grnn {
        sigma: f64,
    },
    Elm {
        kernel: KernelSpec,
        c: f64,
    },
    Svr {
        kernel: KernelSpec,
        c: f64,
        epsilon: f64,
    },
    ElmRandom {
        hidden_nodes: usize,
        seed: u64,
    },
}

impl fmt::Display for Hyperparameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyperparameters::Grnn { sigma } => write!(f, "sigma={sigma}"),
            Hyperparameters::Elm { kernel, c } => write!(f, "C={c} gamma={}", kernel.gamma),
            Hyperparameters::Svr { kernel, c, epsilon } => {
                write!(f, "C={c} epsilon={epsilon} gamma={}", kernel.gamma)
            }
            Hyperparameters::ElmRandom { hidden_nodes, seed } => {
                write!(f, "M={hidden_nodes} seed={seed}")
            }
        }
    }
}

pub const DEFAULT_C_VALUES: [f64; 5] = [1.0, 10.0, 100.0, 1e3, 1e4];
pub const DEFAULT_EPSILON_FACTORS: [f64; 3] = [0.01, 0.05, 0.1];
pub const DEFAULT_SIGMA_FACTORS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

pub fn default_gammas() -> Vec<f64> {
    [0.01, 0.1, 1.0, 10.0]
        .iter()
        .map(|g| g / FEATURE_DIM as f64)
        .collect()
}

fn population_stdev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

impl RegressorSpec {
    pub fn new(method: Method) -> Self {
        RegressorSpec {
            method,
            kernel: KernelKind::Rbf,
            sigmas: None,
            c_values: None,
            gammas: None,
            epsilons: None,
            hidden_nodes: None,
            seed: None,
        }
    }

    pub fn grnn(sigmas: Vec<f64>) -> Self {
        RegressorSpec {
            sigmas: Some(sigmas),
            ..Self::new(Method::Grnn)
        }
    }

    /// GRNN, kernel ELM and SVR with default grids.
    pub fn standard_trio() -> Vec<RegressorSpec> {
        vec![
            Self::new(Method::Grnn),
            Self::new(Method::Elm),
            Self::new(Method::Svr),
        ]
    }

    fn kernels(&self) -> Vec<KernelSpec> {
        match self.kernel {
            KernelKind::Linear => vec![KernelSpec::linear()],
            KernelKind::Rbf => self
                .gammas
                .clone()
                .unwrap_or_else(default_gammas)
                .into_iter()
                .map(KernelSpec::rbf)
                .collect(),
        }
    }

    /// Grid points in enumeration order. Defaults that depend on data are
    /// computed from `train` (standardized inputs, raw labels):
    /// GRNN spreads are multiples of the mean pairwise input distance, SVR
    /// tube widths are multiples of the label standard deviation.
    pub fn grid(&self, train: &Dataset) -> Result<Vec<Hyperparameters>, FitError> {
        let positive = |name: &'static str, v: &[f64]| -> Result<(), FitError> {
            match v.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
                Some(&value) => Err(FitError::InvalidHyperparameter { name, value }),
                None => Ok(()),
            }
        };
        let grid: Vec<Hyperparameters> = match self.method {
            Method::Grnn => {
                let sigmas = match &self.sigmas {
                    Some(s) => s.clone(),
                    None => {
                        let d = mean_pairwise_distance(train.features());
                        let base = if d > 0.0 { d } else { 1.0 };
                        DEFAULT_SIGMA_FACTORS.iter().map(|f| f * base).collect()
                    }
                };
                positive("sigma", &sigmas)?;
                sigmas
                    .into_iter()
                    .map(|sigma| Hyperparameters::Grnn { sigma })
                    .collect()
            }
            Method::Elm => {
                let cs = self.c_values.clone().unwrap_or(DEFAULT_C_VALUES.to_vec());
                // C = inf is plain kernel interpolation
                if let Some(&value) = cs.iter().find(|c| !(**c > 0.0)) {
                    return Err(FitError::InvalidHyperparameter { name: "C", value });
                }
                let kernels = self.kernels();
                positive(
                    "gamma",
                    &kernels.iter().map(|k| k.gamma).collect::<Vec<_>>(),
                )?;
                cs.iter()
                    .flat_map(|&c| {
                        kernels
                            .iter()
                            .map(move |&kernel| Hyperparameters::Elm { kernel, c })
                    })
                    .collect()
            }
            Method::Svr => {
                let cs = self.c_values.clone().unwrap_or(DEFAULT_C_VALUES.to_vec());
                positive("C", &cs)?;
                let epsilons = match &self.epsilons {
                    Some(e) => e.clone(),
                    None => {
                        let sd = if train.is_empty() {
                            0.0
                        } else {
                            population_stdev(train.labels())
                        };
                        DEFAULT_EPSILON_FACTORS.iter().map(|f| f * sd).collect()
                    }
                };
                if let Some(&value) = epsilons.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
                    return Err(FitError::InvalidHyperparameter {
                        name: "epsilon",
                        value,
                    });
                }
                let kernels = self.kernels();
                positive(
                    "gamma",
                    &kernels.iter().map(|k| k.gamma).collect::<Vec<_>>(),
                )?;
                let mut out = Vec::new();
                for &c in &cs {
                    for &epsilon in &epsilons {
                        for &kernel in &kernels {
                            out.push(Hyperparameters::Svr { kernel, c, epsilon });
                        }
                    }
                }
                out
            }
            Method::ElmRandom => vec![Hyperparameters::ElmRandom {
                hidden_nodes: self
                    .hidden_nodes
                    .unwrap_or(default_hidden_nodes(train.len())),
                seed: self.seed.unwrap_or(0),
            }],
        };
        if grid.is_empty() {
            return Err(FitError::EmptyGrid);
        }
        Ok(grid)
    }
}

/// A fitted regressor. Immutable; prediction is a pure function of the model
/// and the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum TrainedModel {
    Grnn(GrnnModel),
    Elm(ElmModel),
    Svr(SvrModel),
    ElmRandom(RandomElmModel),
}

impl TrainedModel {
    pub fn fit(h: &Hyperparameters, train: &Dataset) -> Result<TrainedModel, FitError> {
        Ok(match *h {
            Hyperparameters::Grnn { sigma } => TrainedModel::Grnn(GrnnModel::fit(train, sigma)?),
            Hyperparameters::Elm { kernel, c } => {
                TrainedModel::Elm(ElmModel::fit(train, kernel, c)?)
            }
            Hyperparameters::Svr { kernel, c, epsilon } => {
                TrainedModel::Svr(SvrModel::fit(train, kernel, c, epsilon)?)
            }
            Hyperparameters::ElmRandom { hidden_nodes, seed } => {
                TrainedModel::ElmRandom(RandomElmModel::fit(train, hidden_nodes, seed)?)
            }
        })
    }

    pub fn method(&self) -> Method {
        match self {
            TrainedModel::Grnn(_) => Method::Grnn,
            TrainedModel::Elm(_) => Method::Elm,
            TrainedModel::Svr(_) => Method::Svr,
            TrainedModel::ElmRandom(_) => Method::ElmRandom,
        }
    }

    pub fn predict(&self, x: &FeatureRow) -> f64 {
        match self {
            TrainedModel::Grnn(m) => m.predict(x),
            TrainedModel::Elm(m) => m.predict(x),
            TrainedModel::Svr(m) => m.predict(x),
            TrainedModel::ElmRandom(m) => m.predict(x),
        }
    }

    pub fn predict_all(&self, rows: &[FeatureRow]) -> Vec<f64> {
        rows.iter().map(|x| self.predict(x)).collect()
    }
}

/// Outcome of one grid point during search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCandidate {
    pub hyperparameters: Hyperparameters,
    pub validation_rmse: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub model: TrainedModel,
    pub hyperparameters: Hyperparameters,
    pub validation_rmse: f64,
    pub candidates: Vec<GridCandidate>,
}

fn validation_rmse(model: &TrainedModel, validation: &Dataset) -> Result<f64, String> {
    let predicted = model.predict_all(validation.features());
    let pairs = PredictionPairs::new(validation.labels(), &predicted).map_err(|e| e.to_string())?;
    Ok(rmse(&pairs))
}

/// Fits every grid point on `train` and keeps the one with the lowest RMSE on
/// `validation`. Ties go to the earliest grid point.
pub fn grid_search(
    spec: &RegressorSpec,
    train: &Dataset,
    validation: &Dataset,
    exec: Execution,
) -> Result<GridSearchResult, FitError> {
    if validation.is_empty() {
        return Err(FitError::EmptyValidationSet);
    }
    let grid = spec.grid(train)?;
    let fitted = exec.map(&grid, |h| {
        TrainedModel::fit(h, train)
            .map_err(|e| e.to_string())
            .and_then(|m| validation_rmse(&m, validation).map(|r| (m, r)))
    });

    let mut best: Option<(usize, TrainedModel, f64)> = None;
    let mut candidates = Vec::with_capacity(grid.len());
    for (i, (h, outcome)) in grid.iter().zip(fitted).enumerate() {
        match outcome {
            Ok((model, r)) => {
                candidates.push(GridCandidate {
                    hyperparameters: *h,
                    validation_rmse: Some(r),
                    error: None,
                });
                if best.as_ref().is_none_or(|(_, _, b)| r < *b) {
                    best = Some((i, model, r));
                }
            }
            Err(e) => candidates.push(GridCandidate {
                hyperparameters: *h,
                validation_rmse: None,
                error: Some(e),
            }),
        }
    }
    match best {
        Some((i, model, r)) => Ok(GridSearchResult {
            model,
            hyperparameters: grid[i],
            validation_rmse: r,
            candidates,
        }),
        None => Err(FitError::AllCandidatesFailed(
            candidates
                .into_iter()
                .map(|c| format!("{}: {}", c.hyperparameters, c.error.unwrap_or_default()))
                .collect(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(rows: Vec<FeatureRow>, labels: Vec<f64>) -> Dataset {
        let n = rows.len();
        Dataset::new((0..n as i32).collect(), rows, labels, vec!["X".into(); n]).unwrap()
    }

    /// Sine riding on a line, sampled along one axis.
    fn sine_over_line(n: usize, offset: f64) -> Dataset {
        let rows: Vec<FeatureRow> = (0..n)
            .map(|i| {
                let t = offset + 6.0 * i as f64 / n as f64;
                [t, 0.0, 0.0, 0.0]
            })
            .collect();
        let labels = rows.iter().map(|r| r[0] + r[0].sin()).collect();
        dataset(rows, labels)
    }

    #[test]
    fn single_point_grid() {
        let train = sine_over_line(20, 0.0);
        let val = sine_over_line(7, 0.1);
        let r = grid_search(
            &RegressorSpec::grnn(vec![0.3]),
            &train,
            &val,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(r.hyperparameters, Hyperparameters::Grnn { sigma: 0.3 });
        assert_eq!(r.candidates.len(), 1);
    }

    #[test]
    fn smooth_sigma_beats_nearest_neighbour() {
        let train = sine_over_line(30, 0.0);
        let val = sine_over_line(11, 0.137);
        let tuned = 0.2;
        // direct evaluation of both candidates
        let rmse_of = |sigma: f64| {
            let m = GrnnModel::fit(&train, sigma).unwrap();
            let p: Vec<f64> = val.features().iter().map(|x| m.predict(x)).collect();
            rmse(&PredictionPairs::new(val.labels(), &p).unwrap())
        };
        let (tiny, good) = (rmse_of(1e-6), rmse_of(tuned));
        assert!(good < tiny, "tuned {good} vs tiny {tiny}");
        let r = grid_search(
            &RegressorSpec::grnn(vec![1e-6, tuned]),
            &train,
            &val,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(r.hyperparameters, Hyperparameters::Grnn { sigma: tuned });
        assert_eq!(r.validation_rmse, good);
    }

    #[test]
    fn ties_go_to_first_grid_point() {
        // one training point: every sigma predicts the same label
        let train = dataset(vec![[0.0; 4]], vec![3.0]);
        let val = dataset(vec![[1.0; 4], [2.0; 4]], vec![1.0, 2.0]);
        let r = grid_search(
            &RegressorSpec::grnn(vec![5.0, 1.0, 2.0]),
            &train,
            &val,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(r.hyperparameters, Hyperparameters::Grnn { sigma: 5.0 });
    }

    #[test]
    fn all_failures_aggregate() {
        let train = dataset(vec![[0.0; 4]; 3], vec![1.0, 2.0, 3.0]);
        let val = dataset(vec![[1.0; 4]], vec![1.0]);
        let spec = RegressorSpec {
            kernel: KernelKind::Linear,
            c_values: Some(vec![f64::MAX, f64::MAX]),
            ..RegressorSpec::new(Method::Elm)
        };
        // positive but enormous C leaves a zero Gram matrix with a ridge that vanishes
        match grid_search(&spec, &train, &val, Execution::Sequential) {
            Err(FitError::AllCandidatesFailed(causes)) => assert_eq!(causes.len(), 2),
            other => panic!("expected aggregated failure, got {other:?}"),
        }
    }

    #[test]
    fn grid_validation() {
        let train = sine_over_line(10, 0.0);
        assert!(RegressorSpec::grnn(vec![]).grid(&train).is_err());
        assert!(RegressorSpec::grnn(vec![1.0, -1.0]).grid(&train).is_err());
        let svr = RegressorSpec {
            epsilons: Some(vec![0.0]),
            ..RegressorSpec::new(Method::Svr)
        };
        assert_eq!(svr.grid(&train).unwrap().len(), 5 * 4);
        assert_eq!(
            RegressorSpec::new(Method::Svr).grid(&train).unwrap().len(),
            60
        );
        assert_eq!(
            RegressorSpec::new(Method::Elm).grid(&train).unwrap().len(),
            20
        );
        assert_eq!(
            RegressorSpec::new(Method::Grnn).grid(&train).unwrap().len(),
            4
        );
        assert!(grid_search(
            &RegressorSpec::grnn(vec![1.0]),
            &train,
            &Dataset::empty(),
            Execution::Sequential
        )
        .is_err());
    }

    #[test]
    fn default_sigma_grid_brackets_mean_distance() {
        let train = sine_over_line(10, 0.0);
        let d = mean_pairwise_distance(train.features());
        let grid = RegressorSpec::new(Method::Grnn).grid(&train).unwrap();
        let sigmas: Vec<f64> = grid
            .iter()
            .map(|h| match h {
                Hyperparameters::Grnn { sigma } => *sigma,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(sigmas, vec![0.25 * d, 0.5 * d, d, 2.0 * d]);
    }

    #[test]
    fn svr_grid_order_is_c_then_epsilon_then_gamma() {
        let spec = RegressorSpec {
            c_values: Some(vec![1.0, 2.0]),
            epsilons: Some(vec![0.1, 0.2]),
            gammas: Some(vec![0.5, 1.5]),
            ..RegressorSpec::new(Method::Svr)
        };
        let grid = spec.grid(&sine_over_line(5, 0.0)).unwrap();
        assert_eq!(grid.len(), 8);
        assert_eq!(
            grid[1],
            Hyperparameters::Svr {
                kernel: KernelSpec::rbf(1.5),
                c: 1.0,
                epsilon: 0.1
            }
        );
        assert_eq!(
            grid[2],
            Hyperparameters::Svr {
                kernel: KernelSpec::rbf(0.5),
                c: 1.0,
                epsilon: 0.2
            }
        );
    }

    #[test]
    fn method_parsing() {
        assert_eq!("GRNN".parse::<Method>().unwrap(), Method::Grnn);
        assert!("knn".parse::<Method>().is_err());
    }
}
