use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{datl_run, EvalReport, MixingPolicy, TransferConfig, TransferError};
use crate::data::Dataset;
use crate::exec::Execution;
use crate::fraction::Fraction;
use crate::metrics::improvement_pct;
use crate::regress::{Method, RegressorSpec};

/// A country's complete rows under its code.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryData {
    pub code: String,
    pub dataset: Dataset,
}

impl CountryData {
    pub fn new(code: impl Into<String>, dataset: Dataset) -> Self {
        CountryData {
            code: code.into(),
            dataset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub source: String,
    pub target: String,
    pub regressor: Method,
    pub td_fraction: Fraction,
    pub error: String,
}

/// One cell of an experiment; failures are kept in place so the grid stays
/// rectangular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunOutcome {
    Ok(Box<EvalReport>),
    Failed(RunFailure),
}

impl RunOutcome {
    pub fn source(&self) -> &str {
        match self {
            RunOutcome::Ok(r) => &r.config.source,
            RunOutcome::Failed(f) => &f.source,
        }
    }

    pub fn target(&self) -> &str {
        match self {
            RunOutcome::Ok(r) => &r.config.target,
            RunOutcome::Failed(f) => &f.target,
        }
    }

    pub fn regressor(&self) -> Method {
        match self {
            RunOutcome::Ok(r) => r.regressor,
            RunOutcome::Failed(f) => f.regressor,
        }
    }

    pub fn td_fraction(&self) -> Fraction {
        match self {
            RunOutcome::Ok(r) => r.config.td_fraction,
            RunOutcome::Failed(f) => f.td_fraction,
        }
    }

    pub fn report(&self) -> Option<&EvalReport> {
        match self {
            RunOutcome::Ok(r) => Some(r),
            RunOutcome::Failed(_) => None,
        }
    }
}

fn check_countries(countries: &[CountryData]) -> Result<(), TransferError> {
    if countries.len() < 2 {
        return Err(TransferError::TooFewCountries(countries.len()));
    }
    let mut seen = BTreeSet::new();
    for c in countries {
        if !seen.insert(c.code.as_str()) {
            return Err(TransferError::DuplicateCountry(c.code.clone()));
        }
    }
    Ok(())
}

struct Job<'a> {
    source: &'a CountryData,
    target: &'a CountryData,
    spec: &'a RegressorSpec,
    fraction: Fraction,
}

fn run_jobs(jobs: &[Job<'_>], mixing: MixingPolicy, seed: u64, exec: Execution) -> Vec<RunOutcome> {
    exec.map(jobs, |job| {
        let cfg = TransferConfig {
            source: job.source.code.clone(),
            target: job.target.code.clone(),
            td_fraction: job.fraction,
            mixing,
            seed,
            regressor: job.spec.clone(),
        };
        match datl_run(&job.source.dataset, &job.target.dataset, &cfg, exec) {
            Ok(r) => RunOutcome::Ok(Box::new(r)),
            Err(e) => RunOutcome::Failed(RunFailure {
                source: cfg.source,
                target: cfg.target,
                regressor: job.spec.method,
                td_fraction: job.fraction,
                error: e.to_string(),
            }),
        }
    })
}

fn ordered_jobs<'a>(
    countries: &'a [CountryData],
    regressors: &'a [RegressorSpec],
    fraction: Fraction,
    out: &mut Vec<Job<'a>>,
) {
    for source in countries {
        for target in countries.iter().filter(|t| t.code != source.code) {
            for spec in regressors {
                out.push(Job {
                    source,
                    target,
                    spec,
                    fraction,
                });
            }
        }
    }
}

/// Every ordered (source, target) pair with source != target, crossed with
/// every regressor. Results come back source-major, then target, then
/// regressor, in the order given.
pub fn pairwise_matrix(
    countries: &[CountryData],
    regressors: &[RegressorSpec],
    td_fraction: Fraction,
    mixing: MixingPolicy,
    seed: u64,
    exec: Execution,
) -> Result<Vec<RunOutcome>, TransferError> {
    check_countries(countries)?;
    let mut jobs = Vec::new();
    ordered_jobs(countries, regressors, td_fraction, &mut jobs);
    Ok(run_jobs(&jobs, mixing, seed, exec))
}

/// Mean RMSE per regressor at each fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub regressor: Method,
    /// Mean over successful pairs, one entry per fraction.
    pub mean_rmse: Vec<Option<f64>>,
    /// Successful pairs behind each mean.
    pub successes: Vec<usize>,
    /// Improvement over the zero-fraction mean, in percent.
    pub improvement_pct: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub fractions: Vec<Fraction>,
    pub rows: Vec<SweepRow>,
    pub outcomes: Vec<RunOutcome>,
}

/// Runs the pairwise matrix at each fraction and aggregates RMSE.
pub fn td_sweep(
    countries: &[CountryData],
    regressors: &[RegressorSpec],
    fractions: &[Fraction],
    mixing: MixingPolicy,
    seed: u64,
    exec: Execution,
) -> Result<SweepResult, TransferError> {
    check_countries(countries)?;
    if fractions.is_empty() {
        return Err(TransferError::Precondition("no fractions to sweep".into()));
    }
    if fractions.iter().collect::<BTreeSet<_>>().len() != fractions.len() {
        return Err(TransferError::Precondition(
            "fractions must be distinct".into(),
        ));
    }
    let mut jobs = Vec::new();
    for &f in fractions {
        ordered_jobs(countries, regressors, f, &mut jobs);
    }
    let outcomes = run_jobs(&jobs, mixing, seed, exec);

    let baseline_col = fractions.iter().position(|f| f.is_zero());
    let rows = regressors
        .iter()
        .map(|spec| {
            let (mean_rmse, successes): (Vec<Option<f64>>, Vec<usize>) = fractions
                .iter()
                .map(|&f| {
                    let vals: Vec<f64> = outcomes
                        .iter()
                        .filter(|o| o.td_fraction() == f && o.regressor() == spec.method)
                        .filter_map(|o| o.report().map(|r| r.rmse))
                        .collect();
                    let mean =
                        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
                    (mean, vals.len())
                })
                .unzip();
            let base = baseline_col.and_then(|c| mean_rmse[c]);
            let improvement_pct = mean_rmse
                .iter()
                .map(|m| improvement_pct(base?, (*m)?).ok())
                .collect();
            SweepRow {
                regressor: spec.method,
                mean_rmse,
                successes,
                improvement_pct,
            }
        })
        .collect();
    Ok(SweepResult {
        fractions: fractions.to_vec(),
        rows,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureRow;

    fn country(code: &str, shift: f64) -> CountryData {
        let n = 24;
        let features: Vec<FeatureRow> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                [
                    10.0 + 4.0 * t + shift,
                    55.0 - 2.0 * t,
                    35.0 - 2.0 * t - shift,
                    0.5 + t + 0.2 * shift,
                ]
            })
            .collect();
        let labels = features
            .iter()
            .map(|r| 400.0 + 900.0 * r[3] + 15.0 * r[0])
            .collect();
        CountryData::new(
            code,
            Dataset::new(
                (1990..1990 + n as i32).collect(),
                features,
                labels,
                vec![code.into(); n],
            )
            .unwrap(),
        )
    }

    fn quick_specs() -> Vec<RegressorSpec> {
        vec![
            RegressorSpec::grnn(vec![0.5, 1.0]),
            RegressorSpec {
                c_values: Some(vec![10.0]),
                gammas: Some(vec![0.25]),
                ..RegressorSpec::new(Method::Elm)
            },
        ]
    }

    #[test]
    fn matrix_order_and_size() {
        let cs = vec![
            country("AAA", 0.0),
            country("BBB", 1.0),
            country("CCC", 2.0),
        ];
        let out = pairwise_matrix(
            &cs,
            &quick_specs(),
            Fraction::ZERO,
            MixingPolicy::EarliestYears,
            1,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(out.len(), 3 * 2 * 2);
        let keys: Vec<(String, String, Method)> = out
            .iter()
            .map(|o| {
                (
                    o.source().to_string(),
                    o.target().to_string(),
                    o.regressor(),
                )
            })
            .collect();
        assert_eq!(keys[0], ("AAA".into(), "BBB".into(), Method::Grnn));
        assert_eq!(keys[1], ("AAA".into(), "BBB".into(), Method::Elm));
        assert_eq!(keys[2], ("AAA".into(), "CCC".into(), Method::Grnn));
        assert_eq!(keys[11], ("CCC".into(), "BBB".into(), Method::Elm));
        assert!(out.iter().all(|o| o.source() != o.target()));
    }

    #[test]
    fn parallel_matches_sequential() {
        let cs = vec![
            country("AAA", 0.0),
            country("BBB", 1.0),
            country("CCC", -1.0),
        ];
        let f = Fraction::new(1, 6).unwrap();
        let a = pairwise_matrix(
            &cs,
            &quick_specs(),
            f,
            MixingPolicy::SeededRandom,
            3,
            Execution::Sequential,
        )
        .unwrap();
        let b = pairwise_matrix(
            &cs,
            &quick_specs(),
            f,
            MixingPolicy::SeededRandom,
            3,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_country_lists() {
        let one = vec![country("AAA", 0.0)];
        assert!(matches!(
            pairwise_matrix(
                &one,
                &quick_specs(),
                Fraction::ZERO,
                MixingPolicy::EarliestYears,
                0,
                Execution::Sequential
            ),
            Err(TransferError::TooFewCountries(1))
        ));
        let dup = vec![country("AAA", 0.0), country("AAA", 1.0)];
        assert!(matches!(
            pairwise_matrix(
                &dup,
                &quick_specs(),
                Fraction::ZERO,
                MixingPolicy::EarliestYears,
                0,
                Execution::Sequential
            ),
            Err(TransferError::DuplicateCountry(_))
        ));
    }

    #[test]
    fn failures_stay_in_place() {
        let cs = vec![country("AAA", 0.0), country("BBB", 1.0)];
        let bad = RegressorSpec::grnn(vec![-1.0]);
        let specs = vec![quick_specs()[0].clone(), bad];
        let out = pairwise_matrix(
            &cs,
            &specs,
            Fraction::ZERO,
            MixingPolicy::EarliestYears,
            0,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(out.len(), 4);
        assert!(out[0].report().is_some());
        assert!(matches!(out[1], RunOutcome::Failed(_)));
        assert!(matches!(out[3], RunOutcome::Failed(_)));
    }

    #[test]
    fn sweep_aggregates() {
        let cs = vec![country("AAA", 0.0), country("BBB", 1.5)];
        let fr = Fraction::standard_sweep();
        let s = td_sweep(
            &cs,
            &quick_specs(),
            &fr,
            MixingPolicy::EarliestYears,
            0,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(s.outcomes.len(), fr.len() * 2 * 2);
        for row in &s.rows {
            assert_eq!(row.successes, vec![2; fr.len()]);
            assert_eq!(row.improvement_pct[0], Some(0.0));
            let expected: Vec<f64> = s
                .outcomes
                .iter()
                .filter(|o| o.regressor() == row.regressor && o.td_fraction() == fr[3])
                .map(|o| o.report().unwrap().rmse)
                .collect();
            let mean = expected.iter().sum::<f64>() / 2.0;
            assert!((row.mean_rmse[3].unwrap() - mean).abs() < 1e-9);
        }
        assert!(td_sweep(
            &cs,
            &quick_specs(),
            &[],
            MixingPolicy::EarliestYears,
            0,
            Execution::Sequential
        )
        .is_err());
    }
}
