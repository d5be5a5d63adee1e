use serde::{Deserialize, Serialize};

use super::{draw_rows, fit_pipeline, CountryData, TransferError};
use crate::data::{CountrySeries, Dataset, YearSpan};
use crate::exec::Execution;
use crate::metrics::{r_squared, rmse, rrmse, PredictionPairs};
use crate::regress::{Hyperparameters, Method, RegressorSpec};

/// Minimum complete years before a one-third validation split is useful.
pub const MIN_COMPLETE_YEARS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationSplit {
    /// A seeded random third of the complete years.
    #[default]
    SeededRandom,
    /// The latest third of the complete years.
    ChronologicalLast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MissingOptions {
    pub validation: ValidationSplit,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub regressor: Method,
    pub source: String,
    pub rmse: Option<f64>,
    pub r2: Option<f64>,
    pub rrmse: Option<f64>,
    pub hyperparameters: Option<Hyperparameters>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearEstimate {
    pub year: i32,
    pub predicted_gdp: f64,
}

/// Previously published selection for a country, kept for side-by-side
/// comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSelection {
    pub regressor: Method,
    pub source: String,
    pub rmse: f64,
    pub r2: f64,
    pub rrmse: f64,
    pub missing_windows: Vec<YearSpan>,
}

pub fn reference_selection(country: &str) -> Option<ReferenceSelection> {
    let span = |start, end| YearSpan { start, end };
    let (regressor, source, rmse, r2, rrmse, windows) = match country {
        "AFG" => (
            Method::Svr,
            "IND",
            49.21,
            0.48,
            0.24,
            vec![span(1982, 2000)],
        ),
        "IRQ" => (
            Method::Elm,
            "CMR",
            2080.72,
            0.44,
            1.07,
            vec![span(1965, 1967), span(1991, 2003)],
        ),
        "MMR" => (
            Method::Elm,
            "EU",
            201.03,
            0.74,
            0.67,
            vec![span(1960, 1999)],
        ),
        "SYR" => (
            Method::Grnn,
            "IND",
            410.94,
            0.51,
            0.54,
            vec![span(2008, 2014)],
        ),
        "YEM" => (
            Method::Grnn,
            "CMR",
            399.01,
            0.69,
            0.30,
            vec![span(1960, 1989)],
        ),
        "CHE" => (
            Method::Elm,
            "EU",
            9462.41,
            0.94,
            0.38,
            vec![span(1970, 1979)],
        ),
        "POL" => (
            Method::Grnn,
            "USA",
            793.79,
            0.90,
            0.20,
            vec![span(1960, 1989)],
        ),
        _ => return None,
    };
    Some(ReferenceSelection {
        regressor,
        source: source.to_string(),
        rmse,
        r2,
        rrmse,
        missing_windows: windows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingEstimateReport {
    pub country: String,
    pub country_name: String,
    pub options: MissingOptions,
    pub missing_windows: Vec<YearSpan>,
    pub validation_years: Vec<i32>,
    pub remainder_years: Vec<i32>,
    pub candidates: Vec<CandidateRow>,
    /// Index into `candidates`.
    pub selected: Option<usize>,
    pub estimates: Vec<YearEstimate>,
    pub nothing_to_do: bool,
    pub reference: Option<ReferenceSelection>,
}

impl MissingEstimateReport {
    pub fn selected_candidate(&self) -> Option<&CandidateRow> {
        self.selected.map(|i| &self.candidates[i])
    }
}

fn split_years(complete: &[i32], opts: MissingOptions) -> (Vec<i32>, Vec<i32>) {
    let n = complete.len();
    let n_val = ((n + 1) / 3).max(1);
    let val_rows: Vec<usize> = match opts.validation {
        ValidationSplit::ChronologicalLast => (n - n_val..n).collect(),
        ValidationSplit::SeededRandom => draw_rows(n, n_val, opts.seed),
    };
    let mut is_val = vec![false; n];
    for i in val_rows {
        is_val[i] = true;
    }
    let (mut val, mut rest) = (Vec::new(), Vec::new());
    for (&year, v) in complete.iter().zip(is_val) {
        if v {
            val.push(year)
        } else {
            rest.push(year)
        }
    }
    (val, rest)
}

fn evaluate(
    source: &CountryData,
    spec: &RegressorSpec,
    remainder: &Dataset,
    validation: &Dataset,
    exec: Execution,
) -> CandidateRow {
    let mut row = CandidateRow {
        regressor: spec.method,
        source: source.code.clone(),
        rmse: None,
        r2: None,
        rrmse: None,
        hyperparameters: None,
        error: None,
    };
    let fitted = match fit_pipeline(&source.dataset.concat(remainder), spec, exec) {
        Ok(f) => f,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let predicted = fitted.predict(validation);
    match PredictionPairs::new(validation.labels(), &predicted) {
        Ok(pairs) => {
            row.rmse = Some(rmse(&pairs));
            row.r2 = r_squared(&pairs).ok();
            row.rrmse = rrmse(&pairs).ok();
            row.hyperparameters = Some(fitted.hyperparameters);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Picks the candidate with the lowest validation RMSE; on ties the earliest
/// in (regressor order, source code) wins.
fn select(candidates: &[CandidateRow], regressors: &[RegressorSpec]) -> Option<usize> {
    let rank = |m: Method| {
        regressors
            .iter()
            .position(|s| s.method == m)
            .unwrap_or(usize::MAX)
    };
    (0..candidates.len())
        .filter(|&i| candidates[i].rmse.is_some())
        .min_by(|&a, &b| {
            let (ca, cb) = (&candidates[a], &candidates[b]);
            ca.rmse
                .unwrap()
                .total_cmp(&cb.rmse.unwrap())
                .then(rank(ca.regressor).cmp(&rank(cb.regressor)))
                .then(ca.source.cmp(&cb.source))
        })
}

/// Validation-driven model selection for a country's missing GDP years.
///
/// The complete years are split into a validation third and a remainder.
/// Every (regressor, source) pair is trained on the source plus the
/// remainder and scored on the validation years. The winner is retrained on
/// the source plus every complete year and predicts each missing-GDP year
/// whose inputs are complete.
pub fn estimate_missing(
    country: &CountrySeries,
    sources: &[CountryData],
    regressors: &[RegressorSpec],
    opts: MissingOptions,
    exec: Execution,
) -> Result<MissingEstimateReport, TransferError> {
    let code = &country.country_code;
    let complete = country.complete_years();
    let targets = country.predictable_missing_years();
    let mut report = MissingEstimateReport {
        country: code.clone(),
        country_name: country.country_name.clone(),
        options: opts,
        missing_windows: country.missing_windows(),
        validation_years: Vec::new(),
        remainder_years: Vec::new(),
        candidates: Vec::new(),
        selected: None,
        estimates: Vec::new(),
        nothing_to_do: targets.is_empty(),
        reference: reference_selection(code),
    };
    if report.nothing_to_do {
        return Ok(report);
    }
    if complete.len() < MIN_COMPLETE_YEARS {
        return Err(TransferError::Precondition(format!(
            "{code} has {} complete years, need at least {MIN_COMPLETE_YEARS}",
            complete.len()
        )));
    }
    let mut pool: Vec<&CountryData> = sources.iter().filter(|s| &s.code != code).collect();
    if pool.is_empty() {
        return Err(TransferError::Precondition(format!(
            "no candidate sources for {code}"
        )));
    }
    pool.sort_by(|a, b| a.code.cmp(&b.code));
    if regressors.is_empty() {
        return Err(TransferError::Precondition(
            "no regressors configured".into(),
        ));
    }

    let (val_years, rest_years) = split_years(&complete, opts);
    let ingest = |e: crate::data::IngestError| TransferError::Precondition(e.to_string());
    let validation = country.training_dataset_for(&val_years).map_err(ingest)?;
    let remainder = country.training_dataset_for(&rest_years).map_err(ingest)?;
    report.validation_years = val_years;
    report.remainder_years = rest_years;

    let pairs: Vec<(&RegressorSpec, &CountryData)> = regressors
        .iter()
        .flat_map(|spec| pool.iter().map(move |src| (spec, *src)))
        .collect();
    report.candidates = exec.map(&pairs, |(spec, src)| {
        evaluate(src, spec, &remainder, &validation, exec)
    });
    let Some(best) = select(&report.candidates, regressors) else {
        return Err(TransferError::AllCandidatesFailed(
            report
                .candidates
                .iter()
                .map(|c| {
                    format!(
                        "{}/{}: {}",
                        c.regressor,
                        c.source,
                        c.error.as_deref().unwrap_or("?")
                    )
                })
                .collect(),
        ));
    };
    report.selected = Some(best);

    let winner = &report.candidates[best];
    let spec = regressors
        .iter()
        .find(|s| s.method == winner.regressor)
        .expect("winner comes from regressors");
    let source = pool
        .iter()
        .find(|s| s.code == winner.source)
        .expect("winner comes from sources");
    let all_complete = country.to_training_dataset().map_err(ingest)?;
    let fitted = fit_pipeline(&source.dataset.concat(&all_complete), spec, exec).map_err(|e| {
        TransferError::Fit {
            context: format!("{code} final {}/{}", winner.regressor, winner.source),
            source: e,
        }
    })?;
    let inputs = country.to_prediction_dataset(&targets).map_err(ingest)?;
    report.estimates = inputs
        .years()
        .iter()
        .zip(fitted.predict(&inputs))
        .map(|(&year, predicted_gdp)| YearEstimate {
            year,
            predicted_gdp,
        })
        .collect();
    Ok(report)
}
