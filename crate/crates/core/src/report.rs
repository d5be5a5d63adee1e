//! Report files: one authoritative JSON document per run plus CSV views
//! derived from it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fraction::Fraction;
use crate::transfer::{EvalReport, MissingEstimateReport, RunOutcome, SweepResult};

pub const REPORT_JSON: &str = "report.json";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{0}")]
    Precondition(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// SHA-256 of one input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_bytes(role: &str, path: &str, bytes: &[u8]) -> Self {
        InputDigest {
            role: role.to_string(),
            path: path.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }

    /// Reads `file` and records it under the display name `path`.
    pub fn of_file(role: &str, path: &str, file: &Path) -> Result<Self, ReportError> {
        let bytes = fs::read(file).map_err(io_err(file))?;
        Ok(Self::of_bytes(role, path, &bytes))
    }
}

/// Provenance attached to every report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    /// Seconds since the epoch from `SOURCE_DATE_EPOCH`; absent otherwise so
    /// that repeated runs stay byte-identical.
    pub timestamp: Option<u64>,
    /// Free-form findings recorded by the command that produced the run.
    #[serde(default)]
    pub observations: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(seed: u64, config: serde_json::Value, inputs: Vec<InputDigest>) -> Self {
        RunManifest {
            tool_version: format!("datl {}", env!("CARGO_PKG_VERSION")),
            seed,
            config,
            inputs,
            timestamp: std::env::var("SOURCE_DATE_EPOCH")
                .ok()
                .and_then(|v| v.trim().parse().ok()),
            observations: BTreeMap::new(),
        }
    }

    pub fn observe(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.observations.insert(key.to_string(), value);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportDocument {
    Eval {
        manifest: RunManifest,
        outcomes: Vec<RunOutcome>,
    },
    Sweep {
        manifest: RunManifest,
        sweep: SweepResult,
    },
    Missing {
        manifest: RunManifest,
        report: Box<MissingEstimateReport>,
    },
}

impl ReportDocument {
    pub fn manifest(&self) -> &RunManifest {
        match self {
            ReportDocument::Eval { manifest, .. }
            | ReportDocument::Sweep { manifest, .. }
            | ReportDocument::Missing { manifest, .. } => manifest,
        }
    }

    pub fn read(path: &Path) -> Result<Self, ReportError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| ReportError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), ReportError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|source| ReportError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        text.push('\n');
        write_file(path, text.as_bytes())
    }

    /// Writes the JSON document and every CSV view into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let json = dir.join(REPORT_JSON);
        self.write(&json)?;
        let mut written = vec![json];
        written.extend(self.render_csv(dir)?);
        Ok(written)
    }

    /// Regenerates the CSV views from the in-memory document.
    pub fn render_csv(&self, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
        match self {
            ReportDocument::Eval { outcomes, .. } => eval_csv(outcomes, dir),
            ReportDocument::Sweep { sweep, .. } => sweep_csv(sweep, dir),
            ReportDocument::Missing { report, .. } => missing_csv(report, dir),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

/// Builds a CSV in memory, then writes it in one go.
fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<PathBuf, ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    write_file(path, &bytes)?;
    Ok(path.to_path_buf())
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// File name for one experiment's per-year predictions.
pub fn pair_file_name(r: &EvalReport) -> String {
    format!(
        "{}-to-{}-{}.csv",
        r.config.source, r.config.target, r.regressor
    )
}

const SUMMARY_HEADER: [&str; 7] = [
    "source",
    "target",
    "regressor",
    "td_fraction",
    "rmse",
    "r2",
    "rrmse",
];

fn summary_row(o: &RunOutcome) -> Vec<String> {
    let mut row = vec![
        o.source().to_string(),
        o.target().to_string(),
        o.regressor().to_string(),
        o.td_fraction().to_string(),
    ];
    match o.report() {
        Some(r) => row.extend([num(r.rmse), num(r.r2), num(r.rrmse)]),
        None => row.extend([String::new(), String::new(), String::new()]),
    }
    row
}

fn eval_csv(outcomes: &[RunOutcome], dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = vec![write_csv(
        &dir.join("summary.csv"),
        &SUMMARY_HEADER,
        outcomes.iter().map(summary_row),
    )?];
    for r in outcomes.iter().filter_map(RunOutcome::report) {
        written.push(write_csv(
            &dir.join("pairs").join(pair_file_name(r)),
            &["year", "actual", "predicted"],
            r.per_year
                .iter()
                .map(|p| vec![p.year.to_string(), num(p.actual), num(p.predicted)]),
        )?);
    }
    Ok(written)
}

/// Column label for the improvement from no target data to fraction `f`.
pub fn improvement_label(f: Fraction) -> String {
    format!("No_TD\u{2192}{}", f.td_label())
}

fn sweep_csv(s: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut header = vec!["regressor".to_string()];
    header.extend(s.fractions.iter().map(|f| f.td_label()));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let table = write_csv(
        &dir.join("td_sweep.csv"),
        &h,
        s.rows.iter().map(|r| {
            let mut row = vec![r.regressor.to_string()];
            row.extend(r.mean_rmse.iter().map(|v| opt(*v)));
            row
        }),
    )?;

    let mut header = vec!["regressor".to_string()];
    header.extend(s.fractions.iter().map(|f| improvement_label(*f)));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let improvements = write_csv(
        &dir.join("td_improvement.csv"),
        &h,
        s.rows.iter().map(|r| {
            let mut row = vec![r.regressor.to_string()];
            row.extend(r.improvement_pct.iter().map(|v| opt(*v)));
            row
        }),
    )?;
    let summary = write_csv(
        &dir.join("summary.csv"),
        &SUMMARY_HEADER,
        s.outcomes.iter().map(summary_row),
    )?;
    Ok(vec![table, improvements, summary])
}

fn missing_csv(r: &MissingEstimateReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let candidates = write_csv(
        &dir.join("candidates.csv"),
        &[
            "regressor",
            "source",
            "rmse",
            "r2",
            "rrmse",
            "selected",
            "error",
        ],
        r.candidates.iter().enumerate().map(|(i, c)| {
            vec![
                c.regressor.label().to_string(),
                c.source.clone(),
                opt(c.rmse),
                opt(c.r2),
                opt(c.rrmse),
                (r.selected == Some(i)).to_string(),
                c.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    let estimates = write_csv(
        &dir.join("estimates.csv"),
        &["year", "predicted_gdp"],
        r.estimates
            .iter()
            .map(|e| vec![e.year.to_string(), num(e.predicted_gdp)]),
    )?;
    let windows = write_csv(
        &dir.join("windows.csv"),
        &["country", "start_year", "end_year"],
        r.missing_windows
            .iter()
            .map(|w| vec![r.country.clone(), w.start.to_string(), w.end.to_string()]),
    )?;
    Ok(vec![candidates, estimates, windows])
}

/// JSON document, `summary.csv` and one `pairs/` CSV per successful run.
pub fn write_eval_reports(
    outcomes: &[RunOutcome],
    manifest: &RunManifest,
    dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    if outcomes.is_empty() {
        return Err(ReportError::Precondition("no reports to write".into()));
    }
    ReportDocument::Eval {
        manifest: manifest.clone(),
        outcomes: outcomes.to_vec(),
    }
    .write_all(dir)
}

/// JSON document, `td_sweep.csv` (regressors by fractions), the matching
/// improvement table and `summary.csv`.
pub fn write_td_sweep(
    sweep: &SweepResult,
    manifest: &RunManifest,
    dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    if sweep.rows.is_empty() || sweep.fractions.is_empty() {
        return Err(ReportError::Precondition("empty sweep table".into()));
    }
    ReportDocument::Sweep {
        manifest: manifest.clone(),
        sweep: sweep.clone(),
    }
    .write_all(dir)
}

/// JSON document plus candidates, estimates and windows CSVs.
pub fn write_missing_report(
    r: &MissingEstimateReport,
    manifest: &RunManifest,
    dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    if r.selected.is_some_and(|i| i >= r.candidates.len()) {
        return Err(ReportError::Precondition(
            "selected candidate out of range".into(),
        ));
    }
    ReportDocument::Missing {
        manifest: manifest.clone(),
        report: Box::new(r.clone()),
    }
    .write_all(dir)
}

/// Re-renders the CSV views next to an existing `report.json`.
pub fn rerender(dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    ReportDocument::read(&dir.join(REPORT_JSON))?.render_csv(dir)
}
