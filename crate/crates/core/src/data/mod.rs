//! Indicator ingestion, per-country series and aligned training datasets.

mod series;
mod standardize;
mod worldbank;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use series::{build_country_series, spans, Channel, CountrySeries, YearSpan};
pub use standardize::Standardizer;
pub use worldbank::{parse_worldbank_csv, RawIndicatorTable, YearWindow};

/// Number of input features per row.
pub const FEATURE_DIM: usize = 4;

/// Feature order: gas %, liquid %, solid %, CO2 per capita.
pub type FeatureRow = [f64; FEATURE_DIM];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("World Bank header row not found; input starts with {preview:?}")]
    Format { preview: String },
    #[error("non-numeric cell {value:?} at row {row}, column {column} ({header})")]
    Parse {
        row: u64,
        column: usize,
        header: String,
        value: String,
    },
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown country code {0:?}")]
    UnknownCountry(String),
    #[error("{country} {year}: {channel} value {value} out of range")]
    OutOfRange {
        country: String,
        year: i32,
        channel: Channel,
        value: f64,
    },
    #[error("{0}: no year has all inputs and GDP present")]
    EmptyDataset(String),
    #[error("{country} {year}: incomplete features (missing {})", channel.map(|c| c.name()).unwrap_or("year"))]
    IncompleteFeatures {
        country: String,
        year: i32,
        channel: Option<Channel>,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("column lengths differ: {years} years, {features} feature rows, {labels} labels, {origin} origin tags")]
    Shape {
        years: usize,
        features: usize,
        labels: usize,
        origin: usize,
    },
    #[error("non-finite entry in row {0}")]
    NonFinite(usize),
}

/// Aligned feature matrix, labels, years and origin tags.
///
/// Rows from several countries may share a year; single-country datasets
/// are strictly increasing in year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    years: Vec<i32>,
    features: Vec<FeatureRow>,
    labels: Vec<f64>,
    origin: Vec<String>,
    labeled: bool,
}

impl Dataset {
    pub fn new(
        years: Vec<i32>,
        features: Vec<FeatureRow>,
        labels: Vec<f64>,
        origin: Vec<String>,
    ) -> Result<Self, DatasetError> {
        let n = years.len();
        if features.len() != n || labels.len() != n || origin.len() != n {
            return Err(DatasetError::Shape {
                years: n,
                features: features.len(),
                labels: labels.len(),
                origin: origin.len(),
            });
        }
        if let Some(i) =
            (0..n).find(|&i| !labels[i].is_finite() || features[i].iter().any(|v| !v.is_finite()))
        {
            return Err(DatasetError::NonFinite(i));
        }
        Ok(Dataset {
            years,
            features,
            labels,
            origin,
            labeled: true,
        })
    }

    /// Feature-only dataset; labels are zero placeholders.
    pub fn unlabeled(
        years: Vec<i32>,
        features: Vec<FeatureRow>,
        origin: Vec<String>,
    ) -> Result<Self, DatasetError> {
        let labels = vec![0.0; years.len()];
        let mut d = Dataset::new(years, features, labels, origin)?;
        d.labeled = false;
        Ok(d)
    }

    pub fn empty() -> Self {
        Dataset {
            years: Vec::new(),
            features: Vec::new(),
            labels: Vec::new(),
            origin: Vec::new(),
            labeled: true,
        }
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        self.labeled
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn features(&self) -> &[FeatureRow] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn origin(&self) -> &[String] {
        &self.origin
    }

    /// True when years are strictly increasing.
    pub fn is_chronological(&self) -> bool {
        self.years.windows(2).all(|w| w[0] < w[1])
    }

    /// New dataset made of the rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            years: indices.iter().map(|&i| self.years[i]).collect(),
            features: indices.iter().map(|&i| self.features[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            origin: indices.iter().map(|&i| self.origin[i].clone()).collect(),
            labeled: self.labeled,
        }
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn concat(&self, other: &Dataset) -> Dataset {
        let mut out = self.clone();
        out.years.extend_from_slice(&other.years);
        out.features.extend_from_slice(&other.features);
        out.labels.extend_from_slice(&other.labels);
        out.origin.extend_from_slice(&other.origin);
        out.labeled = self.labeled && other.labeled;
        out
    }

    /// Same rows with features replaced.
    pub fn with_features(&self, features: Vec<FeatureRow>) -> Dataset {
        assert_eq!(features.len(), self.len());
        Dataset {
            features,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checked() {
        let err = Dataset::new(
            vec![1, 2],
            vec![[0.0; 4]],
            vec![1.0, 2.0],
            vec!["A".into(); 2],
        );
        assert!(matches!(err, Err(DatasetError::Shape { .. })));
        let err = Dataset::new(
            vec![1],
            vec![[f64::NAN, 0.0, 0.0, 0.0]],
            vec![1.0],
            vec!["A".into()],
        );
        assert_eq!(err.unwrap_err(), DatasetError::NonFinite(0));
    }

    #[test]
    fn select_and_concat() {
        let d = Dataset::new(
            vec![1, 2, 3],
            vec![[1.0; 4], [2.0; 4], [3.0; 4]],
            vec![10.0, 20.0, 30.0],
            vec!["A".into(), "A".into(), "A".into()],
        )
        .unwrap();
        let s = d.select(&[2, 0]);
        assert_eq!(s.years(), &[3, 1]);
        assert_eq!(s.labels(), &[30.0, 10.0]);
        assert!(!s.is_chronological());
        let c = d.concat(&s);
        assert_eq!(c.len(), 5);
        assert!(d.is_chronological());
    }
}
