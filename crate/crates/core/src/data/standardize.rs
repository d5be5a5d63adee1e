use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureRow, FEATURE_DIM};

/// Columns whose population standard deviation falls below this are left as-is.
const CONSTANT_COLUMN: f64 = 1e-12;

/// Per-column z-score transform fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: FeatureRow,
    pub stdevs: FeatureRow,
}

impl Standardizer {
    /// Fits population mean and standard deviation per column.
    ///
    /// A constant column gets mean 0 and stdev 1, i.e. it passes through
    /// unchanged. Returns `None` for an empty dataset.
    pub fn fit(train: &Dataset) -> Option<Standardizer> {
        let rows = train.features();
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        let mut means = [0.0; FEATURE_DIM];
        let mut stdevs = [1.0; FEATURE_DIM];
        for j in 0..FEATURE_DIM {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows
                .iter()
                .map(|r| (r[j] - mean) * (r[j] - mean))
                .sum::<f64>()
                / n;
            let sd = var.sqrt();
            if sd >= CONSTANT_COLUMN {
                means[j] = mean;
                stdevs[j] = sd;
            }
        }
        Some(Standardizer { means, stdevs })
    }

    pub fn identity() -> Standardizer {
        Standardizer {
            means: [0.0; FEATURE_DIM],
            stdevs: [1.0; FEATURE_DIM],
        }
    }

    pub fn apply_row(&self, row: &FeatureRow) -> FeatureRow {
        std::array::from_fn(|j| (row[j] - self.means[j]) / self.stdevs[j])
    }

    pub fn invert_row(&self, row: &FeatureRow) -> FeatureRow {
        std::array::from_fn(|j| row[j] * self.stdevs[j] + self.means[j])
    }

    pub fn apply(&self, d: &Dataset) -> Dataset {
        d.with_features(d.features().iter().map(|r| self.apply_row(r)).collect())
    }

    pub fn invert(&self, d: &Dataset) -> Dataset {
        d.with_features(d.features().iter().map(|r| self.invert_row(r)).collect())
    }
}
