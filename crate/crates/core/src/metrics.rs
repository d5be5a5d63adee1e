//! Goodness-of-fit measures: RMSE, coefficient of determination and relative RMSE.
//!
//! Degenerate denominators are reported as errors instead of being guarded
//! with an epsilon.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("prediction pairs are empty")]
    Empty,
    #[error("length mismatch: {actual} actual values vs {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("R^2 needs at least two observations, got {0}")]
    TooFew(usize),
    #[error("undefined denominator: {0}")]
    UndefinedDenominator(&'static str),
    #[error("baseline RMSE must be positive, got {0}")]
    NonPositiveBaseline(f64),
}

/// Validated (actual, predicted) vectors of equal, non-zero length.
#[derive(Debug, Clone, Copy)]
pub struct PredictionPairs<'a> {
    actual: &'a [f64],
    predicted: &'a [f64],
}

impl<'a> PredictionPairs<'a> {
    pub fn new(actual: &'a [f64], predicted: &'a [f64]) -> Result<Self, MetricError> {
        if actual.len() != predicted.len() {
            return Err(MetricError::LengthMismatch {
                actual: actual.len(),
                predicted: predicted.len(),
            });
        }
        if actual.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some(i) = actual
            .iter()
            .zip(predicted)
            .position(|(a, p)| !a.is_finite() || !p.is_finite())
        {
            return Err(MetricError::NonFinite(i));
        }
        Ok(PredictionPairs { actual, predicted })
    }

    pub fn len(&self) -> usize {
        self.actual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actual.is_empty()
    }

    pub fn actual(&self) -> &[f64] {
        self.actual
    }

    pub fn predicted(&self) -> &[f64] {
        self.predicted
    }

    fn sum_squared_error(&self) -> f64 {
        self.actual
            .iter()
            .zip(self.predicted)
            .map(|(a, p)| (p - a) * (p - a))
            .sum()
    }

    fn actual_mean(&self) -> f64 {
        self.actual.iter().sum::<f64>() / self.len() as f64
    }
}

/// Root mean square error, `sqrt(sum (pred - actual)^2 / N)`.
pub fn rmse(p: &PredictionPairs<'_>) -> f64 {
    (p.sum_squared_error() / p.len() as f64).sqrt()
}

/// Coefficient of determination `1 - SSE / SST`.
pub fn r_squared(p: &PredictionPairs<'_>) -> Result<f64, MetricError> {
    if p.len() < 2 {
        return Err(MetricError::TooFew(p.len()));
    }
    let mean = p.actual_mean();
    let sst: f64 = p.actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if sst == 0.0 {
        return Err(MetricError::UndefinedDenominator(
            "actual values are constant",
        ));
    }
    Ok(1.0 - p.sum_squared_error() / sst)
}

/// RMSE divided by the mean of the actual values.
pub fn rrmse(p: &PredictionPairs<'_>) -> Result<f64, MetricError> {
    let mean = p.actual_mean();
    if mean == 0.0 {
        return Err(MetricError::UndefinedDenominator(
            "mean of actual values is zero",
        ));
    }
    Ok(rmse(p) / mean)
}

/// Percentage reduction of `new_rmse` relative to `baseline_rmse`.
pub fn improvement_pct(baseline_rmse: f64, new_rmse: f64) -> Result<f64, MetricError> {
    if !(baseline_rmse > 0.0) {
        return Err(MetricError::NonPositiveBaseline(baseline_rmse));
    }
    Ok(100.0 * (baseline_rmse - new_rmse) / baseline_rmse)
}
