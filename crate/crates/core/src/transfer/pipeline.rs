use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Standardizer};
use crate::exec::Execution;
use crate::regress::{grid_search, FitError, Hyperparameters, RegressorSpec, TrainedModel};

/// Standardizer plus model, both fitted on the same training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub standardizer: Standardizer,
    pub model: TrainedModel,
    pub hyperparameters: Hyperparameters,
    /// RMSE of the winning grid point on the internal validation split, when
    /// a search took place.
    pub validation_rmse: Option<f64>,
}

impl FittedPipeline {
    pub fn predict(&self, d: &Dataset) -> Vec<f64> {
        d.features()
            .iter()
            .map(|x| self.model.predict(&self.standardizer.apply_row(x)))
            .collect()
    }
}

/// Splits off the chronologically last third of `train` (by year, then row
/// order) as validation, grid-searches `spec` on the rest, then refits the
/// winning setting on all of `train`. Inputs are z-scored with statistics
/// from `train`; labels stay raw.
pub fn fit_pipeline(
    train: &Dataset,
    spec: &RegressorSpec,
    exec: Execution,
) -> Result<FittedPipeline, FitError> {
    let standardizer = Standardizer::fit(train).ok_or(FitError::EmptyTrainingSet)?;
    let scaled = standardizer.apply(train);
    let n = scaled.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (scaled.years()[i], i));
    let n_val = (n + 1) / 3;
    let grid = spec.grid(&scaled)?;

    let (hyperparameters, validation_rmse) = if grid.len() == 1 || n_val == 0 || n_val == n {
        (grid[0], None)
    } else {
        let (fit_rows, val_rows) = order.split_at(n - n_val);
        let mut fit_rows = fit_rows.to_vec();
        fit_rows.sort_unstable();
        let mut val_rows = val_rows.to_vec();
        val_rows.sort_unstable();
        let search = grid_search(
            spec,
            &scaled.select(&fit_rows),
            &scaled.select(&val_rows),
            exec,
        )?;
        (search.hyperparameters, Some(search.validation_rmse))
    };
    let model = TrainedModel::fit(&hyperparameters, &scaled)?;
    Ok(FittedPipeline {
        standardizer,
        model,
        hyperparameters,
        validation_rmse,
    })
}
