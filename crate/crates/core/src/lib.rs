//! Domain-adapted transfer learning for predicting per-capita GDP from CO2
//! emission indicators.
//!
//! - [`data`]: World Bank CSV ingestion, per-country series, datasets, scaling
//! - [`regress`]: GRNN, kernel ELM and epsilon-SVR behind one contract
//! - [`metrics`]: RMSE, R^2, relative RMSE
//! - [`transfer`]: mixed-domain training, experiment matrix, fraction sweep,
//!   missing-value estimation
//! - [`report`]: JSON and CSV report writers
//!
//! Batch work (grid search, experiment matrices) runs on rayon when the
//! `parallel` feature is on; see [`exec::Execution`].

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod exec;
pub mod fraction;
pub mod kernel;
pub mod metrics;
pub mod regress;
pub mod report;
pub mod synthetic;
pub mod transfer;
