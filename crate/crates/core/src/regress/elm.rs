//! Extreme learning machines.
//!
//! [`ElmModel`] is the kernel variant: the hidden layer for an input is its
//! kernel row against every training point, and the output weights solve the
//! ridge system `(K + I/C) w = y`. [`RandomElmModel`] keeps random sigmoid
//! hidden nodes and takes the Moore-Penrose pseudo-inverse of the hidden
//! output matrix.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FitError;
use crate::data::{Dataset, FeatureRow, FEATURE_DIM};
use crate::kernel::KernelSpec;

const REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmModel {
    train_features: Vec<FeatureRow>,
    kernel: KernelSpec,
    out_weights: Vec<f64>,
    regularization: f64,
}

impl ElmModel {
    pub fn fit(train: &Dataset, kernel: KernelSpec, c: f64) -> Result<Self, FitError> {
        if !(c > 0.0) || c.is_nan() {
            return Err(FitError::InvalidHyperparameter {
                name: "C",
                value: c,
            });
        }
        if !kernel.is_valid() {
            return Err(FitError::InvalidHyperparameter {
                name: "gamma",
                value: kernel.gamma,
            });
        }
        if train.is_empty() {
            return Err(FitError::EmptyTrainingSet);
        }
        let n = train.len();
        let mut a = DMatrix::from_row_slice(n, n, &kernel.gram(train.features()));
        for i in 0..n {
            a[(i, i)] += 1.0 / c;
        }
        let y = DVector::from_column_slice(train.labels());
        let chol = a.clone().cholesky().ok_or_else(|| {
            FitError::Numeric(format!(
                "kernel system of size {n} is not positive definite"
            ))
        })?;
        let mut w = chol.solve(&y);
        for _ in 0..REFINEMENT_STEPS {
            let r = &y - &a * &w;
            w += chol.solve(&r);
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(FitError::Numeric("non-finite output weights".into()));
        }
        Ok(ElmModel {
            train_features: train.features().to_vec(),
            kernel,
            out_weights: w.iter().copied().collect(),
            regularization: c,
        })
    }

    pub fn out_weights(&self) -> &[f64] {
        &self.out_weights
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    /// `sum_j w_j K(x_j, x)`.
    pub fn predict(&self, x: &FeatureRow) -> f64 {
        self.train_features
            .iter()
            .zip(&self.out_weights)
            .map(|(r, w)| w * self.kernel.eval(r, x))
            .sum()
    }

    #[cfg(test)]
    pub(crate) fn from_parts(
        train_features: Vec<FeatureRow>,
        kernel: KernelSpec,
        out_weights: Vec<f64>,
    ) -> Self {
        ElmModel {
            train_features,
            kernel,
            out_weights,
            regularization: 1.0,
        }
    }
}

/// Default hidden-node count: `min(2N, 200)`.
pub fn default_hidden_nodes(n: usize) -> usize {
    (2 * n).clamp(1, 200)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomElmModel {
    input_weights: Vec<FeatureRow>,
    biases: Vec<f64>,
    out_weights: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl RandomElmModel {
    pub fn fit(train: &Dataset, hidden: usize, seed: u64) -> Result<Self, FitError> {
        if hidden == 0 {
            return Err(FitError::InvalidHyperparameter {
                name: "hidden_nodes",
                value: 0.0,
            });
        }
        if train.is_empty() {
            return Err(FitError::EmptyTrainingSet);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input_weights: Vec<FeatureRow> = (0..hidden)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
        let biases: Vec<f64> = (0..hidden).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut model = RandomElmModel {
            input_weights,
            biases,
            out_weights: Vec::new(),
        };
        let n = train.len();
        let h = DMatrix::from_fn(n, hidden, |i, k| {
            model.hidden_output(&train.features()[i], k)
        });
        let pinv = h
            .pseudo_inverse(1e-12)
            .map_err(|e| FitError::Numeric(format!("pseudo-inverse failed: {e}")))?;
        let beta = pinv * DVector::from_column_slice(train.labels());
        model.out_weights = beta.iter().copied().collect();
        Ok(model)
    }

    fn hidden_output(&self, x: &FeatureRow, k: usize) -> f64 {
        let w = &self.input_weights[k];
        sigmoid((0..FEATURE_DIM).map(|j| w[j] * x[j]).sum::<f64>() + self.biases[k])
    }

    pub fn hidden_nodes(&self) -> usize {
        self.biases.len()
    }

    pub fn predict(&self, x: &FeatureRow) -> f64 {
        (0..self.hidden_nodes())
            .map(|k| self.out_weights[k] * self.hidden_output(x, k))
            .sum()
    }
}
