//! Epsilon-insensitive support vector regression.
//!
//! The dual has one pair of multipliers `(a_i, a*_i)` per training point,
//! both boxed to `[0, C]`, with `sum (a_i - a*_i) = 0`. It is solved as a
//! single 2N-variable problem
//!
//! ```text
//! minimize   1/2 a^T Q a + p^T a
//! subject to s^T a = 0,  0 <= a <= C
//! ```
//!
//! with signs `s = (+1.., -1..)`, `Q_tu = s_t s_u K(t mod N, u mod N)`,
//! `p = (eps - y, eps + y)`. Each iteration picks the pair with the largest
//! KKT violation using second-order gain and solves the two-variable
//! subproblem in closed form.

use serde::{Deserialize, Serialize};

use super::FitError;
use crate::data::{Dataset, FeatureRow};
use crate::kernel::KernelSpec;

/// Floor for the curvature of a two-variable subproblem.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SvrOptions {
    /// Stopping threshold on the maximal KKT violation. Defaults to
    /// `1e-3 * (label range)`.
    pub tol: Option<f64>,
    /// Cap on pair updates. Defaults to `100 * N^2`.
    pub max_updates: Option<usize>,
}

impl SvrOptions {
    pub fn with_tol(tol: f64) -> Self {
        SvrOptions {
            tol: Some(tol),
            max_updates: None,
        }
    }

    fn resolve(&self, labels: &[f64]) -> (f64, usize) {
        let n = labels.len();
        let (lo, hi) = labels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
                (lo.min(y), hi.max(y))
            });
        let scale = lo.abs().max(hi.abs()).max(1.0);
        let tol = self
            .tol
            .unwrap_or(1e-3 * (hi - lo))
            .max(4.0 * f64::EPSILON * scale);
        let cap = self.max_updates.unwrap_or(100 * n * n).max(1);
        (tol, cap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    train_features: Vec<FeatureRow>,
    kernel: KernelSpec,
    dual_coeffs: Vec<f64>,
    bias: f64,
    c: f64,
    epsilon: f64,
    objective: f64,
    updates: usize,
}

/// The 2N-variable dual in the sign convention described in the module docs.
pub(crate) struct DualProblem {
    pub n: usize,
    pub kernel: Vec<f64>,
    pub p: Vec<f64>,
    pub c: f64,
}

impl DualProblem {
    pub fn new(train: &Dataset, kernel: KernelSpec, c: f64, epsilon: f64) -> Self {
        let n = train.len();
        let y = train.labels();
        let p = (0..2 * n)
            .map(|t| {
                if t < n {
                    epsilon - y[t]
                } else {
                    epsilon + y[t - n]
                }
            })
            .collect();
        DualProblem {
            n,
            kernel: kernel.gram(train.features()),
            p,
            c,
        }
    }

    #[inline]
    pub fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    pub fn q(&self, t: usize, u: usize) -> f64 {
        self.sign(t) * self.sign(u) * self.kernel[(t % self.n) * self.n + u % self.n]
    }

    /// Dual objective in maximization form, `-(1/2 a^T Q a + p^T a)`.
    pub fn objective(&self, a: &[f64], grad: &[f64]) -> f64 {
        -0.5 * a
            .iter()
            .zip(grad)
            .zip(&self.p)
            .map(|((a, g), p)| a * (g + p))
            .sum::<f64>()
    }

    /// Signed coefficients `a_i - a*_i`.
    pub fn coefficients(&self, a: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| a[i] - a[i + self.n]).collect()
    }

    /// Bias from the KKT conditions: the mean over free variables, or the
    /// midpoint of the feasible interval when every variable is at a bound.
    pub fn bias(&self, a: &[f64], grad: &[f64]) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut free_sum = 0.0;
        let mut free = 0usize;
        for t in 0..2 * self.n {
            let s = self.sign(t);
            let yg = s * grad[t];
            if a[t] >= self.c {
                if s < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if a[t] <= 0.0 {
                if s > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                free_sum += yg;
            }
        }
        let rho = if free > 0 {
            free_sum / free as f64
        } else {
            (ub + lb) / 2.0
        };
        -rho
    }

    /// Maximal KKT violation `m(a) - M(a)`.
    pub fn kkt_gap(&self, a: &[f64], grad: &[f64]) -> f64 {
        let mut up = f64::NEG_INFINITY;
        let mut low = f64::INFINITY;
        for t in 0..2 * self.n {
            let v = -self.sign(t) * grad[t];
            let s = self.sign(t);
            if (s > 0.0 && a[t] < self.c) || (s < 0.0 && a[t] > 0.0) {
                up = up.max(v);
            }
            if (s > 0.0 && a[t] > 0.0) || (s < 0.0 && a[t] < self.c) {
                low = low.min(v);
            }
        }
        up - low
    }
}

struct Smo<'a> {
    prob: &'a DualProblem,
    a: Vec<f64>,
    grad: Vec<f64>,
}

impl Smo<'_> {
    fn diag(&self, t: usize) -> f64 {
        let i = t % self.prob.n;
        self.prob.kernel[i * self.prob.n + i]
    }

    /// Working pair by maximal violation for `i`, second-order gain for `j`.
    /// Returns `None` once the violation is below `tol`.
    fn select(&self, tol: f64) -> Option<(usize, usize)> {
        let prob = self.prob;
        let c = prob.c;
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..2 * prob.n {
            let v = if prob.sign(t) > 0.0 {
                (self.a[t] < c).then(|| -self.grad[t])
            } else {
                (self.a[t] > 0.0).then(|| self.grad[t])
            };
            if let Some(v) = v {
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            return None;
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j = usize::MAX;
        for t in 0..2 * prob.n {
            let v = if prob.sign(t) > 0.0 {
                (self.a[t] > 0.0).then(|| self.grad[t])
            } else {
                (self.a[t] < c).then(|| -self.grad[t])
            };
            let Some(v) = v else { continue };
            gmax2 = gmax2.max(v);
            let diff = gmax + v;
            if diff > 0.0 {
                let k_it = prob.kernel[(i % prob.n) * prob.n + t % prob.n];
                let quad = (self.diag(i) + self.diag(t) - 2.0 * k_it).max(TAU);
                let gain = -(diff * diff) / quad;
                if gain <= best {
                    best = gain;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < tol || j == usize::MAX {
            return None;
        }
        Some((i, j))
    }

    fn update(&mut self, i: usize, j: usize) {
        let prob = self.prob;
        let c = prob.c;
        let (old_i, old_j) = (self.a[i], self.a[j]);
        let k_ij = prob.kernel[(i % prob.n) * prob.n + j % prob.n];
        let quad = (self.diag(i) + self.diag(j) - 2.0 * k_ij).max(TAU);
        let (mut ai, mut aj) = (old_i, old_j);
        if prob.sign(i) != prob.sign(j) {
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.a[i] = ai;
        self.a[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..2 * prob.n {
            self.grad[t] += prob.q(t, i) * di + prob.q(t, j) * dj;
        }
    }
}

impl SvrModel {
    pub fn fit(
        train: &Dataset,
        kernel: KernelSpec,
        c: f64,
        epsilon: f64,
    ) -> Result<Self, FitError> {
        Self::fit_with(train, kernel, c, epsilon, SvrOptions::default())
    }

    pub fn fit_with(
        train: &Dataset,
        kernel: KernelSpec,
        c: f64,
        epsilon: f64,
        options: SvrOptions,
    ) -> Result<Self, FitError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(FitError::InvalidHyperparameter {
                name: "C",
                value: c,
            });
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(FitError::InvalidHyperparameter {
                name: "epsilon",
                value: epsilon,
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
        let (tol, cap) = options.resolve(train.labels());
        let prob = DualProblem::new(train, kernel, c, epsilon);
        let mut smo = Smo {
            prob: &prob,
            a: vec![0.0; 2 * prob.n],
            grad: prob.p.clone(),
        };
        let mut updates = 0;
        while let Some((i, j)) = smo.select(tol) {
            if updates == cap {
                return Err(FitError::NoConvergence {
                    violation: prob.kkt_gap(&smo.a, &smo.grad),
                    updates,
                });
            }
            smo.update(i, j);
            updates += 1;
        }
        Ok(SvrModel {
            train_features: train.features().to_vec(),
            kernel,
            dual_coeffs: prob.coefficients(&smo.a),
            bias: prob.bias(&smo.a, &smo.grad),
            c,
            epsilon,
            objective: prob.objective(&smo.a, &smo.grad),
            updates,
        })
    }

    pub fn dual_coeffs(&self) -> &[f64] {
        &self.dual_coeffs
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    /// Dual objective value at the solution (maximization form).
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    /// `sum_i beta_i K(x_i, x) + b`.
    pub fn predict(&self, x: &FeatureRow) -> f64 {
        predict_with(
            &self.train_features,
            self.kernel,
            &self.dual_coeffs,
            self.bias,
            x,
        )
    }

    /// Checks the optimality conditions against the training set with slack
    /// `tol` on residuals: coefficients boxed, coefficients summing to zero,
    /// zero coefficients strictly inside the tube, free coefficients on its
    /// edge and bounded coefficients on or outside it.
    pub fn check_kkt(&self, train: &Dataset, tol: f64) -> Result<(), String> {
        let n = self.dual_coeffs.len();
        let sum: f64 = self.dual_coeffs.iter().sum();
        if sum.abs() > 1e-8 * self.c * n as f64 {
            return Err(format!("equality constraint violated: sum = {sum:e}"));
        }
        for (i, (&beta, (x, y))) in self
            .dual_coeffs
            .iter()
            .zip(train.features().iter().zip(train.labels()))
            .enumerate()
        {
            if beta.abs() > self.c {
                return Err(format!("coefficient {i} = {beta} outside [-C, C]"));
            }
            let residual = (y - self.predict(x)).abs();
            if residual < self.epsilon - tol && beta != 0.0 {
                return Err(format!(
                    "point {i} inside tube (|r| = {residual}) has coefficient {beta}"
                ));
            }
            if beta != 0.0 && beta.abs() < self.c && (residual - self.epsilon).abs() > tol {
                return Err(format!(
                    "free point {i} has |r| = {residual}, expected {}",
                    self.epsilon
                ));
            }
            if beta.abs() >= self.c && residual < self.epsilon - tol {
                return Err(format!(
                    "bounded point {i} has |r| = {residual} < eps - tol"
                ));
            }
        }
        Ok(())
    }
}

pub(crate) fn predict_with(
    rows: &[FeatureRow],
    kernel: KernelSpec,
    coeffs: &[f64],
    bias: f64,
    x: &FeatureRow,
) -> f64 {
    rows.iter()
        .zip(coeffs)
        .filter(|(_, b)| **b != 0.0)
        .map(|(r, b)| b * kernel.eval(r, x))
        .sum::<f64>()
        + bias
}
