//! Dense reference solver for the SVR dual, used to cross-check SMO.
//!
//! Runs accelerated projected gradient from the zero vector on the full 2N
//! variable box, projecting onto `{0 <= a <= C, s^T a = 0}` exactly at every
//! step. Only meant for small instances.

use super::svr::predict_with;
use super::FitError;
use crate::data::{Dataset, FeatureRow};
use crate::kernel::KernelSpec;

pub const MAX_ORACLE_ROWS: usize = 64;
const STOP_NORM: f64 = 1e-8;
const MAX_ITERATIONS: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// `a_i - a*_i` per training point.
    pub dual_coeffs: Vec<f64>,
    /// Dual objective in maximization form.
    pub objective: f64,
    pub bias: f64,
    pub iterations: usize,
    rows: Vec<FeatureRow>,
    kernel: KernelSpec,
}

impl OracleSolution {
    pub fn predict(&self, x: &FeatureRow) -> f64 {
        predict_with(&self.rows, self.kernel, &self.dual_coeffs, self.bias, x)
    }
}

/// Euclidean projection of `v` onto the box intersected with the hyperplane
/// `sum_t s_t a_t = 0`: `a = clip(v - lambda s)` for the root `lambda` of the
/// monotone function `sum_t s_t clip(v_t - lambda s_t)`.
fn project(v: &[f64], n: usize, c: f64, out: &mut [f64]) {
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let fill = |lambda: f64, out: &mut [f64]| {
        for t in 0..2 * n {
            out[t] = (v[t] - lambda * sign(t)).clamp(0.0, c);
        }
    };
    let h = |lambda: f64| -> f64 {
        (0..2 * n)
            .map(|t| sign(t) * (v[t] - lambda * sign(t)).clamp(0.0, c))
            .sum()
    };
    let span = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    // h(lo) >= 0 >= h(hi); h is piecewise linear and non-increasing
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (h_lo, h_hi) = (h(lo), h(hi));
    let lambda = if h_lo > h_hi {
        lo + (hi - lo) * h_lo / (h_lo - h_hi)
    } else {
        0.5 * (lo + hi)
    };
    fill(lambda, out);
}

/// Dual of the epsilon-SVR over `(g, t)`, each boxed to `[0, C]`:
/// `y^T b - 1/2 b^T K b - eps 1^T (g + t)` with `b = g - t`.
struct Dual {
    n: usize,
    kernel: Vec<f64>,
    labels: Vec<f64>,
    epsilon: f64,
}

impl Dual {
    fn beta(&self, z: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| z[i] - z[self.n + i]).collect()
    }

    fn k_beta(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.kernel[i * self.n + j] * beta[j])
                    .sum()
            })
            .collect()
    }

    fn value(&self, z: &[f64]) -> f64 {
        let beta = self.beta(z);
        let kb = self.k_beta(&beta);
        let linear: f64 = (0..self.n).map(|i| self.labels[i] * beta[i]).sum();
        let quad: f64 = (0..self.n).map(|i| beta[i] * kb[i]).sum();
        let tube: f64 = z.iter().sum::<f64>() * self.epsilon;
        linear - 0.5 * quad - tube
    }

    /// Gradient of the negated objective (the function being minimized).
    fn descent_gradient(&self, z: &[f64]) -> Vec<f64> {
        let kb = self.k_beta(&self.beta(z));
        let mut g = vec![0.0; 2 * self.n];
        for i in 0..self.n {
            g[i] = -(self.labels[i] - kb[i] - self.epsilon);
            g[self.n + i] = -(-self.labels[i] + kb[i] - self.epsilon);
        }
        g
    }

    /// Offset `b` from the optimality conditions on residuals `r = y - K beta`:
    /// free multipliers pin it exactly, bounded ones give an interval.
    fn bias(&self, z: &[f64], c: f64) -> f64 {
        let r: Vec<f64> = {
            let kb = self.k_beta(&self.beta(z));
            (0..self.n).map(|i| self.labels[i] - kb[i]).collect()
        };
        let eps = self.epsilon;
        let (mut lb, mut ub) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut free = Vec::new();
        for i in 0..self.n {
            let (g, t) = (z[i], z[self.n + i]);
            if g <= 0.0 {
                lb = lb.max(r[i] - eps);
            } else if g >= c {
                ub = ub.min(r[i] - eps);
            } else {
                free.push(r[i] - eps);
            }
            if t <= 0.0 {
                ub = ub.min(r[i] + eps);
            } else if t >= c {
                lb = lb.max(r[i] + eps);
            } else {
                free.push(r[i] + eps);
            }
        }
        if free.is_empty() {
            0.5 * (lb + ub)
        } else {
            free.iter().sum::<f64>() / free.len() as f64
        }
    }
}

/// Solves the dual to a projected-gradient norm of `1e-8`.
pub fn qp_oracle(
    train: &Dataset,
    kernel: KernelSpec,
    c: f64,
    epsilon: f64,
) -> Result<OracleSolution, FitError> {
    let n = train.len();
    if n > MAX_ORACLE_ROWS {
        return Err(FitError::OracleTooLarge(n));
    }
    if train.is_empty() {
        return Err(FitError::EmptyTrainingSet);
    }
    if !(c >= 0.0) || !c.is_finite() {
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
    let rows = train.features();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            gram[i * n + j] = kernel.eval(&rows[i], &rows[j]);
        }
    }
    let dual = Dual {
        n,
        kernel: gram,
        labels: train.labels().to_vec(),
        epsilon,
    };
    let m = 2 * n;

    // Hessian is [K -K; -K K]; 2 * max row sum of |K| bounds its largest eigenvalue
    let lipschitz = 2.0
        * (0..n)
            .map(|i| (0..n).map(|j| dual.kernel[i * n + j].abs()).sum::<f64>())
            .fold(0.0, f64::max);
    let step = if lipschitz > 0.0 {
        1.0 / lipschitz
    } else {
        1.0
    };

    let mut x = vec![0.0; m];
    let mut y = x.clone();
    let mut x_next = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut probe = vec![0.0; m];
    let mut momentum = 1.0f64;
    let mut iterations = 0;
    loop {
        let g = dual.descent_gradient(&x);
        for t in 0..m {
            trial[t] = x[t] - g[t];
        }
        project(&trial, n, c, &mut probe);
        let norm = x
            .iter()
            .zip(&probe)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if norm < STOP_NORM {
            break;
        }
        if iterations == MAX_ITERATIONS {
            return Err(FitError::NoConvergence {
                violation: norm,
                updates: iterations,
            });
        }
        let gy = dual.descent_gradient(&y);
        for t in 0..m {
            trial[t] = y[t] - step * gy[t];
        }
        project(&trial, n, c, &mut x_next);
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        // restart when the step opposes the momentum direction
        let restart = (0..m)
            .map(|t| (y[t] - x_next[t]) * (x_next[t] - x[t]))
            .sum::<f64>()
            > 0.0;
        if restart {
            momentum = 1.0;
            y.copy_from_slice(&x_next);
        } else {
            let beta = (momentum - 1.0) / next_momentum;
            for t in 0..m {
                y[t] = x_next[t] + beta * (x_next[t] - x[t]);
            }
            momentum = next_momentum;
        }
        std::mem::swap(&mut x, &mut x_next);
        iterations += 1;
    }
    Ok(OracleSolution {
        dual_coeffs: dual.beta(&x),
        objective: dual.value(&x),
        bias: dual.bias(&x, c),
        iterations,
        rows: rows.to_vec(),
        kernel,
    })
}
