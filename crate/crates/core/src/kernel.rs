use serde::{Deserialize, Serialize};

use crate::data::FeatureRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    #[default]
    Rbf,
    Linear,
}

/// `exp(-gamma * |a - b|^2)` for rbf, `a . b` for linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Self {
        KernelSpec {
            kind: KernelKind::Rbf,
            gamma,
        }
    }

    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            gamma: 1.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self.kind {
            KernelKind::Rbf => self.gamma > 0.0 && self.gamma.is_finite(),
            KernelKind::Linear => true,
        }
    }

    #[inline]
    pub fn eval(&self, a: &FeatureRow, b: &FeatureRow) -> f64 {
        match self.kind {
            KernelKind::Rbf => (-self.gamma * squared_distance(a, b)).exp(),
            KernelKind::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        }
    }

    /// Dense symmetric Gram matrix, row-major.
    pub fn gram(&self, rows: &[FeatureRow]) -> Vec<f64> {
        let n = rows.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&rows[i], &rows[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

#[inline]
pub fn squared_distance(a: &FeatureRow, b: &FeatureRow) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean Euclidean distance over all unordered pairs; 0 for fewer than two rows.
pub fn mean_pairwise_distance(rows: &[FeatureRow]) -> f64 {
    let n = rows.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += squared_distance(&rows[i], &rows[j]).sqrt();
        }
    }
    total / (n * (n - 1) / 2) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rbf_unit_diagonal_and_symmetric() {
        let rows = [
            [0.0, 1.0, 2.0, 3.0],
            [1.0, -1.0, 0.5, 0.0],
            [3.0, 3.0, 3.0, 3.0],
        ];
        let k = KernelSpec::rbf(0.3).gram(&rows);
        for i in 0..3 {
            assert_eq!(k[i * 3 + i], 1.0);
            for j in 0..3 {
                assert_eq!(k[i * 3 + j], k[j * 3 + i]);
            }
        }
    }

    #[test]
    fn linear_is_dot_product() {
        let k = KernelSpec::linear();
        assert_eq!(k.eval(&[1.0, 2.0, 0.0, 0.0], &[3.0, 4.0, 5.0, 0.0]), 11.0);
    }

    #[test]
    fn validity() {
        assert!(!KernelSpec::rbf(0.0).is_valid());
        assert!(!KernelSpec::rbf(-1.0).is_valid());
        assert!(KernelSpec::linear().is_valid());
    }

    #[test]
    fn pairwise_distance() {
        let rows = [[0.0; 4], [3.0, 4.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]];
        // distances 5, 0, 5
        assert!((mean_pairwise_distance(&rows) - 10.0 / 3.0).abs() < 1e-15);
        assert_eq!(mean_pairwise_distance(&rows[..1]), 0.0);
    }
}
