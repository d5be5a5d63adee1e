//! Generalized regression neural network: a Gaussian-weighted average of
//! training labels with spread `sigma`.

use serde::{Deserialize, Serialize};

use super::FitError;
use crate::data::{Dataset, FeatureRow};
use crate::kernel::squared_distance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrnnModel {
    train_features: Vec<FeatureRow>,
    train_labels: Vec<f64>,
    sigma: f64,
}

impl GrnnModel {
    /// Stores the training set; there is nothing to optimize.
    pub fn fit(train: &Dataset, sigma: f64) -> Result<Self, FitError> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(FitError::InvalidHyperparameter {
                name: "sigma",
                value: sigma,
            });
        }
        if train.is_empty() {
            return Err(FitError::EmptyTrainingSet);
        }
        Ok(GrnnModel {
            train_features: train.features().to_vec(),
            train_labels: train.labels().to_vec(),
            sigma,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.train_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_labels.is_empty()
    }

    /// `sum_i y_i exp(-S_i / 2 sigma^2) / sum_i exp(-S_i / 2 sigma^2)`.
    ///
    /// Distances are shifted by the smallest one before exponentiating, which
    /// leaves the ratio unchanged and keeps the nearest point's weight at 1;
    /// when the other weights underflow the result is the nearest label.
    pub fn predict(&self, x: &FeatureRow) -> f64 {
        let dist: Vec<f64> = self
            .train_features
            .iter()
            .map(|r| squared_distance(x, r))
            .collect();
        let (nearest, d_min) =
            dist.iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |best, (i, d)| if d < best.1 { (i, d) } else { best },
                );
        let scale = 1.0 / (2.0 * self.sigma * self.sigma);
        if !scale.is_finite() {
            return self.train_labels[nearest];
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (d, y) in dist.iter().zip(&self.train_labels) {
            let w = (-(d - d_min) * scale).exp();
            num += w * y;
            den += w;
        }
        let (lo, hi) = self
            .train_labels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
                (lo.min(y), hi.max(y))
            });
        (num / den).clamp(lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset(rows: Vec<FeatureRow>, labels: Vec<f64>) -> Dataset {
        let n = rows.len();
        Dataset::new((0..n as i32).collect(), rows, labels, vec!["X".into(); n]).unwrap()
    }

    #[test]
    fn rejects_bad_sigma() {
        let d = dataset(vec![[0.0; 4]], vec![1.0]);
        assert!(matches!(
            GrnnModel::fit(&d, 0.0),
            Err(FitError::InvalidHyperparameter { .. })
        ));
        assert!(GrnnModel::fit(&d, -1.0).is_err());
        assert!(GrnnModel::fit(&d, f64::NAN).is_err());
        assert!(matches!(
            GrnnModel::fit(&Dataset::empty(), 1.0),
            Err(FitError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn stores_training_set() {
        let d = dataset(vec![[0.0; 4], [1.0; 4], [2.0; 4]], vec![1.0, 2.0, 3.0]);
        assert_eq!(GrnnModel::fit(&d, 1.0).unwrap().len(), 3);
    }

    #[test]
    fn single_point_returns_its_label() {
        let d = dataset(vec![[1.0, 2.0, 3.0, 4.0]], vec![7.5]);
        let m = GrnnModel::fit(&d, 0.3).unwrap();
        for x in [[0.0; 4], [100.0; 4], [1.0, 2.0, 3.0, 4.0]] {
            assert_eq!(m.predict(&x), 7.5);
        }
    }

    #[test]
    fn equidistant_query_averages() {
        let d = dataset(
            vec![[0.0, 1.0, 1.0, 1.0], [2.0, 1.0, 1.0, 1.0]],
            vec![0.0, 4.0],
        );
        let m = GrnnModel::fit(&d, 0.7).unwrap();
        assert_eq!(m.predict(&[1.0, 1.0, 1.0, 1.0]), 2.0);
    }

    #[test]
    fn huge_sigma_gives_label_mean() {
        let rows: Vec<FeatureRow> = (0..10).map(|i| [i as f64 * 0.1, 0.5, -0.3, 1.0]).collect();
        let labels: Vec<f64> = (0..10).map(|i| 1.0 + (i as f64).sin()).collect();
        let mean = labels.iter().sum::<f64>() / 10.0;
        let m = GrnnModel::fit(&dataset(rows, labels), 1e6).unwrap();
        let p = m.predict(&[0.3, 0.1, 0.2, 0.9]);
        assert!(((p - mean) / mean).abs() <= 1e-6);
    }

    #[test]
    fn tiny_sigma_gives_nearest_label() {
        let rows = vec![[0.0; 4], [1.0, 0.0, 0.0, 0.0], [5.0, 0.0, 0.0, 0.0]];
        let m = GrnnModel::fit(&dataset(rows, vec![10.0, 20.0, 30.0]), 1e-8).unwrap();
        assert_eq!(m.predict(&[0.9, 0.0, 0.0, 0.0]), 20.0);
        assert_eq!(m.predict(&[3.1, 0.0, 0.0, 0.0]), 30.0);
        let m = GrnnModel::fit(&dataset(vec![[0.0; 4], [1.0; 4]], vec![1.0, 2.0]), 1e-300).unwrap();
        assert_eq!(m.predict(&[0.1; 4]), 1.0);
    }

    proptest! {
        #[test]
        fn output_within_label_range(
            pts in prop::collection::vec((prop::array::uniform4(-5.0..5.0f64), -1e4..1e4f64), 1..20),
            q in prop::array::uniform4(-50.0..50.0f64),
            sigma in 1e-3..1e3f64,
        ) {
            let (rows, labels): (Vec<FeatureRow>, Vec<f64>) = pts.into_iter().unzip();
            let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let m = GrnnModel::fit(&dataset(rows, labels), sigma).unwrap();
            let p = m.predict(&q);
            prop_assert!(p >= lo && p <= hi);
            prop_assert_eq!(p.to_bits(), m.predict(&q).to_bits());
        }
    }
}
