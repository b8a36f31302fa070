//! Per-column standardization with train-only statistics.

use serde::{Deserialize, Serialize};

use super::{DenseMatrix, FeaturizeError};

/// Per-column mean/stddev learned from a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    /// Learns column statistics from the training matrix.
    pub fn fit(train: &DenseMatrix) -> Result<Self, FeaturizeError> {
        if train.rows() == 0 {
            return Err(FeaturizeError::EmptyTrain);
        }
        let cols = train.cols();
        let n = train.rows() as f64;
        let mut means = vec![0.0; cols];
        for row in train.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut stds = vec![0.0; cols];
        for row in train.iter_rows() {
            for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
                *s += (v - m).powi(2);
            }
        }
        stds.iter_mut().for_each(|s| *s = (*s / n).sqrt());
        Ok(Standardizer { means, stds })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    /// Centers and scales by the stored statistics. Zero-variance columns
    /// map to 0.
    pub fn apply(&self, input: &DenseMatrix) -> Result<DenseMatrix, FeaturizeError> {
        if input.cols() != self.means.len() {
            return Err(FeaturizeError::ShapeMismatch {
                train: self.means.len(),
                input: input.cols(),
            });
        }
        let mut out = Vec::with_capacity(input.rows() * input.cols());
        for row in input.iter_rows() {
            for ((v, m), s) in row.iter().zip(&self.means).zip(&self.stds) {
                out.push(if *s > 0.0 { (v - m) / s } else { 0.0 });
            }
        }
        Ok(DenseMatrix::from_flat(input.rows(), input.cols(), out))
    }

    /// Undoes `apply`. Zero-variance columns recover their training mean.
    pub fn inverse(&self, input: &DenseMatrix) -> Result<DenseMatrix, FeaturizeError> {
        if input.cols() != self.means.len() {
            return Err(FeaturizeError::ShapeMismatch {
                train: self.means.len(),
                input: input.cols(),
            });
        }
        let mut out = Vec::with_capacity(input.rows() * input.cols());
        for row in input.iter_rows() {
            for ((v, m), s) in row.iter().zip(&self.means).zip(&self.stds) {
                out.push(v * s + m);
            }
        }
        Ok(DenseMatrix::from_flat(input.rows(), input.cols(), out))
    }
}

/// Standardizes `apply_to` by the column statistics of `train`, returning the
/// transformed matrix alongside the fitted statistics.
pub fn standardize(
    train: &DenseMatrix,
    apply_to: &DenseMatrix,
) -> Result<(DenseMatrix, Standardizer), FeaturizeError> {
    let scaler = Standardizer::fit(train)?;
    let out = scaler.apply(apply_to)?;
    Ok((out, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect())
    }

    #[test]
    fn train_applied_to_itself_is_centered_unit() {
        let train = matrix(&[&[1.0, 5.0], &[3.0, 5.0], &[5.0, 5.0]]);
        let (out, _) = standardize(&train, &train).unwrap();
        for col in 0..2 {
            let vals: Vec<f64> = out.iter_rows().map(|r| r[col]).collect();
            let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-12);
        }
        // Constant column maps to zeros.
        assert!(out.iter_rows().all(|r| r[1] == 0.0));
        // Non-constant column has unit (population) variance.
        let var: f64 = out.iter_rows().map(|r| r[0] * r[0]).sum::<f64>() / 3.0;
        assert!((var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_transform() {
        // Train stats mu = 2, sigma = 2 -> x = 6 maps to 2.0.
        let train = matrix(&[&[0.0], &[2.0], &[4.0]]);
        let test = matrix(&[&[6.0]]);
        let (out, scaler) = standardize(&train, &test).unwrap();
        assert!((scaler.means()[0] - 2.0).abs() < 1e-12);
        assert!((scaler.stds()[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        // With exact sigma = 2 the spec example gives 2.0; population sigma
        // of this 3-point train is sqrt(8/3), so check the formula directly.
        assert!((out.row(0)[0] - (6.0 - 2.0) / scaler.stds()[0]).abs() < 1e-12);
        let manual = Standardizer { means: vec![2.0], stds: vec![2.0] };
        assert_eq!(manual.apply(&test).unwrap().row(0)[0], 2.0);
    }

    #[test]
    fn inverse_round_trip() {
        let train = matrix(&[&[1.0, 7.0, -2.0], &[4.0, 7.0, 0.5], &[9.0, 7.0, 3.25]]);
        let scaler = Standardizer::fit(&train).unwrap();
        let forward = scaler.apply(&train).unwrap();
        let back = scaler.inverse(&forward).unwrap();
        for (orig, rec) in train.iter_rows().zip(back.iter_rows()) {
            for (o, r) in orig.iter().zip(rec) {
                assert!((o - r).abs() <= 1e-9 * o.abs().max(1.0));
            }
        }
    }

    #[test]
    fn shape_mismatch() {
        let train = matrix(&[&[1.0, 2.0]]);
        let bad = matrix(&[&[1.0]]);
        let scaler = Standardizer::fit(&train).unwrap();
        assert!(matches!(scaler.apply(&bad), Err(FeaturizeError::ShapeMismatch { .. })));
        let empty = DenseMatrix::from_rows(Vec::new());
        assert!(matches!(Standardizer::fit(&empty), Err(FeaturizeError::EmptyTrain)));
    }
}
