//! Robust feature scaling: center on the median, scale by the
//! interquartile range, both fit on the training split only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

use super::features::FeatureMatrix;

/// Per-feature median and IQR. Quartiles interpolate linearly between order
/// statistics (index = (k - 1) * q).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams<F: Real> {
    pub medians: Vec<F>,
    pub iqrs: Vec<F>,
}

impl<F: Real> ScalerParams<F> {
    pub fn width(&self) -> usize {
        self.medians.len()
    }
}

fn quantile<F: Real>(sorted: &[F], q: f64) -> F {
    let k = sorted.len();
    if k == 1 {
        return sorted[0];
    }
    let pos = (k - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let frac = F::from_f64_lossy(pos - lo as f64);
    if lo + 1 < k {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

pub fn fit_scaler<F: Real>(train: &FeatureMatrix<F>) -> Result<ScalerParams<F>> {
    if train.n_rows() == 0 {
        return Err(Error::Argument("cannot fit a scaler on an empty matrix".to_string()));
    }
    let mut medians = Vec::with_capacity(train.width());
    let mut iqrs = Vec::with_capacity(train.width());
    for j in 0..train.width() {
        let mut col = train.column(j);
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push(quantile(&col, 0.5));
        iqrs.push(quantile(&col, 0.75) - quantile(&col, 0.25));
    }
    Ok(ScalerParams { medians, iqrs })
}

/// Scaled value = (x - median) / IQR; features with zero IQR scale to 0.
pub fn apply_scaler<F: Real>(matrix: &FeatureMatrix<F>, params: &ScalerParams<F>) -> Result<FeatureMatrix<F>> {
    if params.width() != matrix.width() {
        return Err(Error::Shape(format!(
            "scaler has {} features, matrix has {}",
            params.width(),
            matrix.width()
        )));
    }
    let width = matrix.width();
    let values: Vec<F> = matrix
        .values()
        .iter()
        .enumerate()
        .map(|(idx, &x)| {
            let j = idx % width;
            let iqr = params.iqrs[j];
            if iqr == F::zero() {
                F::zero()
            } else {
                (x - params.medians[j]) / iqr
            }
        })
        .collect();
    Ok(matrix.replace_values(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_column(values: &[f64]) -> FeatureMatrix<f64> {
        FeatureMatrix::from_rows(
            vec!["x".into()],
            values.iter().map(|&v| vec![v]).collect(),
            vec![false; values.len()],
        )
        .unwrap()
    }

    #[test]
    fn quartiles_by_linear_interpolation() {
        // [1, 2, 3, 4, 100] -> median 3, Q1 2, Q3 4, IQR 2; 100 scales to 48.5
        let m = single_column(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        let p = fit_scaler(&m).unwrap();
        assert_eq!(p.medians[0], 3.0);
        assert_eq!(p.iqrs[0], 2.0);
        let scaled = apply_scaler(&m, &p).unwrap();
        assert_eq!(scaled.row(4)[0], 48.5);
    }

    #[test]
    fn interpolated_quartiles_on_even_count() {
        // [1, 2, 3, 4]: Q1 at pos 0.75 -> 1.75, median 2.5, Q3 at 2.25 -> 3.25
        let m = single_column(&[4.0, 1.0, 3.0, 2.0]);
        let p = fit_scaler(&m).unwrap();
        assert!((p.medians[0] - 2.5).abs() < 1e-12);
        assert!((p.iqrs[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn constant_column_scales_to_zero() {
        let m = single_column(&[7.0; 6]);
        let p = fit_scaler(&m).unwrap();
        assert_eq!(p.iqrs[0], 0.0);
        let scaled = apply_scaler(&m, &p).unwrap();
        assert!(scaled.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn median_row_scales_to_zeros() {
        let m = FeatureMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec![
                vec![1.0, 10.0],
                vec![2.0, 20.0],
                vec![3.0, 30.0],
                vec![4.0, 40.0],
                vec![5.0, 50.0],
            ],
            vec![false; 5],
        )
        .unwrap();
        let p = fit_scaler(&m).unwrap();
        let median_row = FeatureMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec![vec![p.medians[0], p.medians[1]]],
            vec![false],
        )
        .unwrap();
        let scaled = apply_scaler(&median_row, &p).unwrap();
        assert!(scaled.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn width_mismatch_is_shape_error() {
        let m = single_column(&[1.0, 2.0]);
        let p = ScalerParams { medians: vec![0.0, 0.0], iqrs: vec![1.0, 1.0] };
        assert!(matches!(apply_scaler(&m, &p), Err(Error::Shape(_))));
    }
}
