//! Sample moments with the `T − 1` denominator.

use nalgebra::{DMatrix, DVector};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn covariance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / (x.len() as f64 - 1.0)
}

pub fn variance(x: &[f64]) -> f64 {
    covariance(x, x)
}

/// Sample covariance of the columns of `data` (rows are observations).
pub fn sample_covariance(data: &DMatrix<f64>) -> DMatrix<f64> {
    let t = data.nrows() as f64;
    let means = DVector::from_iterator(data.ncols(), data.column_iter().map(|c| c.mean()));
    let mut centered = data.clone();
    for (mut col, m) in centered.column_iter_mut().zip(means.iter()) {
        col.add_scalar_mut(-m);
    }
    let cov = centered.transpose() * &centered / (t - 1.0);
    // exact symmetry regardless of summation order
    (&cov + cov.transpose()) * 0.5
}
