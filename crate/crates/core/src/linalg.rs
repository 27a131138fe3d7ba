//! Small dense linear-algebra helpers on top of `nalgebra` storage.
//!
//! The covariance factorization is hand-rolled so the positive-definiteness
//! threshold can be applied pivot by pivot; everything else defers to nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest diagonal entry are rejected.
pub const PIVOT_RELATIVE_FLOOR: f64 = 1e-12;

/// Lower-triangular Cholesky factor `L` with `Ω = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: DMatrix<f64>,
}

impl CholeskyFactor {
    /// Factorizes a symmetric matrix, reading only its lower triangle.
    pub fn new(matrix: &DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "covariance is {}x{}, expected square",
                n,
                matrix.ncols()
            )));
        }
        let max_diag = (0..n).map(|i| matrix[(i, i)]).fold(0.0_f64, f64::max);
        let floor = PIVOT_RELATIVE_FLOOR * max_diag;

        let mut lower = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut pivot = matrix[(j, j)];
            for k in 0..j {
                pivot -= lower[(j, k)] * lower[(j, k)];
            }
            if !(pivot > floor) || max_diag <= 0.0 {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: pivot,
                });
            }
            let diag = pivot.sqrt();
            lower[(j, j)] = diag;
            for i in (j + 1)..n {
                let mut s = matrix[(i, j)];
                for k in 0..j {
                    s -= lower[(i, k)] * lower[(j, k)];
                }
                lower[(i, j)] = s / diag;
            }
        }
        Ok(Self { lower })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Solves `Ω x = b` by forward then backward substitution.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let l = &self.lower;
        let mut y = rhs.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }
}

/// `uᵀ M v`.
pub fn bilinear(u: &DVector<f64>, m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    u.dot(&(m * v))
}

/// `vᵀ M v`.
pub fn quad_form(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    bilinear(v, m, v)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Evenly spaced grid with exact endpoints and a symmetric midpoint.
pub fn linspace(start: f64, end: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let last = (steps - 1) as f64;
            (0..steps)
                .map(|k| {
                    let k = k as f64;
                    (start * (last - k) + end * k) / last
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_against_dense_lu() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let chol = CholeskyFactor::new(&m).unwrap();
        let x = chol.solve(&b);
        let lu = m.clone().lu().solve(&b).unwrap();
        assert!(max_abs_diff(&x, &lu) < 1e-14);
        let rebuilt = chol.lower() * chol.lower().transpose();
        assert!((rebuilt - m).amax() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_and_semidefinite() {
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            CholeskyFactor::new(&indefinite),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(CholeskyFactor::new(&singular).is_err());
        // a pivot just above zero but far below the relative floor
        let near = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]);
        assert!(CholeskyFactor::new(&near).is_err());
    }

    #[test]
    fn linspace_hits_zero_exactly() {
        let g = linspace(-0.1, 0.1, 201);
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], -0.1);
        assert_eq!(g[200], 0.1);
        assert_eq!(g[100], 0.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
