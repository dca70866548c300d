//! Thin wrappers over the LAPACK-backed decompositions with crate-wide
//! conventions (ascending order, sign gauge).

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, Inverse, Solve, UPLO};
use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Real-symmetric eigendecomposition with eigenvalues in ascending order.
pub fn eigh_ascending(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    a.eigh(UPLO::Lower)
        .map_err(|e| CoreError::Eigensolver(format!("symmetric eigensolve: {e}")))
}

/// Components smaller than this are treated as zero when fixing signs.
const GAUGE_TOL: f64 = 1e-12;

/// Fix the sign gauge of each eigenvector column in place: the column sum is
/// made non-negative; when the sum vanishes, the first component of magnitude
/// above 1e-12 is made positive instead.
pub fn gauge_columns(m: &mut Array2<f64>) {
    for mut col in m.columns_mut() {
        let s: f64 = col.sum();
        let flip = if s.abs() > GAUGE_TOL {
            s < 0.0
        } else {
            col.iter()
                .find(|c| c.abs() > GAUGE_TOL)
                .is_some_and(|c| *c < 0.0)
        };
        if flip {
            col.mapv_inplace(|x| -x);
        }
    }
}

/// General complex eigendecomposition (columns of the returned matrix are the
/// right eigenvectors).
pub fn eig_complex(a: &Array2<Complex64>) -> Result<(Array1<Complex64>, Array2<Complex64>)> {
    a.eig()
        .map_err(|e| CoreError::Eigensolver(format!("complex eigensolve: {e}")))
}

pub fn inv_complex(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    a.inv()
        .map_err(|e| CoreError::Eigensolver(format!("complex inverse: {e}")))
}

/// Solve `a x = b` for a single complex right-hand side.
pub fn solve_complex(a: &Array2<Complex64>, b: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    a.solve(b)
        .map_err(|e| CoreError::Eigensolver(format!("complex solve: {e}")))
}

/// Max-norm of (m^T m - I); used to assert orthonormality.
pub fn orthonormality_residual(m: &Array2<f64>) -> f64 {
    let g = m.t().dot(m);
    let n = g.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[[i, j]] - target).abs());
        }
    }
    worst
}
