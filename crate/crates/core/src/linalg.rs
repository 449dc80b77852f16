//! Small dense symmetric-matrix helpers. Dimensions here are 3..12, so
//! everything is plain `O(n³)` dense work on `nalgebra` matrices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest `|M_ij − M_ji|`.
pub fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut d = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            d = d.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    d
}

/// `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of the symmetric form `a` measured against the positive
/// definite metric `g`, i.e. the spectrum of `g⁻¹a`. Sorted ascending.
pub fn eigenvalues_wrt_metric(a: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("metric is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("singular metric".into()))?;
    let reduced = &linv * a * linv.transpose();
    Ok(symmetric_eigenvalues(&reduced))
}
