//! Small dense linear-algebra helpers shared by the kernel, estimator and samplers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance used for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues above `-PSD_TOL * trace` are accepted as nonnegative.
pub const PSD_TOL: f64 = 1e-10;

/// Diagonal entries below this fraction of the largest mark a deterministic
/// coordinate in [`symmetric_factor`].
pub const ZERO_VARIANCE_TOL: f64 = 1e-15;

/// Diagonal jitter ladder, in units of `trace / dim`.
pub const JITTER_LADDER: [f64; 3] = [1e-12, 1e-10, 1e-8];

pub fn is_square(a: &DMatrix<f64>) -> bool {
    a.nrows() == a.ncols()
}

/// Largest absolute entry, used as a scale for relative tolerances.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn is_symmetric(a: &DMatrix<f64>, rel_tol: f64) -> bool {
    if !is_square(a) {
        return false;
    }
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

/// Averages `a` with its transpose.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(symmetrize(a));
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Checks that a symmetric matrix is positive semidefinite up to `PSD_TOL * trace`.
pub fn check_psd(a: &DMatrix<f64>, what: &str) -> Result<()> {
    let trace = a.trace().abs();
    let min = min_eigenvalue(a);
    if !min.is_finite() || min < -PSD_TOL * trace {
        return Err(Error::NotPositiveDefinite(format!(
            "{what}: minimum eigenvalue {min:e} (trace {trace:e})"
        )));
    }
    Ok(())
}

/// Checks strict positivity of the spectrum, with the same relative tolerance
/// used for semidefiniteness as the floor.
pub fn check_pd(a: &DMatrix<f64>, what: &str) -> Result<()> {
    let trace = a.trace().abs();
    let min = min_eigenvalue(a);
    if !min.is_finite() || min <= -PSD_TOL * trace || trace == 0.0 {
        return Err(Error::NotPositiveDefinite(format!(
            "{what}: minimum eigenvalue {min:e} (trace {trace:e})"
        )));
    }
    Ok(())
}

/// Symmetric positive semidefinite square root; negative eigenvalues from
/// round-off are clipped to zero.
pub fn psd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix. Eigenvalues with
/// magnitude below `rel_tol * max|eigenvalue|` are treated as zero.
pub fn sym_pinv(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(a));
    let top = eig.eigenvalues.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()));
    if top == 0.0 {
        return DMatrix::zeros(a.nrows(), a.ncols());
    }
    let inv = eig
        .eigenvalues
        .map(|l| if l.abs() > rel_tol * top { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// Inverse with a determinant guard: fails when `|det| <= 1e-12 * scale^m`.
pub fn guarded_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let m = a.nrows() as i32;
    let scale = max_abs(a);
    if scale == 0.0 {
        return None;
    }
    let lu = a.clone().lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() <= 1e-12 * scale.powi(m) {
        return None;
    }
    lu.try_inverse()
}

/// Factor `F` with `F·Fᵀ = cov` for drawing correlated normals. `F` may have
/// fewer columns than rows when some coordinates have zero variance.
///
/// Tries a plain Cholesky factorization, then the eigen square root when the
/// matrix is PSD within tolerance (exact for singular covariances such as a
/// pinned bridge endpoint), then Cholesky with the jitter ladder.
pub fn symmetric_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let sym = symmetrize(cov);
    // Coordinates with zero variance are deterministic; factor the rest so
    // they stay exactly pinned.
    let top = sym.diagonal().amax();
    let active: Vec<usize> = (0..n).filter(|&i| sym[(i, i)] > ZERO_VARIANCE_TOL * top).collect();
    if active.len() < n {
        for i in (0..n).filter(|i| !active.contains(i)) {
            let row_max = sym.row(i).iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            if row_max > ZERO_VARIANCE_TOL.sqrt() * top {
                return Err(Error::Numerical(format!(
                    "coordinate {i} has zero variance but nonzero covariance {row_max:e}"
                )));
            }
        }
        let sub = sym.select_rows(&active).select_columns(&active);
        let sub_factor = symmetric_factor(&sub)?;
        let mut full = DMatrix::zeros(n, active.len());
        for (r, &i) in active.iter().enumerate() {
            full.row_mut(i).copy_from(&sub_factor.row(r));
        }
        return Ok(full);
    }
    if let Some(chol) = sym.clone().cholesky() {
        return Ok(chol.unpack());
    }
    let trace = sym.trace().abs();
    let eig = SymmetricEigen::new(sym.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_finite() && min >= -PSD_TOL * trace {
        let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        return Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots));
    }
    for step in JITTER_LADDER {
        let jitter = step * trace / n as f64;
        let jittered = &sym + DMatrix::identity(n, n) * jitter;
        if let Some(chol) = jittered.cholesky() {
            return Ok(chol.unpack());
        }
    }
    Err(Error::Numerical(format!(
        "covariance factorization failed after jitter escalation (min eigenvalue {min:e})"
    )))
}

/// `x xᵀ`
pub fn outer(x: &DVector<f64>) -> DMatrix<f64> {
    x * x.transpose()
}

/// Maximum elementwise absolute difference.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}
