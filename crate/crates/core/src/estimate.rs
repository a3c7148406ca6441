//! Closed-form maximum-likelihood estimation of `(α, β)`.
//!
//! For samples `x_i = X(t_i)`, `0 < t_1 < … < t_n`:
//!
//! ```text
//! α̂ = 1/(n−1) Σ_i (t_{i+1} x_i − t_i x_{i+1})(t_{i+1} x_i − t_i x_{i+1})ᵀ / (t_i t_{i+1} (t_{i+1} − t_i))
//! β̂ = α̂ / t_n − x_n x_nᵀ / t_n²
//! ```
//!
//! The running sum of the rank-one terms is kept so that appending a sample is
//! constant time.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kernel::{self, KernelParams, TimeGrid};
use crate::linalg;

/// Largest `m·n` for which [`fit`] also evaluates the dense log-likelihood.
pub const FIT_LOGLIK_MAX_DIM: usize = 1500;

/// Eigenvalues of the Gram below this fraction of the largest are treated as
/// zero in the pseudo-determinant.
const RANK_TOL: f64 = 1e-10;

/// Relative residual tolerance for the support check of a degenerate Gram.
const SUPPORT_TOL: f64 = 1e-8;

/// Observed path: column `i` of `values` is `X(t_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    grid: TimeGrid,
    values: DMatrix<f64>,
}

impl SampleSet {
    pub fn new(grid: TimeGrid, values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} value columns for {} times",
                values.ncols(),
                grid.len()
            )));
        }
        if values.nrows() == 0 {
            return Err(Error::InvalidInput("state dimension must be >= 1".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sample values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    /// Scalar series.
    pub fn scalar(times: Vec<f64>, xs: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        Self::new(TimeGrid::new(times)?, DMatrix::from_vec(1, n, xs))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn x(&self, i: usize) -> DVector<f64> {
        self.values.column(i).into_owned()
    }

    /// Stacked observation vector `(x_1ᵀ, …, x_nᵀ)ᵀ`.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_column_slice(self.values.as_slice())
    }
}

/// Estimates plus the sufficient statistics needed to extend them.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    alpha_hat: DMatrix<f64>,
    beta_hat: DMatrix<f64>,
    n: usize,
    t_last: f64,
    x_last: DVector<f64>,
    sum_terms: DMatrix<f64>,
    loglik: Option<f64>,
}

impl FitReport {
    fn from_parts(sum_terms: DMatrix<f64>, n: usize, t_last: f64, x_last: DVector<f64>) -> Self {
        let alpha_hat = &sum_terms / (n - 1) as f64;
        let beta_hat = &alpha_hat / t_last - linalg::outer(&x_last) / (t_last * t_last);
        Self {
            alpha_hat,
            beta_hat,
            n,
            t_last,
            x_last,
            sum_terms,
            loglik: None,
        }
    }

    pub fn alpha_hat(&self) -> &DMatrix<f64> {
        &self.alpha_hat
    }

    pub fn beta_hat(&self) -> &DMatrix<f64> {
        &self.beta_hat
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.x_last.len()
    }

    pub fn t_last(&self) -> f64 {
        self.t_last
    }

    pub fn x_last(&self) -> &DVector<f64> {
        &self.x_last
    }

    /// Unnormalized sum of the `n − 1` rank-one terms.
    pub fn sum_terms(&self) -> &DMatrix<f64> {
        &self.sum_terms
    }

    /// Log-likelihood of the fitted data under the fitted parameters, when it
    /// was evaluated.
    pub fn loglik(&self) -> Option<f64> {
        self.loglik
    }

    /// Fitted parameters as a kernel, with the largest admissible horizon.
    pub fn kernel_params(&self) -> Result<KernelParams> {
        KernelParams::new(self.alpha_hat.clone(), self.beta_hat.clone(), None)
    }
}

/// Rank-one contribution of the consecutive pair `(t0, x0)`, `(t1, x1)`.
fn pair_term(t0: f64, x0: &DVector<f64>, t1: f64, x1: &DVector<f64>) -> DMatrix<f64> {
    let d = x0 * t1 - x1 * t0;
    linalg::outer(&d) / (t0 * t1 * (t1 - t0))
}

/// Closed-form maximum-likelihood estimates from one sampled path.
pub fn fit(data: &SampleSet) -> Result<FitReport> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let m = data.dim();
    let t = data.times();
    let mut sum = DMatrix::zeros(m, m);
    for i in 0..n - 1 {
        sum += pair_term(t[i], &data.x(i), t[i + 1], &data.x(i + 1));
    }
    let mut report = FitReport::from_parts(sum, n, t[n - 1], data.x(n - 1));
    if m * n <= FIT_LOGLIK_MAX_DIM {
        if let Ok(params) = report.kernel_params() {
            report.loglik = loglik(&params, data).ok();
        }
    }
    Ok(report)
}

/// Appends one sample in constant time. The result matches [`fit`] on the
/// extended data except that the log-likelihood is not re-evaluated.
pub fn update(report: &FitReport, t_new: f64, x_new: &DVector<f64>) -> Result<FitReport> {
    if !t_new.is_finite() || t_new <= report.t_last {
        return Err(Error::Ordering {
            t: t_new,
            previous: report.t_last,
        });
    }
    kernel::check_vector_dim(x_new, report.dim())?;
    if x_new.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("sample values must be finite".into()));
    }
    let sum = &report.sum_terms + pair_term(report.t_last, &report.x_last, t_new, x_new);
    Ok(FitReport::from_parts(sum, report.n + 1, t_new, x_new.clone()))
}

/// Log of the joint density of the samples under the zero-mean Gaussian law
/// with the given kernel.
///
/// Degenerate Gram matrices use the pseudo-determinant and pseudo-inverse;
/// observations off the support of the law, or sample times outside the
/// kernel's horizon, give `-inf`.
pub fn loglik(params: &KernelParams, data: &SampleSet) -> Result<f64> {
    if params.dim() != data.dim() {
        return Err(Error::InvalidInput(format!(
            "kernel dimension {} does not match data dimension {}",
            params.dim(),
            data.dim()
        )));
    }
    let g = match kernel::gram(params, data.grid()) {
        Ok(g) => g,
        Err(_) => return Ok(f64::NEG_INFINITY),
    };
    Ok(gaussian_logpdf_pinv(&g, &data.stacked()))
}

/// Zero-mean Gaussian log-density with possibly singular covariance.
fn gaussian_logpdf_pinv(cov: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let eig = SymmetricEigen::new(linalg::symmetrize(cov));
    let top = eig.eigenvalues.iter().fold(0.0_f64, |acc, l| acc.max(*l));
    let trace = cov.trace().abs();
    if eig.eigenvalues.iter().any(|&l| l < -linalg::PSD_TOL * trace) || top <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let proj = eig.eigenvectors.transpose() * y;
    let mut rank = 0usize;
    let mut log_pdet = 0.0;
    let mut quad = 0.0;
    let mut null_sq = 0.0;
    for (l, c) in eig.eigenvalues.iter().zip(proj.iter()) {
        if *l > RANK_TOL * top {
            rank += 1;
            log_pdet += l.ln();
            quad += c * c / l;
        } else {
            null_sq += c * c;
        }
    }
    if null_sq.sqrt() > SUPPORT_TOL * y.norm() {
        return f64::NEG_INFINITY;
    }
    -0.5 * (rank as f64 * (2.0 * std::f64::consts::PI).ln() + log_pdet + quad)
}

/// Maximum-likelihood scaling matrix of a matrix-scaled Brownian bridge pinned
/// at `X(t_end) = x_end`, from interior samples: `α̂ = (n−1)⁻¹ Y T⁻¹ Yᵀ` with
/// `Y` the residuals from the linear interpolation and
/// `T_ij = t_i (1 − t_j / t_end)` for `i <= j`.
pub fn bridge_fit(data: &SampleSet, t_end: f64, x_end: &DVector<f64>) -> Result<DMatrix<f64>> {
    let k = data.len();
    if k == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    kernel::check_vector_dim(x_end, data.dim())?;
    let times = data.times();
    if let Some(&bad) = times.iter().find(|&&t| t >= t_end) {
        return Err(Error::Domain(format!(
            "interior time {bad} is not before the bridge end {t_end}"
        )));
    }
    let bridge_cov = DMatrix::from_fn(k, k, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        times[a] * (1.0 - times[b] / t_end)
    });
    let mut residuals = data.values().clone();
    for (j, &t) in times.iter().enumerate() {
        let mut col = residuals.column_mut(j);
        col -= x_end * (t / t_end);
    }
    let chol = bridge_cov
        .cholesky()
        .ok_or_else(|| Error::Numerical("bridge time covariance is not positive definite".into()))?;
    let solved = chol.solve(&residuals.transpose());
    let alpha = &residuals * solved / k as f64;
    Ok(linalg::symmetrize(&alpha))
}
