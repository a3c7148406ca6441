//! Covariance kernels of stationary-increment Gaussian Markov processes.
//!
//! The parametric kernel is
//!
//! ```text
//! Γ(t, s) = s (α − β t)   for 0 ≤ s ≤ t < T
//! Γ(t, s) = t (α − β s)   for 0 ≤ t < s < T
//! ```
//!
//! and the semi-parametric kernel of an increment family `X_ε` with drift
//! coupling matrix `ω` and piecewise-constant instantaneous covariance
//! `a(u) = σ₀(u)σ₀ᵀ(u)` is
//!
//! ```text
//! Γ_ε(t, s) = f_ε(t) (f_ε(s) − I) ω,   f_ε(t) = I + (∫_ε^{t+ε} a(u) du) ω⁻¹
//! ```
//!
//! With a constant `a` the two coincide with `α = a`, `β = −a ω⁻¹ a`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, PSD_TOL, SYMMETRY_TOL};

/// Relative slack allowed past a finite horizon. At the horizon itself
/// `α − βT` is singular but still semidefinite, which is the situation of a
/// multivariate fit evaluated at its last sample time.
pub const HORIZON_SLACK: f64 = 1e-9;

/// Strictly increasing, strictly positive sample times. The origin `X(0) = 0`
/// is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidInput("time grid is empty".into()));
        }
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "times must be strictly positive and finite (index {i}: {t})"
                )));
            }
            if i > 0 && t <= times[i - 1] {
                return Err(Error::InvalidInput(format!(
                    "times must be strictly increasing (index {i}: {t} after {})",
                    times[i - 1]
                )));
            }
        }
        Ok(Self { times })
    }

    /// `n` points `step, 2·step, …, n·step`.
    pub fn equispaced(step: f64, n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| step * i as f64).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.times[self.times.len() - 1]
    }
}

/// Parameters `(α, β)` of the stationary-increment kernel together with the
/// horizon over which `α − βt` stays positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    alpha: DMatrix<f64>,
    beta: DMatrix<f64>,
    horizon: f64,
}

impl KernelParams {
    /// Validates and stores the parameters. With `horizon = None` the largest
    /// admissible horizon is used (possibly infinite).
    pub fn new(alpha: DMatrix<f64>, beta: DMatrix<f64>, horizon: Option<f64>) -> Result<Self> {
        let m = alpha.nrows();
        if m == 0 || !linalg::is_square(&alpha) || beta.shape() != alpha.shape() {
            return Err(Error::InvalidInput(format!(
                "alpha {:?} and beta {:?} must be square of equal dimension >= 1",
                alpha.shape(),
                beta.shape()
            )));
        }
        if alpha.iter().chain(beta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("kernel parameters must be finite".into()));
        }
        if !linalg::is_symmetric(&alpha, SYMMETRY_TOL) {
            return Err(Error::InvalidInput("alpha must be symmetric".into()));
        }
        if !linalg::is_symmetric(&beta, SYMMETRY_TOL) {
            return Err(Error::InvalidInput("beta must be symmetric".into()));
        }
        let alpha = linalg::symmetrize(&alpha);
        let beta = linalg::symmetrize(&beta);
        linalg::check_pd(&alpha, "alpha - beta*t at t = 0")?;

        let horizon = match horizon {
            None => admissible_horizon(&alpha, &beta).ok_or_else(|| {
                Error::NotPositiveDefinite("alpha must be positive definite".into())
            })?,
            Some(h) if h.is_nan() || h <= 0.0 => {
                return Err(Error::InvalidInput(format!("horizon must be positive, got {h}")))
            }
            Some(h) if h.is_infinite() => {
                let top = linalg::symmetrize(&beta)
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                if top > PSD_TOL * beta.trace().abs().max(linalg::max_abs(&alpha)) {
                    return Err(Error::Domain(
                        "an infinite horizon requires beta without positive eigenvalues".into(),
                    ));
                }
                h
            }
            Some(h) => {
                let probe = h * (1.0 - HORIZON_SLACK);
                linalg::check_pd(&(&alpha - &beta * probe), &format!("alpha - beta*t at t = {probe}"))?;
                h
            }
        };
        Ok(Self {
            alpha,
            beta,
            horizon,
        })
    }

    /// One-dimensional convenience constructor.
    pub fn scalar(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_element(1, 1, alpha),
            DMatrix::from_element(1, 1, beta),
            None,
        )
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.alpha.nrows()
    }

    /// Checks `0 <= t` and `t` within the horizon (closed endpoint, with slack).
    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("time {t} must be finite and nonnegative")));
        }
        if t >= self.horizon && t > self.horizon * (1.0 + HORIZON_SLACK) {
            return Err(Error::Horizon {
                t,
                bound: self.horizon,
            });
        }
        Ok(())
    }

    /// On-demand check that `α − βt` is positive semidefinite at `t`.
    pub fn check_admissible_at(&self, t: f64) -> Result<()> {
        self.check_time(t)?;
        linalg::check_psd(&self.variance_rate(t), &format!("alpha - beta*t at t = {t}"))
    }

    /// `α − βt`
    pub fn variance_rate(&self, t: f64) -> DMatrix<f64> {
        &self.alpha - &self.beta * t
    }
}

/// Supremum of `t >= 0` with `α − βt` positive definite, or `None` when `α`
/// itself is not positive definite. Computed from the generalized eigenvalues
/// of `(β, α)`: with `α = LLᵀ`, `α − βt ≻ 0` iff `1 − tλ > 0` for every
/// eigenvalue `λ` of `L⁻¹βL⁻ᵀ`.
pub fn admissible_horizon(alpha: &DMatrix<f64>, beta: &DMatrix<f64>) -> Option<f64> {
    let chol = linalg::symmetrize(alpha).cholesky()?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse()?;
    let reduced = linalg::symmetrize(&(&l_inv * beta * l_inv.transpose()));
    let top = reduced
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return None;
    }
    Some(if top > 0.0 { 1.0 / top } else { f64::INFINITY })
}

/// `Γ(t, s)`; transpose-symmetric by construction.
pub fn kernel_eval(params: &KernelParams, t: f64, s: f64) -> Result<DMatrix<f64>> {
    params.check_time(t)?;
    params.check_time(s)?;
    Ok(kernel_unchecked(params.alpha(), params.beta(), t, s))
}

/// `Γ(t, s)` without any domain check.
pub(crate) fn kernel_unchecked(alpha: &DMatrix<f64>, beta: &DMatrix<f64>, t: f64, s: f64) -> DMatrix<f64> {
    let (early, late) = if s <= t { (s, t) } else { (t, s) };
    (alpha - beta * late) * early
}

/// Block Gram matrix over a grid: block `(i, j)` is `Γ(t_i, t_j)`.
pub fn gram(params: &KernelParams, grid: &TimeGrid) -> Result<DMatrix<f64>> {
    for &t in grid.times() {
        params.check_time(t)?;
    }
    Ok(gram_unchecked(params.alpha(), params.beta(), grid.times()))
}

pub(crate) fn gram_unchecked(alpha: &DMatrix<f64>, beta: &DMatrix<f64>, times: &[f64]) -> DMatrix<f64> {
    let m = alpha.nrows();
    let n = times.len();
    let mut g = DMatrix::zeros(m * n, m * n);
    for (i, &ti) in times.iter().enumerate() {
        for (j, &tj) in times.iter().enumerate().skip(i) {
            let block = kernel_unchecked(alpha, beta, ti, tj);
            g.view_mut((i * m, j * m), (m, m)).copy_from(&block);
            if i != j {
                g.view_mut((j * m, i * m), (m, m)).copy_from(&block.transpose());
            }
        }
    }
    g
}

/// Conditional mean at `t` and conditional cross-covariance `(t, s)` given
/// `X(u) = x_u`, using the Moore-Penrose inverse of `Γ(u, u)`.
pub fn conditional_moments(
    params: &KernelParams,
    u: f64,
    x_u: &DVector<f64>,
    t: f64,
    s: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!(
            "conditioning time must be positive, got {u}"
        )));
    }
    check_vector_dim(x_u, params.dim())?;
    let g_uu = kernel_eval(params, u, u)?;
    let g_tu = kernel_eval(params, t, u)?;
    let g_us = kernel_eval(params, u, s)?;
    let g_ts = kernel_eval(params, t, s)?;
    let pinv = linalg::sym_pinv(&g_uu, 1e-12);
    let mean = &g_tu * &pinv * x_u;
    let cov = g_ts - &g_tu * &pinv * g_us;
    Ok((mean, cov))
}

/// Moments of the matrix-scaled Brownian bridge pinned at `X(u) = x_u`:
/// mean `(t/u) x_u` and covariance `(1 − t/u) s α` for `s <= t`.
pub fn bridge_moments(
    alpha: &DMatrix<f64>,
    u: f64,
    x_u: &DVector<f64>,
    t: f64,
    s: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    check_bridge_alpha(alpha)?;
    check_vector_dim(x_u, alpha.nrows())?;
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain(format!("bridge end time must be positive, got {u}")));
    }
    for v in [t, s] {
        if !(0.0..=u).contains(&v) {
            return Err(Error::Domain(format!("time {v} outside bridge interval [0, {u}]")));
        }
    }
    Ok((x_u * (t / u), bridge_cov_unchecked(alpha, u, t, s)))
}

pub(crate) fn bridge_cov_unchecked(alpha: &DMatrix<f64>, u: f64, t: f64, s: f64) -> DMatrix<f64> {
    let (early, late) = if s <= t { (s, t) } else { (t, s) };
    alpha * ((1.0 - late / u) * early)
}

pub(crate) fn check_bridge_alpha(alpha: &DMatrix<f64>) -> Result<()> {
    if alpha.nrows() == 0 || !linalg::is_square(alpha) {
        return Err(Error::InvalidInput("alpha must be square".into()));
    }
    if !linalg::is_symmetric(alpha, SYMMETRY_TOL) {
        return Err(Error::InvalidInput("alpha must be symmetric".into()));
    }
    linalg::check_pd(alpha, "bridge alpha")
}

pub(crate) fn check_vector_dim(x: &DVector<f64>, m: usize) -> Result<()> {
    if x.len() != m {
        return Err(Error::InvalidInput(format!(
            "state vector has length {}, expected {m}",
            x.len()
        )));
    }
    Ok(())
}

/// Drift coupling `ω` and a piecewise-constant table of instantaneous
/// covariances `σ₀σ₀ᵀ`, block `k` covering `[u_k, u_{k+1})` and the last block
/// extending to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiParamModel {
    omega: DMatrix<f64>,
    omega_inv: DMatrix<f64>,
    breakpoints: Vec<f64>,
    blocks: Vec<DMatrix<f64>>,
}

impl SemiParamModel {
    /// `breakpoints[0]` must be `0` and `blocks.len() == breakpoints.len()`.
    pub fn new(omega: DMatrix<f64>, breakpoints: Vec<f64>, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = omega.nrows();
        if m == 0 || !linalg::is_square(&omega) {
            return Err(Error::InvalidInput("omega must be square of dimension >= 1".into()));
        }
        if !linalg::is_symmetric(&omega, SYMMETRY_TOL) {
            return Err(Error::InvalidInput("omega must be symmetric".into()));
        }
        if breakpoints.first() != Some(&0.0) {
            return Err(Error::InvalidInput("first breakpoint must be 0".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidInput(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if blocks.len() != breakpoints.len() {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints need {} diffusion blocks, got {}",
                breakpoints.len(),
                breakpoints.len(),
                blocks.len()
            )));
        }
        for (k, b) in blocks.iter().enumerate() {
            if b.shape() != (m, m) {
                return Err(Error::InvalidInput(format!("diffusion block {k} has wrong shape")));
            }
            if !linalg::is_symmetric(b, SYMMETRY_TOL) {
                return Err(Error::InvalidInput(format!("diffusion block {k} must be symmetric")));
            }
            linalg::check_psd(b, &format!("diffusion block {k}"))?;
        }
        linalg::check_pd(&blocks[0], "diffusion block on [0, u_1)")?;
        let omega = linalg::symmetrize(&omega);
        let omega_inv = linalg::guarded_inverse(&omega)
            .ok_or_else(|| Error::InvalidInput("omega must be nonsingular".into()))?;
        Ok(Self {
            omega,
            omega_inv,
            breakpoints,
            blocks: blocks.iter().map(linalg::symmetrize).collect(),
        })
    }

    /// Constant diffusion block `a` on `[0, ∞)`.
    pub fn constant(omega: DMatrix<f64>, a: DMatrix<f64>) -> Result<Self> {
        Self::new(omega, vec![0.0], vec![a])
    }

    /// Skips the diffusion checks; used to drive the simulator with degenerate
    /// tables in tests.
    #[cfg(test)]
    pub(crate) fn new_unchecked(omega: DMatrix<f64>, breakpoints: Vec<f64>, blocks: Vec<DMatrix<f64>>) -> Self {
        let omega_inv = omega.clone().try_inverse().expect("omega invertible");
        Self {
            omega,
            omega_inv,
            breakpoints,
            blocks,
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// Index of the block covering time `t`.
    pub fn block_index(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&u| u <= t).saturating_sub(1)
    }

    /// `σ₀σ₀ᵀ(t)`
    pub fn block_at(&self, t: f64) -> &DMatrix<f64> {
        &self.blocks[self.block_index(t)]
    }

    /// `∫_start^{start+len} σ₀σ₀ᵀ(u) du`, with overlaps measured relative to
    /// `start` so that a constant table gives exactly `len · a`.
    pub fn integral(&self, start: f64, len: f64) -> DMatrix<f64> {
        let m = self.dim();
        let mut acc = DMatrix::zeros(m, m);
        for (k, block) in self.blocks.iter().enumerate() {
            let lo = (self.breakpoints[k] - start).clamp(0.0, len);
            let hi = match self.breakpoints.get(k + 1) {
                Some(&u) => (u - start).clamp(0.0, len),
                None => len,
            };
            if hi > lo {
                acc += block * (hi - lo);
            }
        }
        acc
    }
}

fn check_nonneg(what: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("{what} must be finite and nonnegative, got {v}")));
    }
    Ok(())
}

/// `f_ε(t) = I + (∫_ε^{t+ε} σ₀σ₀ᵀ du) ω⁻¹`
pub fn semiparam_f(model: &SemiParamModel, eps: f64, t: f64) -> Result<DMatrix<f64>> {
    check_nonneg("eps", eps)?;
    check_nonneg("t", t)?;
    Ok(f_unchecked(model, eps, t))
}

fn f_unchecked(model: &SemiParamModel, eps: f64, t: f64) -> DMatrix<f64> {
    let m = model.dim();
    DMatrix::identity(m, m) + model.integral(eps, t) * &model.omega_inv
}

/// `Γ_ε(t, s)`: `f_ε(t)(f_ε(s) − I)ω` for `s <= t`, `(f_ε(t) − I)f_ε(s)ω` otherwise.
pub fn semiparam_kernel(model: &SemiParamModel, eps: f64, t: f64, s: f64) -> Result<DMatrix<f64>> {
    check_nonneg("eps", eps)?;
    check_nonneg("t", t)?;
    check_nonneg("s", s)?;
    let m = model.dim();
    let id = DMatrix::<f64>::identity(m, m);
    // f_ε − I is formed directly to avoid cancellation when ω is large
    let gt = model.integral(eps, t) * &model.omega_inv;
    let gs = model.integral(eps, s) * &model.omega_inv;
    Ok(if s <= t {
        (id + gt) * gs * &model.omega
    } else {
        gt * (id + gs) * &model.omega
    })
}

/// Drift matrix `μ₀(t) = σ₀σ₀ᵀ(t) (ω + ∫₀ᵗ σ₀σ₀ᵀ du)⁻¹`.
pub fn drift_mu0(model: &SemiParamModel, t: f64) -> Result<DMatrix<f64>> {
    check_nonneg("t", t)?;
    let inner = &model.omega + model.integral(0.0, t);
    let inv = linalg::guarded_inverse(&inner).ok_or(Error::Singular { t })?;
    Ok(model.block_at(t) * inv)
}
