//! Autocorrelation of increments `R_s(t) = X(t + s) − X(t)` of a scalar
//! process with the parametric kernel. For non-overlapping windows (`u >= s`)
//!
//! ```text
//! ρ   = corr(R_s(t), R_s(t + u))   = −sβ / (α − sβ)
//! ρ²  = corr(R_s²(t), R_s²(t + u)) = (sβ)² / (α − sβ)²
//! ```
//!
//! independently of `t` and `u`. Negative `β` gives positively correlated
//! squared increments (volatility clustering).

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::simulate::PathBatch;

/// Equispacing tolerance for grids fed to the empirical estimator.
const SPACING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutocorrReport {
    pub s: f64,
    pub theoretical_rho: f64,
    pub theoretical_rho_sq: f64,
    pub empirical_rho: Option<f64>,
    pub empirical_rho_sq: Option<f64>,
    /// `ρ² <= ρ_sq <= |ρ|`
    pub inequality_ok: bool,
}

pub fn increment_autocorr(params: &KernelParams, s: f64) -> Result<AutocorrReport> {
    if params.dim() != 1 {
        return Err(Error::UnsupportedDimension { m: params.dim() });
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("increment span must be positive, got {s}")));
    }
    let alpha = params.alpha()[(0, 0)];
    let beta = params.beta()[(0, 0)];
    let denom = alpha - s * beta;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "alpha - s*beta = {denom} must be positive at s = {s}"
        )));
    }
    // both increment windows must fit before the horizon: 2s <= α/β
    if alpha - 2.0 * s * beta < 0.0 {
        return Err(Error::Domain(format!(
            "two increments of span {s} do not fit before the horizon (alpha - 2*s*beta < 0)"
        )));
    }
    let rho = -s * beta / denom;
    let rho_sq = rho * rho;
    Ok(AutocorrReport {
        s,
        theoretical_rho: rho,
        theoretical_rho_sq: rho_sq,
        empirical_rho: None,
        empirical_rho_sq: None,
        inequality_ok: rho * rho <= rho_sq && rho_sq <= rho.abs(),
    })
}

/// Pearson correlations of `R_s(t)` with `R_s(t + u)` and of their squares,
/// pooling every window position that fits the grid across all paths. Spans
/// are in grid steps; the implicit origin `X(0) = 0` counts as position 0.
pub fn empirical_increment_autocorr(
    batch: &PathBatch,
    s_index_span: usize,
    u_index_span: usize,
) -> Result<(f64, f64)> {
    if batch.dim() != 1 {
        return Err(Error::UnsupportedDimension { m: batch.dim() });
    }
    if s_index_span == 0 {
        return Err(Error::Config("increment span must be at least one step".into()));
    }
    if u_index_span < s_index_span {
        return Err(Error::Config(format!(
            "window offset {u_index_span} overlaps increment span {s_index_span}"
        )));
    }
    let times = batch.grid().times();
    let step = times[0];
    for (i, &t) in times.iter().enumerate() {
        if (t - step * (i + 1) as f64).abs() > SPACING_TOL * t {
            return Err(Error::Config("grid must be equispaced from the origin".into()));
        }
    }
    // positions 0..=n with position 0 the origin
    let n = times.len();
    if s_index_span + u_index_span > n {
        return Err(Error::Config(format!(
            "grid of {n} steps is too short for span {s_index_span} and offset {u_index_span}"
        )));
    }
    let value = |p: usize, pos: usize| if pos == 0 { 0.0 } else { batch.state(p, pos - 1)[0] };

    let mut first = Vec::new();
    let mut second = Vec::new();
    for p in 0..batch.n_paths() {
        for start in 0..=(n - s_index_span - u_index_span) {
            let a = value(p, start + s_index_span) - value(p, start);
            let later = start + u_index_span;
            let b = value(p, later + s_index_span) - value(p, later);
            first.push(a);
            second.push(b);
        }
    }
    let rho = pearson(&first, &second)?;
    let sq_a: Vec<f64> = first.iter().map(|v| v * v).collect();
    let sq_b: Vec<f64> = second.iter().map(|v| v * v).collect();
    let rho_sq = pearson(&sq_a, &sq_b)?;
    Ok((rho, rho_sq))
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    if a.len() < 2 {
        return Err(Error::Config("need at least two window pairs".into()));
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Numerical("correlation undefined for zero-variance increments".into()));
    }
    Ok(sab / (saa * sbb).sqrt())
}
