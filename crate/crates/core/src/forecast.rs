//! Posterior moments beyond the last observation under the fitted kernel.
//!
//! The fitted process is Markov, so conditioning on all samples reduces to
//! conditioning on `X(t_n) = x_n`. Because `Γ̂(t_n, t_n) = x_n x_nᵀ` is rank
//! one, its Moore-Penrose inverse is `x_n x_nᵀ / (x_nᵀ x_n)²` and the moments
//! are
//!
//! ```text
//! E[X(t)]      = x_n + (x_n / t_n − α̂ x_n / (x_nᵀ x_n)) (t − t_n)
//! Cov(t, s)    = Γ̂(t, s) − E[X(t)] E[X(s)]ᵀ
//! ```
//!
//! where the second form uses `Γ̂(t, t_n) x_n / (x_nᵀ x_n) = E[X(t)]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimate::FitReport;
use crate::kernel::{self, HORIZON_SLACK};

/// Two-sided 95% marginal band under Gaussianity.
pub const DEFAULT_BAND: f64 = 1.96;

/// Supremum of the times where `α̂ − β̂t` stays positive definite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonBound {
    pub value: f64,
    /// `α̂` is not positive definite, so no horizon could be computed.
    pub degenerate: bool,
}

impl HorizonBound {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

pub fn max_horizon(report: &FitReport) -> HorizonBound {
    match kernel::admissible_horizon(report.alpha_hat(), report.beta_hat()) {
        Some(value) => HorizonBound {
            value,
            degenerate: false,
        },
        None => HorizonBound {
            value: 0.0,
            degenerate: true,
        },
    }
}

fn check_not_before(report: &FitReport, t: f64) -> Result<()> {
    if !t.is_finite() || t < report.t_last() {
        return Err(Error::Domain(format!(
            "query time {t} precedes the last observation {}",
            report.t_last()
        )));
    }
    Ok(())
}

/// Accepts `t_last` itself and anything up to the horizon (closed, with slack).
fn check_query(report: &FitReport, bound: HorizonBound, t: f64) -> Result<()> {
    check_not_before(report, t)?;
    if t > report.t_last() && t > bound.value * (1.0 + HORIZON_SLACK) {
        return Err(Error::Horizon {
            t,
            bound: bound.value,
        });
    }
    Ok(())
}

/// Posterior mean at `t >= t_last`; affine in `t`.
pub fn posterior_mean(report: &FitReport, t: f64) -> Result<DVector<f64>> {
    check_not_before(report, t)?;
    Ok(mean_unchecked(report, t))
}

fn mean_unchecked(report: &FitReport, t: f64) -> DVector<f64> {
    let x = report.x_last();
    let q = x.dot(x);
    if q == 0.0 {
        return DVector::zeros(x.len());
    }
    let t_n = report.t_last();
    let slope = x / t_n - report.alpha_hat() * x / q;
    x + slope * (t - t_n)
}

/// Posterior cross-covariance between `X(t)` and `X(s)`, both at or after
/// `t_last` and within the fitted horizon.
pub fn posterior_cov(report: &FitReport, t: f64, s: f64) -> Result<DMatrix<f64>> {
    let bound = max_horizon(report);
    check_query(report, bound, t)?;
    check_query(report, bound, s)?;
    Ok(posterior_cov_closed_form(report, t, s))
}

/// The closed-form posterior covariance without the horizon check. Past the
/// horizon `Γ̂` is no longer a covariance and the result need not be PSD.
pub fn posterior_cov_closed_form(report: &FitReport, t: f64, s: f64) -> DMatrix<f64> {
    let prior = fitted_kernel(report, t, s);
    let mt = mean_unchecked(report, t);
    let ms = mean_unchecked(report, s);
    prior - mt * ms.transpose()
}

/// `Γ̂(t, s)` rewritten through `β̂ = α̂/t_n − x_n x_nᵀ/t_n²` so that
/// `Γ̂(t_n, t_n) = x_n x_nᵀ` holds without rounding.
fn fitted_kernel(report: &FitReport, t: f64, s: f64) -> DMatrix<f64> {
    let (early, late) = if s <= t { (s, t) } else { (t, s) };
    let t_n = report.t_last();
    let x = report.x_last();
    report.alpha_hat() * (early * (t_n - late) / t_n) + x * x.transpose() * ((early * late) / (t_n * t_n))
}

/// Posterior moments over a query grid with marginal bands.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub query_times: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
    pub band_multiplier: f64,
}

impl Forecast {
    pub fn len(&self) -> usize {
        self.query_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.query_times.is_empty()
    }

    /// Marginal standard deviations at query `i`.
    pub fn sd(&self, i: usize) -> DVector<f64> {
        self.covariances[i].diagonal().map(|v| v.max(0.0).sqrt())
    }

    pub fn lower(&self, i: usize) -> DVector<f64> {
        &self.means[i] - self.sd(i) * self.band_multiplier
    }

    pub fn upper(&self, i: usize) -> DVector<f64> {
        &self.means[i] + self.sd(i) * self.band_multiplier
    }
}

/// Evaluates mean and covariance at each query time. Queries must be strictly
/// increasing, start at or after `t_last`, and stay within the horizon.
pub fn forecast_path(report: &FitReport, query: &[f64], band_multiplier: f64) -> Result<Forecast> {
    if !(band_multiplier > 0.0) || !band_multiplier.is_finite() {
        return Err(Error::InvalidInput(format!(
            "band multiplier must be positive, got {band_multiplier}"
        )));
    }
    if query.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("query times must be strictly increasing".into()));
    }
    let bound = max_horizon(report);
    let mut means = Vec::with_capacity(query.len());
    let mut covariances = Vec::with_capacity(query.len());
    for &t in query {
        check_query(report, bound, t)?;
        means.push(mean_unchecked(report, t));
        covariances.push(posterior_cov_closed_form(report, t, t));
    }
    Ok(Forecast {
        query_times: query.to_vec(),
        means,
        covariances,
        band_multiplier,
    })
}
