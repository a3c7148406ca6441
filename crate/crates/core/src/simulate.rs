//! Path simulation: exact Gaussian sampling from the kernel or a pinned bridge,
//! and Euler–Maruyama integration of the linear SDE
//! `dX = μ₀(t) X dt + σ₀(t) dW`, `X(0) = 0`.
//!
//! Every path draws from its own ChaCha8 stream (stream id = path index), so
//! batches are bitwise reproducible regardless of how paths are scheduled.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::SampleSet;
use crate::kernel::{self, KernelParams, SemiParamModel, TimeGrid};
use crate::linalg;

/// Relative tolerance for snapping recording times onto the step lattice.
const STEP_SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Euler,
}

/// `n_paths` sampled paths on a shared grid, stored path-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    grid: TimeGrid,
    dim: usize,
    n_paths: usize,
    data: Vec<f64>,
    seed: u64,
    method: Method,
}

impl PathBatch {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// State of path `p` at grid index `i`.
    pub fn state(&self, p: usize, i: usize) -> &[f64] {
        let n = self.grid.len();
        let start = (p * n + i) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// One path as a sample set for fitting.
    pub fn path(&self, p: usize) -> SampleSet {
        let n = self.grid.len();
        let start = p * n * self.dim;
        let values = DMatrix::from_column_slice(self.dim, n, &self.data[start..start + n * self.dim]);
        SampleSet::new(self.grid.clone(), values).expect("simulated paths are finite")
    }

    /// Raw storage, path-major then time then coordinate.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        return Err(Error::InvalidInput("n_paths must be at least 1".into()));
    }
    Ok(())
}

/// Draws `mean + F z` per path, where `F Fᵀ` is the joint covariance.
fn sample_gaussian(
    grid: &TimeGrid,
    dim: usize,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    n_paths: usize,
    seed: u64,
) -> Result<PathBatch> {
    let factor = linalg::symmetric_factor(cov)?;
    let len = mean.len();
    let rank = factor.ncols();
    let mut data = vec![0.0; n_paths * len];
    data.par_chunks_mut(len).enumerate().for_each(|(p, out)| {
        let mut rng = path_rng(seed, p);
        let z = DVector::from_fn(rank, |_, _| StandardNormal.sample(&mut rng));
        let x = mean + &factor * z;
        out.copy_from_slice(x.as_slice());
    });
    Ok(PathBatch {
        grid: grid.clone(),
        dim,
        n_paths,
        data,
        seed,
        method: Method::Exact,
    })
}

/// Exact draws from the zero-mean Gaussian with Gram `gram(params, grid)`.
pub fn sample_paths(params: &KernelParams, grid: &TimeGrid, n_paths: usize, seed: u64) -> Result<PathBatch> {
    check_paths(n_paths)?;
    let cov = kernel::gram(params, grid)?;
    let mean = DVector::zeros(cov.nrows());
    sample_gaussian(grid, params.dim(), &mean, &cov, n_paths, seed)
}

/// Exact draws of the matrix-scaled Brownian bridge from `X(0) = 0` to
/// `X(u) = x_u` on `grid ⊂ (0, u]`.
pub fn sample_bridge(
    alpha: &DMatrix<f64>,
    u: f64,
    x_u: &DVector<f64>,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathBatch> {
    check_paths(n_paths)?;
    kernel::check_bridge_alpha(alpha)?;
    let m = alpha.nrows();
    kernel::check_vector_dim(x_u, m)?;
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::Domain(format!("bridge end time must be positive, got {u}")));
    }
    if grid.last() > u {
        return Err(Error::Domain(format!(
            "grid time {} lies beyond the bridge end {u}",
            grid.last()
        )));
    }
    let times = grid.times();
    let n = times.len();
    let mut mean = DVector::zeros(n * m);
    let mut cov = DMatrix::zeros(n * m, n * m);
    for (i, &ti) in times.iter().enumerate() {
        mean.rows_mut(i * m, m).copy_from(&(x_u * (ti / u)));
        for (j, &tj) in times.iter().enumerate() {
            let block = kernel::bridge_cov_unchecked(alpha, u, ti, tj);
            cov.view_mut((i * m, j * m), (m, m)).copy_from(&block);
        }
    }
    sample_gaussian(grid, m, &mean, &cov, n_paths, seed)
}

/// Euler–Maruyama integration with step `dt` up to `t_end`, recording the
/// state at each time of `record_grid`. Drift and diffusion are frozen at the
/// left end of each step; the diffusion factor is the symmetric square root of
/// the active covariance block.
pub fn euler_maruyama(
    model: &SemiParamModel,
    dt: f64,
    t_end: f64,
    n_paths: usize,
    seed: u64,
    record_grid: &TimeGrid,
) -> Result<PathBatch> {
    check_paths(n_paths)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::Config(format!("t_end must be positive, got {t_end}")));
    }
    let steps = lattice_index(t_end, dt)
        .ok_or_else(|| Error::Config(format!("dt = {dt} does not divide t_end = {t_end}")))?;
    let mut record_at = Vec::with_capacity(record_grid.len());
    for &t in record_grid.times() {
        if t > t_end * (1.0 + STEP_SNAP_TOL) {
            return Err(Error::Config(format!("recording time {t} is after t_end = {t_end}")));
        }
        let k = lattice_index(t, dt)
            .ok_or_else(|| Error::Config(format!("dt = {dt} does not divide recording time {t}")))?;
        record_at.push(k);
    }

    let m = model.dim();
    let mut drift: Vec<f64> = Vec::with_capacity(steps * m * m);
    let mut diffusion: Vec<f64> = Vec::with_capacity(steps * m * m);
    let factors: Vec<DMatrix<f64>> = model.blocks().iter().map(linalg::psd_sqrt).collect();
    for k in 0..steps {
        let tau = k as f64 * dt;
        let mu = kernel::drift_mu0(model, tau)?;
        drift.extend(mu.transpose().iter());
        diffusion.extend(factors[model.block_index(tau)].transpose().iter());
    }

    let sqrt_dt = dt.sqrt();
    let n = record_at.len();
    let mut data = vec![0.0; n_paths * n * m];
    data.par_chunks_mut(n * m).enumerate().for_each(|(p, out)| {
        let mut rng = path_rng(seed, p);
        let mut x: Vec<f64> = vec![0.0; m];
        let mut next: Vec<f64> = vec![0.0; m];
        let mut z: Vec<f64> = vec![0.0; m];
        let mut slot = 0;
        while slot < n && record_at[slot] == 0 {
            slot += 1;
        }
        for k in 0..steps {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            let mu = &drift[k * m * m..(k + 1) * m * m];
            let sig = &diffusion[k * m * m..(k + 1) * m * m];
            for r in 0..m {
                let row_mu = &mu[r * m..(r + 1) * m];
                let row_sig = &sig[r * m..(r + 1) * m];
                let mut d = 0.0;
                let mut w = 0.0;
                for c in 0..m {
                    d += row_mu[c] * x[c];
                    w += row_sig[c] * z[c];
                }
                next[r] = x[r] + d * dt + w * sqrt_dt;
            }
            std::mem::swap(&mut x, &mut next);
            while slot < n && record_at[slot] == k + 1 {
                out[slot * m..(slot + 1) * m].copy_from_slice(&x);
                slot += 1;
            }
        }
    });
    Ok(PathBatch {
        grid: record_grid.clone(),
        dim: m,
        n_paths,
        data,
        seed,
        method: Method::Euler,
    })
}

/// Number of steps `k` with `k·dt = t` within the snap tolerance.
fn lattice_index(t: f64, dt: f64) -> Option<usize> {
    let k = (t / dt).round();
    if k < 1.0 || (k * dt - t).abs() > STEP_SNAP_TOL * t.abs().max(dt) {
        return None;
    }
    Some(k as usize)
}

/// Uncentered Monte Carlo estimate `(1/p) Σ X(t_i) X(t_j)ᵀ`.
pub fn empirical_cov(batch: &PathBatch, i: usize, j: usize) -> Result<DMatrix<f64>> {
    let n = batch.grid.len();
    if i >= n || j >= n {
        return Err(Error::InvalidInput(format!(
            "grid indices ({i}, {j}) out of range for {n} points"
        )));
    }
    let m = batch.dim;
    let mut acc = DMatrix::zeros(m, m);
    for p in 0..batch.n_paths {
        let a = batch.state(p, i);
        let b = batch.state(p, j);
        for r in 0..m {
            for c in 0..m {
                acc[(r, c)] += a[r] * b[c];
            }
        }
    }
    Ok(acc / batch.n_paths as f64)
}
