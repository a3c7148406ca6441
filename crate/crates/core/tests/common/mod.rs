//! Independent oracles shared by the integration tests. Nothing here calls
//! into the estimator or forecast code paths it is used to check.
#![allow(dead_code)]

use gmk_core::{KernelParams, SampleSet, TimeGrid};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `s(α − βt)` for `s <= t`, written out independently of the library.
pub fn kernel_block(alpha: &DMatrix<f64>, beta: &DMatrix<f64>, t: f64, s: f64) -> DMatrix<f64> {
    let lo = t.min(s);
    let hi = t.max(s);
    let m = alpha.nrows();
    DMatrix::from_fn(m, m, |i, j| lo * (alpha[(i, j)] - beta[(i, j)] * hi))
}

pub fn dense_gram(alpha: &DMatrix<f64>, beta: &DMatrix<f64>, times: &[f64]) -> DMatrix<f64> {
    let m = alpha.nrows();
    let n = times.len();
    let mut g = DMatrix::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            let b = kernel_block(alpha, beta, times[i], times[j]);
            g.view_mut((i * m, j * m), (m, m)).copy_from(&b);
        }
    }
    g
}

/// SVD-based Moore-Penrose inverse with a relative singular-value cutoff.
pub fn svd_pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.max();
    svd.pseudo_inverse(1e-10 * top.max(f64::MIN_POSITIVE)).unwrap()
}

/// Conditions the zero-mean Gaussian with joint covariance `joint`
/// (observed coordinates first, `n_obs` of them) on `y`.
pub fn condition(joint: &DMatrix<f64>, n_obs: usize, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = joint.nrows();
    let k = n - n_obs;
    let s_oo = joint.view((0, 0), (n_obs, n_obs)).into_owned();
    let s_qo = joint.view((n_obs, 0), (k, n_obs)).into_owned();
    let s_qq = joint.view((n_obs, n_obs), (k, k)).into_owned();
    let pinv = svd_pinv(&s_oo);
    let mean = &s_qo * &pinv * y;
    let cov = s_qq - &s_qo * &pinv * s_qo.transpose();
    (mean, cov)
}

/// Zero-mean multivariate normal log-density via Cholesky.
pub fn mvn_logpdf(cov: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    let chol = cov.clone().cholesky().expect("oracle covariance must be PD");
    let l = chol.l();
    let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let z = l.solve_lower_triangular(y).unwrap();
    -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + log_det + z.dot(&z))
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Reference estimator: the sum written out from the increment pairs directly.
pub fn reference_alpha_hat(times: &[f64], values: &DMatrix<f64>) -> DMatrix<f64> {
    let m = values.nrows();
    let n = times.len();
    let mut acc = DMatrix::zeros(m, m);
    for i in 0..n - 1 {
        let (a, b) = (times[i], times[i + 1]);
        let d = values.column(i) * b - values.column(i + 1) * a;
        acc += &d * d.transpose() / (a * b * (b - a));
    }
    acc / (n - 1) as f64
}

pub fn random_spd(rng: &mut impl Rng, m: usize, floor: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(m, m) * floor
}

pub fn random_symmetric(rng: &mut impl Rng, m: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-scale..scale));
    (&a + a.transpose()) * 0.5
}

/// Sorted random grid of `n` distinct times in `(0, t_max)`.
pub fn random_grid(rng: &mut impl Rng, n: usize, t_max: f64) -> Vec<f64> {
    loop {
        let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..t_max)).collect();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if t.windows(2).all(|w| w[1] - w[0] > 1e-3 * t_max) {
            return t;
        }
    }
}

/// Random admissible parameters whose horizon exceeds `t_max`.
pub fn random_params(rng: &mut impl Rng, m: usize, t_max: f64) -> KernelParams {
    loop {
        let alpha = random_spd(rng, m, 0.2);
        let beta = random_symmetric(rng, m, 0.5 / t_max);
        if let Ok(p) = KernelParams::new(alpha, beta, None) {
            if p.horizon() > 1.2 * t_max {
                return p;
            }
        }
    }
}

/// Draws one path from the exact joint law via an oracle Cholesky factor.
pub fn draw_path(rng: &mut impl Rng, params: &KernelParams, times: &[f64]) -> SampleSet {
    let m = params.dim();
    let g = dense_gram(params.alpha(), params.beta(), times);
    let l = g.cholesky().expect("gram PD").unpack();
    let z = DVector::from_fn(l.nrows(), |_, _| {
        let n: f64 = rng.sample(rand_distr::StandardNormal);
        n
    });
    let y = l * z;
    let values = DMatrix::from_column_slice(m, times.len(), y.as_slice());
    SampleSet::new(TimeGrid::new(times.to_vec()).unwrap(), values).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
