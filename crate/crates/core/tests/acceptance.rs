//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs as a plain binary (`harness = false`).

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use gmk_core::forecast::posterior_cov_closed_form;
use gmk_core::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

type Outcome = std::result::Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, limit: Duration) -> std::result::Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("runtime {took:?} exceeds {limit:?}"))?;
    Ok(took)
}

fn scalar_params(a: f64, b: f64) -> KernelParams {
    KernelParams::scalar(a, b).unwrap()
}

/// Conditional log-likelihood of `x_1..x_{n-1}` given `x_n` under `(α, β)`,
/// computed from the dense joint Gram by Schur complement.
fn conditional_loglik(alpha: f64, beta: f64, times: &[f64], xs: &[f64]) -> f64 {
    let n = times.len();
    let mut order = vec![times[n - 1]];
    order.extend_from_slice(&times[..n - 1]);
    let a = DMatrix::from_element(1, 1, alpha);
    let b = DMatrix::from_element(1, 1, beta);
    let joint = dense_gram(&a, &b, &order);
    let (mean, cov) = condition(&joint, 1, &DVector::from_element(1, xs[n - 1]));
    let rest = DVector::from_column_slice(&xs[..n - 1]);
    mvn_logpdf(&cov, &(rest - mean))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let n = r.random_range(3..=6);
        let p = random_params(&mut r, 1, 4.0);
        let times = random_grid(&mut r, n, 4.0);
        let data = draw_path(&mut r, &p, &times);
        let xs: Vec<f64> = data.values().iter().copied().collect();
        let closed = fit(&data).map_err(|e| e.to_string())?.alpha_hat()[(0, 0)];
        let beta = p.beta()[(0, 0)];
        let log_a = golden_max(
            |la| conditional_loglik(la.exp(), beta, &times, &xs),
            closed.ln() - 8.0,
            closed.ln() + 8.0,
            1e-12,
        );
        let numeric = log_a.exp();
        worst = worst.max((numeric - closed).abs() / closed);
    }
    ensure(worst <= 1e-6, || format!("max relative gap {worst:.3e} > 1e-6"))?;
    let took = within_budget(start, Duration::from_secs(10))?;
    Ok(format!("max relative gap {worst:.2e} over 20 instances in {took:.2?}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let alpha = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
    let beta = DMatrix::identity(2, 2) * 0.2;
    let params = KernelParams::new(alpha.clone(), beta.clone(), None).map_err(|e| e.to_string())?;
    let grid = TimeGrid::new(vec![0.5, 1.0, 1.5, 2.0]).unwrap();
    let paths = 10_000;
    let batch = sample_paths(&params, &grid, paths, 2024).map_err(|e| e.to_string())?;
    let mut a_sum = vec![0.0; 4];
    let mut a_sq = vec![0.0; 4];
    let mut b_sum = vec![0.0; 4];
    let mut b_sq = vec![0.0; 4];
    for p in 0..paths {
        let rep = fit(&batch.path(p)).map_err(|e| e.to_string())?;
        for k in 0..4 {
            let (a, b) = (rep.alpha_hat()[k], rep.beta_hat()[k]);
            a_sum[k] += a;
            a_sq[k] += a * a;
            b_sum[k] += b;
            b_sq[k] += b * b;
        }
    }
    let nf = paths as f64;
    let mut worst = 0.0_f64;
    for k in 0..4 {
        for (sum, sq, truth) in [(&a_sum, &a_sq, alpha[k]), (&b_sum, &b_sq, beta[k])] {
            let mean = sum[k] / nf;
            let var = (sq[k] / nf - mean * mean) * nf / (nf - 1.0);
            let se = (var / nf).sqrt();
            worst = worst.max((mean - truth).abs() / se);
        }
    }
    ensure(worst <= 3.0, || format!("max deviation {worst:.2} SE > 3"))?;
    let took = within_budget(start, Duration::from_secs(60))?;
    Ok(format!("max deviation {worst:.2} SE over 8 entries in {took:.2?}"))
}

fn random_dataset(r: &mut impl Rng, m: usize, n: usize, t_max: f64) -> SampleSet {
    let times = random_grid(r, n, t_max);
    let values = DMatrix::from_fn(m, n, |_, _| r.random_range(-3.0..3.0));
    SampleSet::new(TimeGrid::new(times).unwrap(), values).unwrap()
}

fn criterion_3() -> Outcome {
    let mut r = rng(303);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let m = r.random_range(1..=4);
        let n = r.random_range(2..=12);
        let rep = fit(&random_dataset(&mut r, m, n, 10.0)).map_err(|e| e.to_string())?;
        let t_n = rep.t_last();
        let lhs = (rep.alpha_hat() - rep.beta_hat() * t_n) * t_n;
        let rhs = rep.x_last() * rep.x_last().transpose();
        let scale = max_abs(&rhs).max(max_abs(&(rep.alpha_hat() * t_n)));
        worst = worst.max(max_abs_diff(&lhs, &rhs) / scale);
    }
    ensure(worst <= 1e-10, || format!("max relative residual {worst:.3e} > 1e-10"))?;
    Ok(format!("max relative residual {worst:.2e} over 100 datasets"))
}

/// Queries range over the admissible forecast times `[t_n, max_horizon]`.
/// For m >= 2 the fitted horizon is t_n itself, so only the anchor is
/// admissible there; `beyond_horizon_gap` reports (without gating) how far the
/// closed forms drift from full conditioning once the kernel stops being a
/// covariance.
fn criterion_4() -> Outcome {
    let mut r = rng(404);
    let mut worst = 0.0_f64;
    let mut compared = 0;
    let mut beyond_horizon_gap = 0.0_f64;
    for case in 0..20 {
        let m = 1 + case % 3;
        let n = r.random_range(2..=5);
        let truth = random_params(&mut r, m, 4.0);
        let times = random_grid(&mut r, n, 4.0);
        let data = draw_path(&mut r, &truth, &times);
        let rep = fit(&data).map_err(|e| e.to_string())?;
        let t_n = rep.t_last();
        let bound = max_horizon(&rep).value.min(t_n + 2.0);
        let mut queries = vec![t_n];
        if bound > t_n {
            queries.extend((1..=4).map(|k| t_n + (bound - t_n) * k as f64 / 4.0));
        }
        let mut all = times.clone();
        all.extend_from_slice(&queries);
        let joint = dense_gram(rep.alpha_hat(), rep.beta_hat(), &all);
        let (mean, cov) = condition(&joint, n * m, &data.stacked());
        for (i, &t) in queries.iter().enumerate() {
            let got = posterior_mean(&rep, t).map_err(|e| e.to_string())?;
            let want = mean.rows(i * m, m).into_owned();
            worst = worst.max((got - &want).amax() / (1.0 + want.amax()));
            for (j, &s) in queries.iter().enumerate() {
                let got = posterior_cov(&rep, t, s).map_err(|e| e.to_string())?;
                let want = cov.view((i * m, j * m), (m, m)).into_owned();
                worst = worst.max(max_abs_diff(&got, &want) / (1.0 + max_abs(&want)));
                compared += 1;
            }
        }
        if m > 1 {
            let t = t_n + 1.0;
            let mut all = times.clone();
            all.push(t);
            let joint = dense_gram(rep.alpha_hat(), rep.beta_hat(), &all);
            let (mean, cov) = condition(&joint, n * m, &data.stacked());
            let mean_gap = (posterior_mean(&rep, t).map_err(|e| e.to_string())? - mean).amax();
            let cov_gap = max_abs_diff(&posterior_cov_closed_form(&rep, t, t), &cov);
            beyond_horizon_gap = beyond_horizon_gap.max(mean_gap).max(cov_gap);
        }
    }
    ensure(worst <= 1e-8, || format!("max discrepancy {worst:.3e} > 1e-8"))?;
    Ok(format!(
        "max discrepancy {worst:.2e} over {compared} admissible (t, s) pairs in 20 instances (m ≤ 3, n ≤ 5); \
         m ≥ 2 at t_n + 1 (outside the fitted horizon, not gated): gap {beyond_horizon_gap:.2e}"
    ))
}

fn criterion_5() -> Outcome {
    let mut r = rng(505);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let m = r.random_range(1..=3);
        let n = r.random_range(2..=8);
        let rep = fit(&random_dataset(&mut r, m, n, 5.0)).map_err(|e| e.to_string())?;
        let step = r.random_range(0.01..0.5);
        let q: Vec<f64> = (0..20).map(|k| rep.t_last() + step * k as f64).collect();
        let means: Vec<DVector<f64>> = q
            .iter()
            .map(|&t| posterior_mean(&rep, t))
            .collect::<gmk_core::Result<_>>()
            .map_err(|e| e.to_string())?;
        for w in means.windows(3) {
            worst = worst.max((&w[2] - &w[1] * 2.0 + &w[0]).amax());
        }
    }
    ensure(worst <= 1e-12, || format!("max second difference {worst:.3e} > 1e-12"))?;
    Ok(format!("max second difference {worst:.2e} over 50 fits"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let model = SemiParamModel::constant(DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, 1.0))
        .map_err(|e| e.to_string())?;
    let grid = TimeGrid::new(vec![1.0, 2.0]).unwrap();
    let paths = 50_000;
    let batch = euler_maruyama(&model, 1e-3, 2.0, paths, 606, &grid).map_err(|e| e.to_string())?;
    let cov = empirical_cov(&batch, 0, 1).map_err(|e| e.to_string())?[(0, 0)];
    let rel = (cov - 2.0).abs() / 2.0;
    ensure(rel <= 0.03, || format!("Cov(X(1),X(2)) = {cov:.4}, {:.2}% off 2.0", rel * 100.0))?;
    let took = within_budget(start, Duration::from_secs(60))?;
    Ok(format!("Cov(X(1),X(2)) = {cov:.4} ({:.2}% off 2.0) in {took:.2?}", rel * 100.0))
}

fn criterion_7() -> Outcome {
    let mut r = rng(707);
    let mut worst = 0.0_f64;
    for k in 0..50 {
        let m = 1 + k % 3;
        let a = random_spd(&mut r, m, 0.3);
        let omega = random_spd(&mut r, m, 0.5);
        let model = SemiParamModel::constant(omega.clone(), a.clone()).map_err(|e| e.to_string())?;
        let beta = -(&a * omega.try_inverse().unwrap() * &a);
        let t = r.random_range(0.0..5.0);
        let s = r.random_range(0.0..5.0);
        let got = semiparam_kernel(&model, 0.0, t, s).map_err(|e| e.to_string())?;
        let want = kernel_block(&a, &beta, t, s);
        worst = worst.max(max_abs_diff(&got, &want) / (1.0 + max_abs(&want)));
        let eps = r.random_range(0.0..10.0);
        let shifted = semiparam_kernel(&model, eps, t, s).map_err(|e| e.to_string())?;
        ensure(shifted == got, || format!("ε = {eps}: constant-diffusion kernel changed"))?;
    }
    ensure(worst <= 1e-12, || format!("max gap to s(α−βt) {worst:.3e} > 1e-12"))?;
    let two_block = SemiParamModel::new(
        DMatrix::from_element(1, 1, 2.0),
        vec![0.0, 1.0],
        vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 4.0)],
    )
    .map_err(|e| e.to_string())?;
    let k0 = semiparam_kernel(&two_block, 0.0, 2.0, 1.0).map_err(|e| e.to_string())?[(0, 0)];
    let k1 = semiparam_kernel(&two_block, 0.5, 2.0, 1.0).map_err(|e| e.to_string())?[(0, 0)];
    ensure((k0 - k1).abs() > 1e-6, || "two-block table shows no ε-dependence".into())?;
    Ok(format!(
        "max gap {worst:.2e} at 50 points; ε-invariance exact; two-block witness {k0:.4} vs {k1:.4}"
    ))
}

fn criterion_8() -> Outcome {
    let alpha = DMatrix::from_element(1, 1, 1.0);
    let x_u = DVector::from_element(1, 4.0);
    let grid = TimeGrid::new(vec![1.0]).unwrap();
    let paths = 50_000;
    let batch = sample_bridge(&alpha, 2.0, &x_u, &grid, paths, 808).map_err(|e| e.to_string())?;
    let xs: Vec<f64> = (0..paths).map(|p| batch.state(p, 0)[0]).collect();
    let nf = paths as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let se_mean = (var / nf).sqrt();
    let se_var = ((m4 - var * var) / nf).sqrt();
    let z_mean = (mean - 2.0).abs() / se_mean;
    let z_var = (var - 0.5).abs() / se_var;
    ensure(z_mean <= 3.0, || format!("mean {mean:.4} is {z_mean:.2} SE from 2"))?;
    ensure(z_var <= 3.0, || format!("variance {var:.4} is {z_var:.2} SE from 0.5"))?;

    // covariance does not see x_u: analytic blocks agree exactly, and under a
    // shared seed the centred draws agree to rounding of the mean shift
    let fine = TimeGrid::new(vec![0.25, 0.5, 1.0, 1.5, 1.9]).unwrap();
    let other = DVector::from_element(1, -7.5);
    for &t in fine.times() {
        for &s in fine.times() {
            let (_, c1) = bridge_moments(&alpha, 2.0, &x_u, t, s).map_err(|e| e.to_string())?;
            let (_, c2) = bridge_moments(&alpha, 2.0, &other, t, s).map_err(|e| e.to_string())?;
            ensure(c1 == c2, || format!("bridge covariance at ({t}, {s}) depends on x_u"))?;
        }
    }
    let a = sample_bridge(&alpha, 2.0, &x_u, &fine, 1000, 9).map_err(|e| e.to_string())?;
    let b = sample_bridge(&alpha, 2.0, &other, &fine, 1000, 9).map_err(|e| e.to_string())?;
    let mut resid = 0.0_f64;
    for p in 0..1000 {
        for (i, &t) in fine.times().iter().enumerate() {
            let ra = a.state(p, i)[0] - t / 2.0 * x_u[0];
            let rb = b.state(p, i)[0] - t / 2.0 * other[0];
            resid = resid.max((ra - rb).abs());
        }
    }
    ensure(resid <= 1e-13, || format!("shared-seed residuals differ by {resid:.3e}"))?;
    Ok(format!(
        "mean {mean:.4} ({z_mean:.2} SE), variance {var:.4} ({z_var:.2} SE); covariance exact, residual gap {resid:.1e}"
    ))
}

fn criterion_9() -> Outcome {
    let params = scalar_params(4.0, 1.0);
    let theory = increment_autocorr(&params, 1.0).map_err(|e| e.to_string())?;
    let grid = TimeGrid::equispaced(0.5, 7).unwrap();
    let paths = 50_000;
    let batch = sample_paths(&params, &grid, paths, 909).map_err(|e| e.to_string())?;
    let (rho, _) = empirical_increment_autocorr(&batch, 2, 2).map_err(|e| e.to_string())?;
    let target = -1.0 / 3.0;
    ensure((theory.theoretical_rho - target).abs() < 1e-15, || {
        format!("theoretical rho {} ≠ −1/3", theory.theoretical_rho)
    })?;
    let se = (1.0 - target * target) / (paths as f64).sqrt();
    let z = (rho - target).abs() / se;
    ensure(z <= 3.0, || format!("empirical rho {rho:.4} is {z:.2} SE from −1/3"))?;

    let mut r = rng(9090);
    let mut checked = 0;
    while checked < 100 {
        let alpha = r.random_range(0.1..10.0);
        let beta = r.random_range(-10.0..10.0);
        let s = r.random_range(0.01..5.0);
        // admissible: both windows [0, s] and [s, 2s] lie inside the horizon
        if alpha - 2.0 * s * beta < 0.0 {
            continue;
        }
        let Ok(p) = KernelParams::scalar(alpha, beta) else { continue };
        let rep = increment_autocorr(&p, s).map_err(|e| e.to_string())?;
        let (rho, rho_sq) = (rep.theoretical_rho, rep.theoretical_rho_sq);
        ensure(rho * rho <= rho_sq && rho_sq <= rho.abs() && rep.inequality_ok, || {
            format!("chain broken at α={alpha}, β={beta}, s={s}: ρ={rho}, ρ²-corr={rho_sq}")
        })?;
        checked += 1;
    }
    Ok(format!("empirical rho {rho:.4} ({z:.2} SE from −1/3); chain holds on 100-point sweep"))
}

fn criterion_10() -> Outcome {
    let mut r = rng(1010);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let m = r.random_range(1..=3);
        let n = r.random_range(3..=40);
        let data = random_dataset(&mut r, m, n, 20.0);
        let head = SampleSet::new(
            TimeGrid::new(data.times()[..2].to_vec()).unwrap(),
            data.values().columns(0, 2).into_owned(),
        )
        .unwrap();
        let mut rep = fit(&head).map_err(|e| e.to_string())?;
        for i in 2..n {
            rep = update(&rep, data.times()[i], &data.x(i)).map_err(|e| e.to_string())?;
        }
        let batch = fit(&data).map_err(|e| e.to_string())?;
        worst = worst
            .max(max_abs_diff(rep.alpha_hat(), batch.alpha_hat()))
            .max(max_abs_diff(rep.beta_hat(), batch.beta_hat()));
    }
    ensure(worst <= 1e-12, || format!("max elementwise gap {worst:.3e} > 1e-12"))?;
    Ok(format!("max elementwise gap {worst:.2e} over 100 sequences"))
}

fn criterion_11() -> Outcome {
    let mut r = rng(1111);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let m = r.random_range(1..=3);
        let n = r.random_range(2..=10);
        let data = random_dataset(&mut r, m, n, 5.0);
        let base = fit(&data).map_err(|e| e.to_string())?;
        let c = random_spd(&mut r, m, 0.5) + random_symmetric(&mut r, m, 0.3);
        let scaled = SampleSet::new(data.grid().clone(), &c * data.values()).unwrap();
        let fc = fit(&scaled).map_err(|e| e.to_string())?;
        let lambda = r.random_range(0.1..10.0);
        let stretched: Vec<f64> = data.times().iter().map(|t| t * lambda).collect();
        let fl = fit(&SampleSet::new(TimeGrid::new(stretched).unwrap(), data.values().clone()).unwrap())
            .map_err(|e| e.to_string())?;
        let pairs = [
            (fc.alpha_hat().clone(), &c * base.alpha_hat() * c.transpose()),
            (fc.beta_hat().clone(), &c * base.beta_hat() * c.transpose()),
            (fl.alpha_hat().clone(), base.alpha_hat() / lambda),
            (fl.beta_hat().clone(), base.beta_hat() / (lambda * lambda)),
        ];
        for (got, want) in &pairs {
            worst = worst.max(max_abs_diff(got, want) / max_abs(want).max(1e-300));
        }
    }
    ensure(worst <= 1e-10, || format!("max relative gap {worst:.3e} > 1e-10"))?;
    Ok(format!("max relative gap {worst:.2e} over 50 datasets"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("closed-form vs numeric MLE", criterion_1),
        ("unbiasedness of α̂, β̂", criterion_2),
        ("identity t_n(α̂ − β̂t_n) = x_n x_nᵀ", criterion_3),
        ("Markov reduction of the posterior", criterion_4),
        ("affine posterior mean", criterion_5),
        ("SDE covariance via Euler–Maruyama", criterion_6),
        ("semi-parametric/parametric equality", criterion_7),
        ("bridge law", criterion_8),
        ("increment autocorrelation", criterion_9),
        ("streaming = batch", criterion_10),
        ("scale equivariances", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("[PASS] criterion {}: {name} — {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {}: {name} — {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
