use std::fmt::Write;

use gmk_core::{FitReport, Forecast, HorizonBound, PathBatch};
use nalgebra::DMatrix;

/// Renders `v` like C's `%.17g`: 17 significant digits, trailing zeros
/// dropped, exponent form outside `[1e-4, 1e17)`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, v);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// JSON number; non-finite values become `null`.
fn json_num(v: f64) -> String {
    if v.is_finite() {
        fmt_num(v)
    } else {
        "null".into()
    }
}

/// Row-major nested array, e.g. `[[1, 0.5], [0.5, 2]]`.
pub fn json_matrix(a: &DMatrix<f64>) -> String {
    let rows: Vec<String> = a
        .row_iter()
        .map(|r| format!("[{}]", r.iter().map(|v| json_num(*v)).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}

/// JSON object with fields in the given order.
pub fn json_object(fields: &[(&str, String)]) -> String {
    let mut out = String::from("{\n");
    for (i, (key, value)) in fields.iter().enumerate() {
        let sep = if i + 1 < fields.len() { "," } else { "" };
        writeln!(out, "  \"{key}\": {value}{sep}").unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn fit_json(report: &FitReport, horizon: HorizonBound) -> String {
    json_object(&[
        ("m", report.dim().to_string()),
        ("n", report.n().to_string()),
        ("t_last", json_num(report.t_last())),
        ("alpha_hat", json_matrix(report.alpha_hat())),
        ("beta_hat", json_matrix(report.beta_hat())),
        ("loglik", report.loglik().map_or("null".into(), json_num)),
        ("max_horizon", json_num(horizon.value)),
    ])
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map_or("null".into(), json_num)
}

pub fn num(v: f64) -> String {
    json_num(v)
}

fn csv_line(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let cells: Vec<String> = cells.into_iter().collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// `time,mean_1..m,sd_1..m,lo_1..m,hi_1..m`
pub fn forecast_csv(f: &Forecast, m: usize) -> String {
    let mut out = String::new();
    let mut header = vec!["time".to_string()];
    for prefix in ["mean", "sd", "lo", "hi"] {
        header.extend((1..=m).map(|k| format!("{prefix}_{k}")));
    }
    csv_line(&mut out, header);
    for i in 0..f.len() {
        let mut row = vec![fmt_num(f.query_times[i])];
        for col in [f.means[i].clone(), f.sd(i), f.lower(i), f.upper(i)] {
            row.extend(col.iter().map(|v| fmt_num(*v)));
        }
        csv_line(&mut out, row);
    }
    out
}

/// Long format `path_id,time,x1..xm`, one row per path and grid time.
pub fn paths_csv(batch: &PathBatch) -> String {
    let m = batch.dim();
    let mut out = String::new();
    let mut header = vec!["path_id".to_string(), "time".to_string()];
    header.extend((1..=m).map(|k| format!("x{k}")));
    csv_line(&mut out, header);
    let times = batch.grid().times();
    for p in 0..batch.n_paths() {
        for (i, &t) in times.iter().enumerate() {
            let mut row = vec![p.to_string(), fmt_num(t)];
            row.extend(batch.state(p, i).iter().map(|v| fmt_num(*v)));
            csv_line(&mut out, row);
        }
    }
    out
}
