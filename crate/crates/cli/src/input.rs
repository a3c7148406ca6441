use std::fs::File;
use std::io::Read;
use std::path::Path;

use gmk_core::{KernelParams, SampleSet, SemiParamModel, TimeGrid};
use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::CliError;

/// Reads a `time,x1,...,xm` CSV file into a sample set.
pub fn parse_csv(path: &Path) -> Result<SampleSet, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_csv_reader(file)
}

/// Same as [`parse_csv`] for any reader. Row numbers in errors are file line
/// numbers, counting the header as line 1.
pub fn parse_csv_reader(reader: impl Read) -> Result<SampleSet, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_error)?,
        None => return Err(CliError::Format("missing header: expected time,x1,...,xm".into())),
    };
    let m = header.len().saturating_sub(1);
    let well_formed = header.get(0) == Some("time")
        && m > 0
        && header.iter().skip(1).enumerate().all(|(i, name)| name == format!("x{}", i + 1));
    if !well_formed {
        return Err(CliError::Format(format!(
            "missing header: expected time,x1,...,xm, found {:?}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (k, rec) in records.enumerate() {
        let row = k + 2;
        let rec = rec.map_err(csv_error)?;
        if rec.len() != m + 1 {
            return Err(CliError::Format(format!(
                "row {row}: expected {} fields, found {}",
                m + 1,
                rec.len()
            )));
        }
        let mut cells = Vec::with_capacity(m + 1);
        for (col, cell) in rec.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => cells.push(v),
                _ => {
                    return Err(CliError::Format(format!(
                        "row {row}, column {}: cannot parse {cell:?} as a finite number",
                        col + 1
                    )))
                }
            }
        }
        let t = cells[0];
        if t <= 0.0 {
            return Err(CliError::Format(format!("row {row}: times must be strictly positive, got {t}")));
        }
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(CliError::Ordering { row, t, previous: prev });
            }
        }
        times.push(t);
        values.extend_from_slice(&cells[1..]);
    }
    if times.is_empty() {
        return Err(CliError::Format("no data rows after the header".into()));
    }
    let n = times.len();
    let grid = TimeGrid::new(times)?;
    Ok(SampleSet::new(grid, DMatrix::from_column_slice(m, n, &values))?)
}

fn csv_error(e: csv::Error) -> CliError {
    if e.is_io_error() {
        CliError::Io(e.to_string())
    } else {
        CliError::Format(e.to_string())
    }
}

/// Parses `t1,t2,...`; an empty string is an empty list.
pub fn parse_times(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Format(format!("cannot parse time {s:?}")))
        })
        .collect()
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>, CliError> {
    let m = rows.len();
    if m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::Format(format!("{name} must be a non-empty square array of rows")));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelSpec {
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
    #[serde(default)]
    horizon: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpec {
    omega: Vec<Vec<f64>>,
    breakpoints: Vec<f64>,
    blocks: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BridgeSpec {
    alpha: Vec<Vec<f64>>,
    u: f64,
    x_u: Vec<f64>,
}

/// Bridge parameters: scale `alpha`, end time `u`, end value `x_u`.
#[derive(Debug, Clone)]
pub struct BridgeParams {
    pub alpha: DMatrix<f64>,
    pub u: f64,
    pub x_u: DVector<f64>,
}

fn from_json<'a, T: Deserialize<'a>>(json: &'a str) -> Result<T, CliError> {
    serde_json::from_str(json).map_err(|e| CliError::Format(format!("invalid --params JSON: {e}")))
}

/// `{"alpha": [[..]], "beta": [[..]], "horizon": h?}`
pub fn kernel_params(json: &str) -> Result<KernelParams, CliError> {
    let spec: KernelSpec = from_json(json)?;
    Ok(KernelParams::new(
        matrix(&spec.alpha, "alpha")?,
        matrix(&spec.beta, "beta")?,
        spec.horizon,
    )?)
}

/// `{"omega": [[..]], "breakpoints": [..], "blocks": [[[..]], ...]}`
pub fn semiparam_model(json: &str) -> Result<SemiParamModel, CliError> {
    let spec: ModelSpec = from_json(json)?;
    let blocks = spec
        .blocks
        .iter()
        .map(|b| matrix(b, "blocks[..]"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SemiParamModel::new(matrix(&spec.omega, "omega")?, spec.breakpoints, blocks)?)
}

/// `{"alpha": [[..]], "u": u, "x_u": [..]}`
pub fn bridge_params(json: &str) -> Result<BridgeParams, CliError> {
    let spec: BridgeSpec = from_json(json)?;
    Ok(BridgeParams {
        alpha: matrix(&spec.alpha, "alpha")?,
        u: spec.u,
        x_u: DVector::from_vec(spec.x_u),
    })
}
