//! CSV and JSON artifacts. Every number is written with 17 significant
//! digits.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sgn_core::dynamics::SeriesRow;
use sgn_core::kinematics::{pq_fields, FlowState};
use sgn_core::{Grid, Params};

use crate::error::{LabError, LabResult};

/// `v` in scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> LabResult<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| LabError::Io(dir.to_path_buf(), e))?;
    }
    let f = File::create(path).map_err(|e| LabError::Io(path.to_path_buf(), e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> LabError + '_ {
    move |e| LabError::Csv(path.to_path_buf(), e.to_string())
}

/// Columns `x, h, u, P, Q`.
pub fn write_snapshot(path: &Path, s: &FlowState, params: &Params, grid: &Grid) -> LabResult<()> {
    let (p, q) = pq_fields(s, params, grid)?;
    let mut w = create(path)?;
    let err = csv_err(path);
    w.write_record(["x", "h", "u", "P", "Q"]).map_err(&err)?;
    for i in 0..grid.n() {
        w.write_record([grid.x(i), s.h[i], s.u[i], p[i], q[i]].map(fmt17)).map_err(&err)?;
    }
    w.flush().map_err(|e| LabError::Io(path.to_path_buf(), e))
}

/// Columns `t, mass, energy, min_h, min_ux, max_abs_hx, sup_P, sup_Q`.
pub fn write_series(path: &Path, rows: &[SeriesRow]) -> LabResult<()> {
    let mut w = create(path)?;
    let err = csv_err(path);
    w.write_record(["t", "mass", "energy", "min_h", "min_ux", "max_abs_hx", "sup_P", "sup_Q"]).map_err(&err)?;
    for r in rows {
        w.write_record([r.t, r.mass, r.energy, r.min_h, r.min_ux, r.max_abs_hx, r.sup_p, r.sup_q].map(fmt17))
            .map_err(&err)?;
    }
    w.flush().map_err(|e| LabError::Io(path.to_path_buf(), e))
}

/// Writes any table of numbers under the given header.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<Option<f64>>]) -> LabResult<()> {
    let mut w = create(path)?;
    let err = csv_err(path);
    w.write_record(header).map_err(&err)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.map(fmt17).unwrap_or_default())).map_err(&err)?;
    }
    w.flush().map_err(|e| LabError::Io(path.to_path_buf(), e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> LabResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| LabError::Io(dir.to_path_buf(), e))?;
    }
    let f = File::create(path).map_err(|e| LabError::Io(path.to_path_buf(), e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| LabError::Io(path.to_path_buf(), e))
}

pub fn write_text(path: &Path, text: &str) -> LabResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| LabError::Io(dir.to_path_buf(), e))?;
    }
    fs::write(path, text).map_err(|e| LabError::Io(path.to_path_buf(), e))
}

/// Reads `h` and `u` columns (by header name) of a profile with exactly `n`
/// rows.
pub fn read_profile(path: &Path, n: usize) -> LabResult<(Vec<f64>, Vec<f64>)> {
    let err = csv_err(path);
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(&err)?;
    let headers = r.headers().map_err(&err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LabError::Csv(path.to_path_buf(), format!("missing column `{name}`")))
    };
    let (ih, iu) = (col("h")?, col("u")?);
    let (mut h, mut u) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for rec in r.records() {
        let rec = rec.map_err(&err)?;
        let num = |i: usize| -> LabResult<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| LabError::Csv(path.to_path_buf(), format!("bad number in row {}", h.len() + 1)))
        };
        let (a, b) = (num(ih)?, num(iu)?);
        h.push(a);
        u.push(b);
    }
    if h.len() != n {
        return Err(LabError::Csv(path.to_path_buf(), format!("expected {n} rows, found {}", h.len())));
    }
    Ok((h, u))
}
