//! CSV and JSON artifacts. Floats use Rust's shortest round-trip formatting,
//! so the text is identical on every platform.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde_json::{json, Value};

use crate::analysis::{field_hash, ContinuumReport, TheoremRecord};
use crate::chain::{ChainParams, Configuration};
use crate::dynamics::TrajectoryRecord;
use crate::fixedpoint::FixedPointResult;

/// `index,position,gap`, one row per particle; `gap` is the distance to the
/// next particle and is empty on the last row.
pub fn positions_csv(config: &Configuration) -> String {
    let x = config.positions();
    let mut out = String::from("index,position,gap\n");
    for (k, xk) in x.iter().enumerate() {
        match x.get(k + 1) {
            Some(next) => writeln!(out, "{},{},{}", k + 1, xk, next - xk),
            None => writeln!(out, "{},{},", k + 1, xk),
        }
        .expect("writing to a String");
    }
    out
}

pub fn result_json(result: &FixedPointResult) -> Value {
    json!({
        "x2": result.x2,
        "positions": result.configuration.positions(),
        "residual_max": result.residual_max,
        "iterations": result.bisection_iterations,
        "boundary_ok": [result.boundary_ok_left, result.boundary_ok_right],
        "non_unique": result.non_unique,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `t,H,rho,events`; `rho` is empty without a target.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::from("t,H,rho,events\n");
    for s in &record.samples {
        writeln!(out, "{},{},{},{}", s.time, s.energy, opt(s.rho), s.wall_events).expect("writing to a String");
    }
    out
}

/// `t,side,v_pre`.
pub fn wall_events_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::from("t,side,v_pre\n");
    for e in &record.events {
        writeln!(out, "{},{},{}", e.time, e.side.as_str(), e.v_pre).expect("writing to a String");
    }
    out
}

/// `N,D,E,b_measured,b_predicted`; the last two prediction columns are empty
/// when the second-order prediction does not apply.
pub fn report_csv(records: &[TheoremRecord]) -> String {
    let mut out = String::from("N,D,E,b_measured,b_predicted\n");
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            r.max_rel_gap_deviation,
            opt(r.prediction.map(|p| p.relative_error)),
            r.b_measured,
            opt(r.prediction.map(|p| p.b_predicted)),
        )
        .expect("writing to a String");
    }
    out
}

/// `x2,residual`.
pub fn continuum_csv(report: &ContinuumReport) -> String {
    let mut out = String::from("x2,residual\n");
    for (x2, r) in &report.samples {
        writeln!(out, "{x2},{r}").expect("writing to a String");
    }
    out
}

/// File stem identifying a solve by `(N, a, L, field)`.
pub fn sweep_key(params: &ChainParams) -> String {
    let a = params.law().exponent().map_or_else(|| "table".to_string(), |a| a.to_string());
    format!("N{}_a{}_L{}_{}", params.n(), a, params.length(), field_hash(params.field()))
}

pub fn to_pretty_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Writes each `(relative path, contents)` pair under `dir`, creating
/// directories as needed.
pub fn write_artifacts(dir: &Path, files: &[(String, String)]) -> io::Result<()> {
    for (name, contents) in files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, contents)?;
    }
    Ok(())
}
