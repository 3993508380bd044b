//! CSV and JSON writers for snapshots, time series and relay traces.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::free_boundary::Em;
use crate::relay::TracePoint;
use crate::solver::RunReport;
use crate::solver::SolverState;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// 17 significant digits; `inf`, `-inf` and `nan` for non-finite values.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn fmt_em(e: Option<Em>) -> String {
    match e {
        None => String::new(),
        Some(Em::Finite(m)) => m.to_string(),
        Some(Em::Infinite) => "inf".into(),
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| IoError::File {
            path: dir.display().to_string(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| IoError::File {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::File {
        path: path.display().to_string(),
        source: e,
    })
}

fn header(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |j| format!("{prefix}{j}"))
}

/// Columns `x, u1..uk, v1..vl, xi, w1..wm`, one row per node.
pub fn snapshot_csv(state: &SolverState) -> String {
    let (k, l, m) = (state.u.dim(), state.v.dim(), state.w.dim());
    let mut cols = vec!["x".to_string()];
    cols.extend(header("u", k));
    cols.extend(header("v", l));
    cols.push("xi".into());
    cols.extend(header("w", m));
    let mut out = cols.join(",");
    out.push('\n');
    let grid = state.u.grid();
    for i in 0..grid.nodes() {
        let mut row = vec![fmt_num(grid.x(i))];
        row.extend(state.u.node(i).iter().map(|x| fmt_num(*x)));
        row.extend(state.v.node(i).iter().map(|x| fmt_num(*x)));
        row.push(state.xi[i].sign().to_string());
        row.extend(state.w.node(i).iter().map(|x| fmt_num(*x)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Columns `t, b, margin, E_m, drift1..driftK, status`. Empty cells mark
/// an absent margin (vacuous audit) or an E_m skipped by the stride.
pub fn time_series_csv(report: &RunReport) -> String {
    let k = report.rows.first().map_or(0, |r| r.drifts.len());
    let mut cols: Vec<String> = ["t", "b", "margin", "E_m"].iter().map(|s| s.to_string()).collect();
    cols.extend(header("drift", k));
    cols.push("status".into());
    let mut out = cols.join(",");
    out.push('\n');
    for r in &report.rows {
        let mut row = vec![fmt_num(r.t), fmt_num(r.b), fmt_opt(r.margin), fmt_em(r.em)];
        row.extend(r.drifts.iter().map(|x| fmt_num(*x)));
        row.push(r.status.clone());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Columns `t, zeta, w1..wm`.
pub fn relay_trace_csv(points: &[TracePoint], m: usize) -> String {
    let mut cols = vec!["t".to_string(), "zeta".into()];
    cols.extend(header("w", m));
    let mut out = cols.join(",");
    out.push('\n');
    for p in points {
        let _ = write!(out, "{},{}", fmt_num(p.t), p.zeta.sign());
        for w in &p.w {
            let _ = write!(out, ",{}", fmt_num(*w));
        }
        out.push('\n');
    }
    out
}

/// Parse rows `t, u1..uk`; blank lines and a non-numeric first line
/// (header) are skipped.
pub fn parse_relay_input(text: &str, k: usize) -> Result<Vec<(f64, Vec<f64>)>, IoError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let Ok(values) = parsed else {
            if out.is_empty() && idx == first_content_line(text) {
                continue;
            }
            return Err(IoError::Csv {
                line: idx + 1,
                message: format!("non-numeric field in {line:?}"),
            });
        };
        if values.len() != k + 1 {
            return Err(IoError::Csv {
                line: idx + 1,
                message: format!("expected {} columns (t, u1..u{k}), found {}", k + 1, values.len()),
            });
        }
        out.push((values[0], values[1..].to_vec()));
    }
    Ok(out)
}

fn first_content_line(text: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .unwrap_or(0)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Snapshot file name from a pattern containing `{t}`.
pub fn snapshot_name(pattern: &str, t: f64) -> String {
    pattern.replace("{t}", &format!("{t}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn relay_input_with_header() {
        let rows = parse_relay_input("t,u1\n0,0.5\n\n1,1.5\n", 1).unwrap();
        assert_eq!(rows, vec![(0.0, vec![0.5]), (1.0, vec![1.5])]);
        assert!(parse_relay_input("", 1).unwrap().is_empty());
        assert!(matches!(parse_relay_input("0,1,2\n", 1), Err(IoError::Csv { line: 1, .. })));
        assert!(matches!(parse_relay_input("0,1\nx,2\n", 1), Err(IoError::Csv { line: 2, .. })));
    }
}
