//! CSV emission for trajectory records.
//!
//! Schema (fixed per experiment): a header row, then one row per
//! checkpoint with columns
//!
//! ```text
//! k, h, phi_k, moreau_grad, pi_0..pi_{c-1} (optional), grad_norm, wall_ms
//! ```
//!
//! Floating-point cells carry 17 significant digits so a parsed value
//! reproduces the in-memory double exactly; cells for diagnostics that
//! were not computed at a checkpoint stay empty. Output is UTF-8 with LF
//! line endings. Reruns of the same configuration and seed are
//! byte-identical apart from the `wall_ms` column.

use std::fs;
use std::io;
use std::path::Path;

use drokit_core::{TrajectoryRecord, TrajectoryRow};

/// 17 significant digits: enough to round-trip any finite `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Header row for a run with `pi_columns` weight columns (`None` omits
/// the weight block entirely).
pub fn trajectory_header(pi_columns: Option<usize>) -> String {
    let mut cols: Vec<String> = vec!["k".into(), "h".into(), "phi_k".into(), "moreau_grad".into()];
    if let Some(c) = pi_columns {
        cols.extend((0..c).map(|i| format!("pi_{i}")));
    }
    cols.push("grad_norm".into());
    cols.push("wall_ms".into());
    cols.join(",")
}

fn row_line(row: &TrajectoryRow, pi_columns: Option<usize>) -> String {
    let mut cells: Vec<String> = vec![
        row.k.to_string(),
        format_float(row.h),
        optional(row.phi_k),
        optional(row.moreau_grad),
    ];
    if let Some(c) = pi_columns {
        match &row.pi {
            Some(pi) => cells.extend(pi.iter().take(c).map(|&w| format_float(w))),
            None => cells.extend(std::iter::repeat_n(String::new(), c)),
        }
    }
    cells.push(format_float(row.grad_norm));
    cells.push(format!("{:.3}", row.wall_ms));
    cells.join(",")
}

/// Renders the whole record as CSV text.
pub fn trajectory_csv(record: &TrajectoryRecord, pi_columns: Option<usize>) -> String {
    let mut out = String::new();
    out.push_str(&trajectory_header(pi_columns));
    out.push('\n');
    for row in &record.rows {
        out.push_str(&row_line(row, pi_columns));
        out.push('\n');
    }
    out
}

pub fn write_trajectory_csv(
    record: &TrajectoryRecord,
    pi_columns: Option<usize>,
    path: &Path,
) -> io::Result<()> {
    fs::write(path, trajectory_csv(record, pi_columns))
}

/// Drops the final (`wall_ms`) cell of every line; the remainder is the
/// reproducible portion of the file.
pub fn strip_wall_column(csv: &str) -> String {
    csv.lines()
        .map(|line| match line.rfind(',') {
            Some(pos) => &line[..pos],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}
