//! Plain-text problem snapshots for cross-implementation fixtures.
//!
//! Layout, one record per line, whitespace separated, floats printed with
//! 17 significant digits (lossless for f64):
//!
//! ```text
//! drokit-problem 1
//! family <quadratic|logistic|tiny_mlp>
//! c <groups>  d <dim>  n_i <size per group ...>
//! tau_theta <v>
//! tau_pi <v>
//! floor <v>
//! prior <c values>
//! arch <input> <hidden>            (tiny_mlp only)
//! item <group> <index>
//! <matrix and vector lines per family, row-major>
//! ```
//!
//! Quadratic items carry `A <nrows> <values>` and `b <values>`; logistic
//! and network items carry `x <values>` and `y <value>`.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use ndarray::{Array1, Array2};
use thiserror::Error;

use super::{DroProblem, LogisticItem, LossFamily, MlpArch, MlpItem, QuadItem};

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("snapshot describes an invalid problem: {0}")]
    Invalid(#[from] super::ProblemError),
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_floats(line: &mut String, values: impl IntoIterator<Item = f64>) {
    for v in values {
        let _ = write!(line, " {}", fmt_f64(v));
    }
}

/// Writes the snapshot of `problem` to `out`.
pub fn write_snapshot<W: Write>(problem: &DroProblem, out: &mut W) -> io::Result<()> {
    writeln!(out, "drokit-problem 1")?;
    writeln!(out, "family {}", problem.family().name())?;
    let sizes: Vec<String> = problem.group_sizes().iter().map(|s| s.to_string()).collect();
    writeln!(
        out,
        "c {}  d {}  n_i {}",
        problem.c(),
        problem.dim(),
        sizes.join(" ")
    )?;
    writeln!(out, "tau_theta {}", fmt_f64(problem.tau_theta()))?;
    writeln!(out, "tau_pi {}", fmt_f64(problem.tau_pi()))?;
    writeln!(out, "floor {}", fmt_f64(problem.floor()))?;
    let mut prior = String::from("prior");
    push_floats(&mut prior, problem.prior().iter().copied());
    writeln!(out, "{prior}")?;
    match problem.family() {
        LossFamily::Quadratic { groups } => {
            for (i, group) in groups.iter().enumerate() {
                for (j, item) in group.iter().enumerate() {
                    writeln!(out, "item {i} {j}")?;
                    let mut a = format!("A {}", item.a.nrows());
                    push_floats(&mut a, item.a.iter().copied());
                    writeln!(out, "{a}")?;
                    let mut b = String::from("b");
                    push_floats(&mut b, item.b.iter().copied());
                    writeln!(out, "{b}")?;
                }
            }
        }
        LossFamily::Logistic { groups } => {
            for (i, group) in groups.iter().enumerate() {
                for (j, item) in group.iter().enumerate() {
                    writeln!(out, "item {i} {j}")?;
                    let mut x = String::from("x");
                    push_floats(&mut x, item.x.iter().copied());
                    writeln!(out, "{x}")?;
                    writeln!(out, "y {}", fmt_f64(item.y))?;
                }
            }
        }
        LossFamily::TinyMlp { arch, groups } => {
            writeln!(out, "arch {} {}", arch.input, arch.hidden)?;
            for (i, group) in groups.iter().enumerate() {
                for (j, item) in group.iter().enumerate() {
                    writeln!(out, "item {i} {j}")?;
                    let mut x = String::from("x");
                    push_floats(&mut x, item.x.iter().copied());
                    writeln!(out, "{x}")?;
                    writeln!(out, "y {}", fmt_f64(item.y))?;
                }
            }
        }
    }
    Ok(())
}

struct Lines<R> {
    inner: R,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<(usize, String)>, SnapshotError> {
        let mut buf = String::new();
        loop {
            buf.clear();
            let read = self.inner.read_line(&mut buf)?;
            if read == 0 {
                return Ok(None);
            }
            self.number += 1;
            let trimmed = buf.trim();
            if !trimmed.is_empty() {
                return Ok(Some((self.number, trimmed.to_string())));
            }
        }
    }

    fn expect_line(&mut self) -> Result<(usize, String), SnapshotError> {
        self.next_line()?.ok_or(SnapshotError::Parse {
            line: self.number + 1,
            msg: "unexpected end of snapshot".into(),
        })
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> SnapshotError {
    SnapshotError::Parse {
        line,
        msg: msg.into(),
    }
}

fn tagged<'a>(line: usize, text: &'a str, tag: &str) -> Result<&'a str, SnapshotError> {
    text.strip_prefix(tag)
        .map(str::trim)
        .ok_or_else(|| parse_err(line, format!("expected `{tag} ...`, found `{text}`")))
}

fn floats(line: usize, text: &str) -> Result<Vec<f64>, SnapshotError> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| parse_err(line, format!("`{tok}` is not a float")))
        })
        .collect()
}

fn one_float(line: usize, text: &str) -> Result<f64, SnapshotError> {
    let vs = floats(line, text)?;
    if vs.len() != 1 {
        return Err(parse_err(line, "expected exactly one value"));
    }
    Ok(vs[0])
}

fn usizes(line: usize, text: &str) -> Result<Vec<usize>, SnapshotError> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| parse_err(line, format!("`{tok}` is not an integer")))
        })
        .collect()
}

/// Reads a snapshot produced by [`write_snapshot`].
pub fn read_snapshot<R: BufRead>(reader: R) -> Result<DroProblem, SnapshotError> {
    let mut lines = Lines {
        inner: reader,
        number: 0,
    };
    let (ln, magic) = lines.expect_line()?;
    if magic != "drokit-problem 1" {
        return Err(parse_err(ln, "not a `drokit-problem 1` snapshot"));
    }
    let (_, fam_line) = lines.expect_line()?;
    let family_name = tagged(lines.number, &fam_line, "family")?.to_string();
    let (ln, header) = lines.expect_line()?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() < 6 || toks[0] != "c" || toks[2] != "d" || toks[4] != "n_i" {
        return Err(parse_err(ln, "header needs `c <v> d <v> n_i <sizes>`"));
    }
    let c = usizes(ln, toks[1])?[0];
    let d = usizes(ln, toks[3])?[0];
    let sizes = usizes(ln, &toks[5..].join(" "))?;
    if sizes.len() != c {
        return Err(parse_err(ln, format!("expected {c} group sizes, got {}", sizes.len())));
    }
    let (ln, t) = lines.expect_line()?;
    let tau_theta = one_float(ln, tagged(ln, &t, "tau_theta")?)?;
    let (ln, t) = lines.expect_line()?;
    let tau_pi = one_float(ln, tagged(ln, &t, "tau_pi")?)?;
    let (ln, t) = lines.expect_line()?;
    let floor = one_float(ln, tagged(ln, &t, "floor")?)?;
    let (ln, t) = lines.expect_line()?;
    let prior = floats(ln, tagged(ln, &t, "prior")?)?;
    if prior.len() != c {
        return Err(parse_err(ln, format!("prior needs {c} entries")));
    }

    let mut arch = None;
    if family_name == "tiny_mlp" {
        let (ln, t) = lines.expect_line()?;
        let nums = usizes(ln, tagged(ln, &t, "arch")?)?;
        if nums.len() != 2 {
            return Err(parse_err(ln, "arch needs `<input> <hidden>`"));
        }
        arch = Some(MlpArch {
            input: nums[0],
            hidden: nums[1],
        });
    }

    let expect_item = |lines: &mut Lines<R>, i: usize, j: usize| -> Result<(), SnapshotError> {
        let (ln, t) = lines.expect_line()?;
        let nums = usizes(ln, tagged(ln, &t, "item")?)?;
        if nums != [i, j] {
            return Err(parse_err(ln, format!("expected `item {i} {j}`")));
        }
        Ok(())
    };

    let family = match family_name.as_str() {
        "quadratic" => {
            let mut groups = Vec::with_capacity(c);
            for (i, &size) in sizes.iter().enumerate() {
                let mut group = Vec::with_capacity(size);
                for j in 0..size {
                    expect_item(&mut lines, i, j)?;
                    let (ln, t) = lines.expect_line()?;
                    let a_vals = floats(ln, tagged(ln, &t, "A")?)?;
                    if a_vals.is_empty() {
                        return Err(parse_err(ln, "matrix line needs `<nrows> <values>`"));
                    }
                    let rows = a_vals[0] as usize;
                    let data = a_vals[1..].to_vec();
                    if rows == 0 || data.len() != rows * d {
                        return Err(parse_err(ln, format!("expected {rows}x{d} matrix values")));
                    }
                    let a = Array2::from_shape_vec((rows, d), data)
                        .map_err(|e| parse_err(ln, e.to_string()))?;
                    let (ln, t) = lines.expect_line()?;
                    let b = floats(ln, tagged(ln, &t, "b")?)?;
                    if b.len() != rows {
                        return Err(parse_err(ln, format!("b needs {rows} entries")));
                    }
                    group.push(QuadItem::new(a, Array1::from_vec(b)));
                }
                groups.push(group);
            }
            LossFamily::Quadratic { groups }
        }
        "logistic" | "tiny_mlp" => {
            let mut xy_groups: Vec<Vec<(Array1<f64>, f64)>> = Vec::with_capacity(c);
            for (i, &size) in sizes.iter().enumerate() {
                let mut group = Vec::with_capacity(size);
                for j in 0..size {
                    expect_item(&mut lines, i, j)?;
                    let (ln, t) = lines.expect_line()?;
                    let x = floats(ln, tagged(ln, &t, "x")?)?;
                    let want = if family_name == "logistic" { d } else { arch.unwrap().input };
                    if x.len() != want {
                        return Err(parse_err(ln, format!("x needs {want} entries")));
                    }
                    let (ln, t) = lines.expect_line()?;
                    let y = one_float(ln, tagged(ln, &t, "y")?)?;
                    group.push((Array1::from_vec(x), y));
                }
                xy_groups.push(group);
            }
            if family_name == "logistic" {
                LossFamily::Logistic {
                    groups: xy_groups
                        .into_iter()
                        .map(|g| g.into_iter().map(|(x, y)| LogisticItem { x, y }).collect())
                        .collect(),
                }
            } else {
                LossFamily::TinyMlp {
                    arch: arch.unwrap(),
                    groups: xy_groups
                        .into_iter()
                        .map(|g| g.into_iter().map(|(x, y)| MlpItem { x, y }).collect())
                        .collect(),
                }
            }
        }
        other => {
            return Err(parse_err(lines.number, format!("unknown family `{other}`")));
        }
    };
    if let Some((ln, t)) = lines.next_line()? {
        return Err(parse_err(ln, format!("trailing content `{t}`")));
    }
    let problem = DroProblem::new(family, d, tau_theta, tau_pi)?
        .with_prior(prior)?
        .with_floor(floor)?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_imbalanced_logistic, make_quadratic_problem, make_tiny_mlp, MlpDataSpec};
    use ndarray::arr1;

    fn roundtrip(p: &DroProblem) -> DroProblem {
        let mut buf = Vec::new();
        write_snapshot(p, &mut buf).unwrap();
        read_snapshot(buf.as_slice()).unwrap()
    }

    fn assert_same_evaluations(a: &DroProblem, b: &DroProblem, theta: &Array1<f64>) {
        assert_eq!(a.c(), b.c());
        assert_eq!(a.n(), b.n());
        assert_eq!(a.dim(), b.dim());
        let pa = a.initial_weights();
        // Bitwise agreement: 17 significant digits round-trip f64 exactly.
        assert_eq!(
            a.objective_h(theta, &pa).unwrap(),
            b.objective_h(theta, &pa).unwrap()
        );
        assert_eq!(a.group_losses(theta).unwrap(), b.group_losses(theta).unwrap());
    }

    #[test]
    fn quadratic_snapshot_roundtrips_losslessly() {
        let p = make_quadratic_problem(17, 3, 4, 2).with_taus(0.7, 1.3);
        let q = roundtrip(&p);
        assert_same_evaluations(&p, &q, &arr1(&[0.123456789, -0.5, 2.0 / 3.0]));
    }

    #[test]
    fn logistic_snapshot_roundtrips_losslessly() {
        let p = make_imbalanced_logistic(5, 2, 12, 3).problem;
        let q = roundtrip(&p);
        assert_same_evaluations(&p, &q, &arr1(&[0.25, -1.75]));
    }

    #[test]
    fn mlp_snapshot_roundtrips_losslessly() {
        let p = make_tiny_mlp(9, 2, 3, MlpDataSpec::default());
        let q = roundtrip(&p);
        let theta = Array1::from_shape_fn(p.dim(), |t| (t as f64 * 0.37).sin());
        assert_same_evaluations(&p, &q, &theta);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "drokit-problem 1\nfamily quadratic\nc 1  d 1  n_i 1\ntau_theta 1.0\ntau_pi 1.0\nfloor 0.0\nprior 1.0\nitem 0 0\nA 1 not_a_float\nb 0.0\n";
        let err = read_snapshot(text.as_bytes()).unwrap_err();
        match err {
            SnapshotError::Parse { line, .. } => assert_eq!(line, 9),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_foreign_headers() {
        let err = read_snapshot("something else\n".as_bytes()).unwrap_err();
        assert!(matches!(err, SnapshotError::Parse { line: 1, .. }));
    }
}
