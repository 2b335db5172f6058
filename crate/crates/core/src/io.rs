//! Plain-text file formats for matrices, operators and instances.
//!
//! ```text
//! # matrix <rows> <cols>
//! <row 1, comma separated>
//! ...
//! # operator <m> <n1> <n2> column-major
//! <m rows of n1·n2 values>
//! # b
//! <m lines, one value each>
//! # X0                      (optional)
//! # matrix <n1> <n2>
//! ...
//! # eps                     (optional)
//! <m lines>
//! ```
//!
//! Values are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{LinearOp, ProblemInstance};
use crate::spectral::Matrix;

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows(out: &mut String, m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_value(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
}

/// Serializes a matrix.
pub fn matrix_to_string(x: &Matrix) -> String {
    let mut s = format!("# matrix {} {}\n", x.nrows(), x.ncols());
    write_rows(&mut s, x);
    s
}

/// Serializes an operator.
pub fn operator_to_string(op: &LinearOp) -> String {
    let (n1, n2) = op.shape();
    let mut s = format!("# operator {} {} {} column-major\n", op.m(), n1, n2);
    write_rows(&mut s, op.dense());
    s
}

/// Serializes an instance, including ground truth when present.
pub fn instance_to_string(inst: &ProblemInstance) -> String {
    let mut s = operator_to_string(inst.op());
    s.push_str("# b\n");
    for &v in inst.b().iter() {
        s.push_str(&fmt_value(v));
        s.push('\n');
    }
    if let Some(g) = inst.ground_truth() {
        s.push_str("# X0\n");
        s.push_str(&matrix_to_string(&g.x0));
        s.push_str("# eps\n");
        for &v in g.eps.iter() {
            s.push_str(&fmt_value(v));
            s.push('\n');
        }
    }
    s
}

/// Line cursor that skips blank lines and reports 1-based line numbers.
struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { lines, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let item = self.peek().ok_or_else(|| Error::Parse {
            line: self.lines.last().map_or(1, |l| l.0 + 1),
            msg: format!("unexpected end of input, expected {what}"),
        })?;
        self.pos += 1;
        Ok(item)
    }

    fn header(&mut self, tag: &str) -> Result<(usize, Vec<&'a str>)> {
        let (line, text) = self.next(&format!("`# {tag}` header"))?;
        let words: Vec<&str> = text.trim_start_matches('#').split_whitespace().collect();
        if !text.starts_with('#') || words.first() != Some(&tag) {
            return Err(Error::Parse {
                line,
                msg: format!("expected `# {tag}` header, found `{text}`"),
            });
        }
        Ok((line, words[1..].to_vec()))
    }

    fn values(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let (line, text) = self.next(what)?;
        let vals = text
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("invalid number `{}`", t.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != count {
            return Err(Error::Parse {
                line,
                msg: format!("expected {count} values, found {}", vals.len()),
            });
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line,
                msg: "non-finite value".into(),
            });
        }
        Ok(vals)
    }

    fn dense(&mut self, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(rows, cols);
        for i in 0..rows {
            let r = self.values(cols, what)?;
            for (j, v) in r.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    fn column(&mut self, len: usize, what: &str) -> Result<DVector<f64>> {
        let mut v = DVector::zeros(len);
        for i in 0..len {
            v[i] = self.values(1, what)?[0];
        }
        Ok(v)
    }

    fn expect_end(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some((line, text)) => Err(Error::Parse {
                line,
                msg: format!("unexpected trailing content `{text}`"),
            }),
        }
    }
}

fn parse_dims(line: usize, words: &[&str], count: usize) -> Result<Vec<usize>> {
    if words.len() < count {
        return Err(Error::Parse {
            line,
            msg: format!("header needs {count} dimensions"),
        });
    }
    words[..count]
        .iter()
        .map(|w| match w.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(Error::Parse {
                line,
                msg: format!("invalid dimension `{w}`"),
            }),
        })
        .collect()
}

fn read_matrix_block(lines: &mut Lines) -> Result<Matrix> {
    let (line, words) = lines.header("matrix")?;
    let d = parse_dims(line, &words, 2)?;
    lines.dense(d[0], d[1], "matrix row")
}

fn read_operator_block(lines: &mut Lines) -> Result<LinearOp> {
    let (line, words) = lines.header("operator")?;
    let d = parse_dims(line, &words, 3)?;
    if words.get(3).is_some_and(|w| *w != "column-major") {
        return Err(Error::Parse {
            line,
            msg: format!("unsupported vectorization order `{}`", words[3]),
        });
    }
    let dense = lines.dense(d[0], d[1] * d[2], "operator row")?;
    LinearOp::new(dense, d[1], d[2])
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut lines = Lines::new(text);
    let m = read_matrix_block(&mut lines)?;
    lines.expect_end()?;
    Ok(m)
}

pub fn parse_operator(text: &str) -> Result<LinearOp> {
    let mut lines = Lines::new(text);
    let op = read_operator_block(&mut lines)?;
    lines.expect_end()?;
    Ok(op)
}

/// Parses an instance. When `# X0` is given without `# eps`, the noise is
/// taken as `b − 𝒜X₀`.
pub fn parse_instance(text: &str) -> Result<ProblemInstance> {
    let mut lines = Lines::new(text);
    let op = read_operator_block(&mut lines)?;
    lines.header("b")?;
    let b = lines.column(op.m(), "data value")?;
    let mut x0 = None;
    let mut eps = None;
    if lines.peek().is_some_and(|(_, t)| t.starts_with("# X0")) {
        lines.header("X0")?;
        let (line, _) = lines.peek().unwrap_or((0, ""));
        let m = read_matrix_block(&mut lines)?;
        if m.shape() != op.shape() {
            return Err(Error::Parse {
                line,
                msg: format!("X0 is {}x{}, operator expects {:?}", m.nrows(), m.ncols(), op.shape()),
            });
        }
        x0 = Some(m);
    }
    if lines.peek().is_some_and(|(_, t)| t.starts_with("# eps")) {
        let (line, _) = lines.header("eps")?;
        if x0.is_none() {
            return Err(Error::Parse {
                line,
                msg: "`# eps` requires a preceding `# X0` block".into(),
            });
        }
        eps = Some(lines.column(op.m(), "noise value")?);
    }
    lines.expect_end()?;
    match x0 {
        None => ProblemInstance::new(op, b),
        Some(x0) => {
            let eps = match eps {
                Some(e) => e,
                None => &b - op.apply(&x0)?,
            };
            let inst = ProblemInstance::with_ground_truth(op, x0, eps)?;
            let gap = (inst.b() - &b).norm();
            if gap > 1e-9 * (1.0 + b.norm()) {
                return Err(Error::Parse {
                    line: 0,
                    msg: format!("`# b` differs from A·X0 + eps by {gap:e}"),
                });
            }
            Ok(inst)
        }
    }
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn read_operator(path: &Path) -> Result<LinearOp> {
    parse_operator(&fs::read_to_string(path)?)
}

pub fn read_instance(path: &Path) -> Result<ProblemInstance> {
    parse_instance(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, x: &Matrix) -> Result<()> {
    Ok(fs::write(path, matrix_to_string(x))?)
}

pub fn write_operator(path: &Path, op: &LinearOp) -> Result<()> {
    Ok(fs::write(path, operator_to_string(op))?)
}

pub fn write_instance(path: &Path, inst: &ProblemInstance) -> Result<()> {
    Ok(fs::write(path, instance_to_string(inst))?)
}
