//! Plain-text model files.
//!
//! ```text
//! twinsvm-model 1
//! kernel gaussian 0.5
//! rule ratio
//! positive yes
//! negative no
//! w1 0.25 -1.5
//! b1 0.1
//! w2 1 2
//! b2 -0.3
//! basis 2 1
//! 0.5
//! 1.5
//! ```
//!
//! `basis` is present only for kernel models. Numbers use the shortest
//! representation that reads back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use twinsvm_core::{DecisionRule, KernelFamily, KernelSpec, Matrix, TwinModel};

use crate::data::LabelMap;
use crate::error::{read_file, write_file, Error, Result};

const MAGIC: &str = "twinsvm-model 1";

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: TwinModel,
    pub labels: LabelMap,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

pub fn to_text(saved: &SavedModel) -> String {
    let m = &saved.model;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let kernel = match m.spec.family {
        KernelFamily::Linear => "linear",
        KernelFamily::Gaussian => "gaussian",
    };
    let _ = writeln!(out, "kernel {kernel} {}", m.spec.sigma);
    let rule = match m.rule {
        DecisionRule::Perpendicular => "perpendicular",
        DecisionRule::Ratio => "ratio",
    };
    let _ = writeln!(out, "rule {rule}");
    let _ = writeln!(out, "positive {}", saved.labels.positive);
    let _ = writeln!(out, "negative {}", saved.labels.negative);
    let _ = writeln!(out, "w1 {}", join(&m.w1));
    let _ = writeln!(out, "b1 {}", m.b1);
    let _ = writeln!(out, "w2 {}", join(&m.w2));
    let _ = writeln!(out, "b2 {}", m.b2);
    if let Some(basis) = &m.basis {
        let _ = writeln!(out, "basis {} {}", basis.rows(), basis.cols());
        for row in basis.iter_rows() {
            let _ = writeln!(out, "{}", join(row));
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(Error::Format {
                line: self.last + 1,
                message: "unexpected end of model file".into(),
            }),
        }
    }

    /// Next line, which must start with `key`; returns the remainder.
    fn field(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, l) = self.next()?;
        match l.split_once(' ') {
            Some((k, rest)) if k == key => Ok((n, rest)),
            _ if l == key => Ok((n, "")),
            _ => Err(Error::Format {
                line: n,
                message: format!("expected {key:?}"),
            }),
        }
    }
}

fn numbers(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split_whitespace()
        .enumerate()
        .map(|(j, t)| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line,
                column: j + 1,
                value: t.to_string(),
            })
        })
        .collect()
}

fn scalar(s: &str, line: usize) -> Result<f64> {
    let v = numbers(s, line)?;
    match v.as_slice() {
        [x] => Ok(*x),
        _ => Err(Error::Format {
            line,
            message: "expected one number".into(),
        }),
    }
}

pub fn from_text(text: &str) -> Result<SavedModel> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (n, head) = lines.next()?;
    if head.trim() != MAGIC {
        return Err(Error::Format {
            line: n,
            message: "not a twinsvm model file".into(),
        });
    }
    let (n, kernel) = lines.field("kernel")?;
    let spec = match kernel.split_once(' ') {
        Some(("linear", s)) => KernelSpec {
            family: KernelFamily::Linear,
            sigma: scalar(s, n)?,
        },
        Some(("gaussian", s)) => KernelSpec::gaussian(scalar(s, n)?)?,
        _ => {
            return Err(Error::Format {
                line: n,
                message: format!("unknown kernel {kernel:?}"),
            })
        }
    };
    let (n, rule) = lines.field("rule")?;
    let rule = match rule {
        "perpendicular" => DecisionRule::Perpendicular,
        "ratio" => DecisionRule::Ratio,
        _ => {
            return Err(Error::Format {
                line: n,
                message: format!("unknown rule {rule:?}"),
            })
        }
    };
    let labels = LabelMap {
        positive: lines.field("positive")?.1.to_string(),
        negative: lines.field("negative")?.1.to_string(),
    };
    let (n, w1) = lines.field("w1")?;
    let w1 = numbers(w1, n)?;
    let (n, b1) = lines.field("b1")?;
    let b1 = scalar(b1, n)?;
    let (n, w2) = lines.field("w2")?;
    let w2 = numbers(w2, n)?;
    let (n, b2) = lines.field("b2")?;
    let b2 = scalar(b2, n)?;
    if w1.len() != w2.len() {
        return Err(Error::Format {
            line: n,
            message: "w1 and w2 lengths differ".into(),
        });
    }
    let basis = if spec.is_linear() {
        None
    } else {
        let (n, dims) = lines.field("basis")?;
        let dims = numbers(dims, n)?;
        let [rows, cols] = dims.as_slice() else {
            return Err(Error::Format {
                line: n,
                message: "basis needs row and column counts".into(),
            });
        };
        let (rows, cols) = (*rows as usize, *cols as usize);
        if rows != w1.len() {
            return Err(Error::Format {
                line: n,
                message: format!("basis has {rows} rows but w1 has {} entries", w1.len()),
            });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (n, l) = lines.next()?;
            let row = numbers(l, n)?;
            if row.len() != cols {
                return Err(Error::Format {
                    line: n,
                    message: format!("expected {cols} basis values"),
                });
            }
            data.extend(row);
        }
        Some(Matrix::from_vec(rows, cols, data)?)
    };
    Ok(SavedModel {
        model: TwinModel {
            w1,
            b1,
            w2,
            b2,
            spec,
            basis,
            rule,
        },
        labels,
    })
}

pub fn save_model(saved: &SavedModel, path: &Path) -> Result<()> {
    write_file(path, &to_text(saved))
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    from_text(&read_file(path)?)
}
