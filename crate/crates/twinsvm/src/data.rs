//! KEEL `.dat` and CSV dataset files.
//!
//! Both readers map the two class tokens onto labels the same way: the token
//! with more rows becomes `+1` (first-seen token on a tie), unless an explicit
//! [`LabelMap`] is supplied, as when scoring a file against a saved model.

use std::fmt::Write as _;
use std::path::Path;

use twinsvm_core::{Dataset, Label, Matrix};

use crate::error::{read_file, write_file, Error, Result};

/// Which file token stands for which label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub positive: String,
    pub negative: String,
}

impl LabelMap {
    fn label(&self, token: &str, line: usize) -> Result<Label> {
        if token == self.positive {
            Ok(Label::Positive)
        } else if token == self.negative {
            Ok(Label::Negative)
        } else {
            Err(Error::Unsupported(format!(
                "line {line}: class token {token:?} is neither {:?} nor {:?}",
                self.positive, self.negative
            )))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    pub labels: LabelMap,
}

/// Numeric tokens compare by value, so `1`, `+1` and `1.0` are one class.
fn canonical_token(raw: &str) -> String {
    let t = raw.trim().trim_matches(|c| c == '\'' || c == '"');
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => format!("{v}"),
        _ => t.to_string(),
    }
}

fn infer_label_map(tokens: &[String]) -> Result<LabelMap> {
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for t in tokens {
        match counts.iter_mut().find(|(s, _)| *s == t) {
            Some((_, n)) => *n += 1,
            None => counts.push((t, 1)),
        }
    }
    if counts.len() != 2 {
        let names: Vec<&str> = counts.iter().map(|(s, _)| *s).collect();
        return Err(Error::Unsupported(format!(
            "expected exactly two class tokens, found {}: {names:?}",
            counts.len()
        )));
    }
    let (first, second) = (counts[0], counts[1]);
    let (pos, neg) = if second.1 > first.1 { (second, first) } else { (first, second) };
    Ok(LabelMap {
        positive: pos.0.to_string(),
        negative: neg.0.to_string(),
    })
}

fn assemble(
    name: &str,
    rows: Vec<Vec<f64>>,
    n_features: usize,
    tokens: Vec<String>,
    lines: Vec<usize>,
    map: Option<&LabelMap>,
) -> Result<Loaded> {
    let labels = match map {
        Some(m) => m.clone(),
        None => infer_label_map(&tokens)?,
    };
    let y = tokens
        .iter()
        .zip(&lines)
        .map(|(t, &l)| labels.label(t, l))
        .collect::<Result<Vec<_>>>()?;
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    let x = Matrix::from_vec(y.len(), n_features, data)?;
    Ok(Loaded {
        dataset: Dataset::new(name, x, y)?,
        labels,
    })
}

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<f64> {
    let t = cell.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            column,
            value: t.to_string(),
        }),
    }
}

#[derive(Debug)]
struct Attribute {
    name: String,
    nominal: Option<Vec<String>>,
}

fn parse_attribute(rest: &str, line: usize) -> Result<Attribute> {
    let rest = rest.trim();
    let (name, ty) = if let Some(stripped) = rest.strip_prefix('\'') {
        let end = stripped.find('\'').ok_or_else(|| Error::Format {
            line,
            message: "unterminated attribute name".into(),
        })?;
        (stripped[..end].to_string(), stripped[end + 1..].trim())
    } else {
        let end = rest.find(|c: char| c.is_whitespace() || c == '{').unwrap_or(rest.len());
        (rest[..end].to_string(), rest[end..].trim())
    };
    if name.is_empty() {
        return Err(Error::Format {
            line,
            message: "attribute without a name".into(),
        });
    }
    let nominal = ty.strip_prefix('{').map(|body| {
        body.trim_end_matches('}')
            .split(',')
            .map(canonical_token)
            .collect()
    });
    Ok(Attribute { name, nominal })
}

fn name_list(rest: &str) -> Vec<String> {
    rest.split(',')
        .map(|s| s.trim().trim_matches('\'').to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn directive(line: &str) -> (String, &str) {
    let end = line.find(char::is_whitespace).unwrap_or(line.len());
    (line[..end].to_ascii_lowercase(), &line[end..])
}

/// Parses KEEL text. Attribute ranges are ignored; `@inputs`/`@outputs`
/// select columns when present, otherwise the last column is the class.
/// Nominal attributes are encoded by their position in the declared value
/// list.
pub fn parse_keel(text: &str, name: &str, map: Option<&LabelMap>) -> Result<Loaded> {
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut inputs: Option<Vec<String>> = None;
    let mut outputs: Option<Vec<String>> = None;
    let mut relation = None;
    let mut data_line = None;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !line.starts_with('@') {
            return Err(Error::Format {
                line: line_no,
                message: "data row before @data".into(),
            });
        }
        let (dir, rest) = directive(line);
        match dir.as_str() {
            "@relation" => relation = Some(rest.trim().to_string()),
            "@attribute" => attributes.push(parse_attribute(rest, line_no)?),
            "@inputs" | "@input" => inputs = Some(name_list(rest)),
            "@outputs" | "@output" => outputs = Some(name_list(rest)),
            "@data" => {
                data_line = Some(line_no);
                break;
            }
            _ => {}
        }
    }
    let Some(start) = data_line else {
        return Err(Error::Format {
            line: last_line,
            message: "missing @data marker".into(),
        });
    };

    let index_of = |n: &str, line: usize| -> Result<usize> {
        attributes.iter().position(|a| a.name == n).ok_or_else(|| Error::Format {
            line,
            message: format!("unknown attribute {n:?}"),
        })
    };
    let output_col = match &outputs {
        Some(o) if o.len() != 1 => {
            return Err(Error::Unsupported(format!("{} output attributes", o.len())));
        }
        Some(o) => Some(index_of(&o[0], start)?),
        None => None,
    };
    let input_cols: Option<Vec<usize>> = match &inputs {
        Some(names) => Some(names.iter().map(|n| index_of(n, start)).collect::<Result<_>>()?),
        None => None,
    };

    let mut rows = Vec::new();
    let mut tokens = Vec::new();
    let mut lines = Vec::new();
    let mut width = (!attributes.is_empty()).then_some(attributes.len());
    for (i, raw) in text.lines().enumerate().skip(start) {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let w = *width.get_or_insert(cells.len());
        if cells.len() != w {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected {w} values, found {}", cells.len()),
            });
        }
        if w < 2 {
            return Err(Error::Format {
                line: line_no,
                message: "a row needs at least one feature and a class".into(),
            });
        }
        let out = output_col.unwrap_or(w - 1);
        let feature_cols: Vec<usize> = match &input_cols {
            Some(c) => c.clone(),
            None => (0..w).filter(|&j| j != out).collect(),
        };
        let mut row = Vec::with_capacity(feature_cols.len());
        for &j in &feature_cols {
            let nominal = attributes.get(j).and_then(|a| a.nominal.as_ref());
            let v = match nominal {
                Some(values) => {
                    let t = canonical_token(cells[j]);
                    values.iter().position(|v| *v == t).ok_or_else(|| Error::Parse {
                        line: line_no,
                        column: j + 1,
                        value: cells[j].to_string(),
                    })? as f64
                }
                None => parse_cell(cells[j], line_no, j + 1)?,
            };
            row.push(v);
        }
        rows.push(row);
        tokens.push(canonical_token(cells[out]));
        lines.push(line_no);
    }
    if rows.is_empty() {
        return Err(Error::Format {
            line: last_line,
            message: "no data rows".into(),
        });
    }
    let n = rows[0].len();
    let name = relation.filter(|r| !r.is_empty()).unwrap_or_else(|| name.to_string());
    assemble(&name, rows, n, tokens, lines, map)
}

/// CSV with a header row; the last column is the class.
pub fn parse_csv(text: &str, name: &str, map: Option<&LabelMap>) -> Result<Loaded> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let width = reader.headers()?.len();
    if width < 2 {
        return Err(Error::Format {
            line: 1,
            message: "header needs at least one feature and a class column".into(),
        });
    }
    let mut rows = Vec::new();
    let mut tokens = Vec::new();
    let mut lines = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row = (0..width - 1)
            .map(|j| parse_cell(&rec[j], line, j + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
        tokens.push(canonical_token(&rec[width - 1]));
        lines.push(line);
    }
    if rows.is_empty() {
        return Err(Error::Format {
            line: 1,
            message: "no data rows".into(),
        });
    }
    assemble(name, rows, width - 1, tokens, lines, map)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn load_keel(path: &Path) -> Result<Loaded> {
    parse_keel(&read_file(path)?, &stem(path), None)
}

pub fn load_csv(path: &Path) -> Result<Loaded> {
    parse_csv(&read_file(path)?, &stem(path), None)
}

/// Reads `.csv` files as CSV and anything else as KEEL.
pub fn load_dataset(path: &Path, map: Option<&LabelMap>) -> Result<Loaded> {
    let text = read_file(path)?;
    if is_csv(path) {
        parse_csv(&text, &stem(path), map)
    } else {
        parse_keel(&text, &stem(path), map)
    }
}

fn label_token(l: Label) -> &'static str {
    match l {
        Label::Positive => "1",
        Label::Negative => "-1",
    }
}

pub fn to_csv(d: &Dataset) -> String {
    let mut out = String::new();
    for j in 0..d.n_features() {
        let _ = write!(out, "x{},", j + 1);
    }
    out.push_str("label\n");
    for (row, &y) in d.features().iter_rows().zip(d.labels()) {
        for v in row {
            let _ = write!(out, "{v},");
        }
        out.push_str(label_token(y));
        out.push('\n');
    }
    out
}

pub fn to_keel(d: &Dataset) -> String {
    let mut out = format!("@relation {}\n", d.name());
    for j in 0..d.n_features() {
        let _ = writeln!(out, "@attribute x{} real", j + 1);
    }
    out.push_str("@attribute class {1, -1}\n");
    let inputs: Vec<String> = (1..=d.n_features()).map(|j| format!("x{j}")).collect();
    let _ = writeln!(out, "@inputs {}", inputs.join(", "));
    out.push_str("@outputs class\n@data\n");
    for (row, &y) in d.features().iter_rows().zip(d.labels()) {
        for v in row {
            let _ = write!(out, "{v}, ");
        }
        out.push_str(label_token(y));
        out.push('\n');
    }
    out
}

/// Writes CSV for `.csv` paths and KEEL otherwise. Labels are written as
/// `1`/`-1`, features in shortest round-trip form.
pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    let text = if is_csv(path) { to_csv(d) } else { to_keel(d) };
    write_file(path, &text)
}
