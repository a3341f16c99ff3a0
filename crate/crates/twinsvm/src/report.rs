//! Result files and rank statistics.
//!
//! `results.csv` holds one row per dataset, model and kernel:
//! `dataset,model,kernel,params,auc,status`, with `auc` in percent and
//! `status` either `ok` or `error: <message>`. Timings go to a separate
//! `timings.csv` so that `results.csv` is byte-identical across reruns.
//!
//! Rank statistics are computed per kernel from the results file alone,
//! so `rank-report` on a written `results.csv` reproduces the inline
//! reports exactly.

use std::fmt::Write as _;
use std::path::Path;

use twinsvm_core::evaluation::ranking::{q_alpha, significant_pairs, Alpha};
use twinsvm_core::evaluation::{friedman, nemenyi_cd, rank_table, FriedmanResult, RankTable};
use twinsvm_core::Matrix;

use crate::error::{write_file, Error, Result};

/// `x` with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new digit, e.g. 9.999996 -> 10.00000
    let rounded: f64 = s.parse().expect("formatted float parses");
    if rounded.abs().log10().floor() as i32 > exp && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// One scored (dataset, model) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub dataset: String,
    pub model: String,
    /// Group key; rank statistics are computed per group.
    pub kernel: Option<String>,
    /// `None` for failed rows.
    pub score: Option<f64>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub model: String,
    pub kernel: String,
    pub params: String,
    pub auc: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub dataset: String,
    pub model: String,
    pub kernel: String,
    pub search_seconds: f64,
    pub fit_seconds: f64,
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn results_csv(rows: &[ResultRow]) -> Result<String> {
    csv_text(
        &["dataset", "model", "kernel", "params", "auc", "status"],
        rows.iter().map(|r| {
            vec![
                r.dataset.clone(),
                r.model.clone(),
                r.kernel.clone(),
                r.params.clone(),
                r.auc.map(sig6).unwrap_or_default(),
                r.status.clone(),
            ]
        }),
    )
}

pub fn timings_csv(rows: &[TimingRow]) -> Result<String> {
    csv_text(
        &["dataset", "model", "kernel", "search_seconds", "fit_seconds"],
        rows.iter().map(|r| {
            vec![
                r.dataset.clone(),
                r.model.clone(),
                r.kernel.clone(),
                sig6(r.search_seconds),
                sig6(r.fit_seconds),
            ]
        }),
    )
}

fn parse_number(s: &str, line: usize, column: usize) -> Result<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
        line,
        column,
        value: s.to_string(),
    })
}

/// Reads scores from CSV text.
///
/// Long format has `dataset`, `model` and `auc` (or `score`) columns, plus
/// optional `kernel` and `status` columns; rows whose status is not `ok` or
/// whose score is empty count as failures. Any other header is read as wide
/// format: the first column names the dataset and every further column is a
/// model.
pub fn read_scores(text: &str) -> Result<Vec<ScoreRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| header.iter().position(|h| h.eq_ignore_ascii_case(name));
    let mut out = Vec::new();
    if let (Some(ds), Some(model)) = (col("dataset"), col("model")) {
        let score = col("auc").or_else(|| col("score")).ok_or_else(|| Error::Format {
            line: 1,
            message: "long format needs an auc or score column".into(),
        })?;
        let (kernel, status) = (col("kernel"), col("status"));
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let failed = status.is_some_and(|s| &rec[s] != "ok") || rec[score].is_empty();
            out.push(ScoreRecord {
                dataset: rec[ds].to_string(),
                model: rec[model].to_string(),
                kernel: kernel.map(|k| rec[k].to_string()),
                score: if failed { None } else { Some(parse_number(&rec[score], line, score + 1)?) },
                line,
            });
        }
    } else {
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            for j in 1..header.len() {
                out.push(ScoreRecord {
                    dataset: rec[0].to_string(),
                    model: header[j].clone(),
                    kernel: None,
                    score: if rec[j].is_empty() { None } else { Some(parse_number(&rec[j], line, j + 1)?) },
                    line,
                });
            }
        }
    }
    Ok(out)
}

/// Ranks, Friedman statistics and Nemenyi critical difference for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub group: Option<String>,
    pub models: Vec<String>,
    pub datasets: Vec<String>,
    /// Datasets left out because some model has no score on them.
    pub excluded: Vec<String>,
    pub table: RankTable,
    pub friedman: FriedmanResult,
    /// Nemenyi critical value at alpha = 0.10, when tabulated for `k`.
    pub q_alpha: Option<f64>,
    pub cd: Option<f64>,
    pub significant: Vec<(usize, usize)>,
}

fn push_unique(v: &mut Vec<String>, s: &str) -> usize {
    match v.iter().position(|x| x == s) {
        Some(i) => i,
        None => {
            v.push(s.to_string());
            v.len() - 1
        }
    }
}

/// Rank statistics for `records` sharing one group. Models and datasets keep
/// their order of first appearance.
pub fn rank_report(group: Option<String>, records: &[&ScoreRecord]) -> Result<RankReport> {
    let mut models = Vec::new();
    let mut all = Vec::new();
    for r in records {
        push_unique(&mut models, &r.model);
        push_unique(&mut all, &r.dataset);
    }
    let label = group.as_deref().map(|g| format!(" ({g})")).unwrap_or_default();
    if models.len() < 2 {
        return Err(Error::Format {
            line: records.first().map_or(1, |r| r.line),
            message: format!("ranking needs at least two models, found {}{label}", models.len()),
        });
    }
    let mut cells: Vec<Vec<Option<f64>>> = vec![vec![None; models.len()]; all.len()];
    let mut seen = vec![vec![false; models.len()]; all.len()];
    for r in records {
        let i = all.iter().position(|d| *d == r.dataset).expect("dataset indexed");
        let j = models.iter().position(|m| *m == r.model).expect("model indexed");
        if seen[i][j] {
            return Err(Error::Format {
                line: r.line,
                message: format!("duplicate entry for {} / {}", r.dataset, r.model),
            });
        }
        seen[i][j] = true;
        cells[i][j] = r.score;
    }
    let mut datasets = Vec::new();
    let mut excluded = Vec::new();
    let mut rows = Vec::new();
    for (name, row) in all.iter().zip(&cells) {
        if row.iter().all(Option::is_some) {
            datasets.push(name.clone());
            rows.push(row.iter().map(|v| v.expect("checked")).collect::<Vec<f64>>());
        } else {
            excluded.push(name.clone());
        }
    }
    if rows.is_empty() {
        return Err(Error::Format {
            line: 1,
            message: format!("no dataset has scores for every model{label}"),
        });
    }
    let table = rank_table(&Matrix::from_rows(&rows)?)?;
    let friedman = friedman(&table)?;
    let k = models.len();
    let q = q_alpha(k, Alpha::P10);
    let cd = q.map(|q| nemenyi_cd(k, datasets.len(), q)).transpose()?;
    let significant = cd.map(|cd| significant_pairs(&table.avg_ranks, cd)).unwrap_or_default();
    Ok(RankReport {
        group,
        models,
        datasets,
        excluded,
        table,
        friedman,
        q_alpha: q,
        cd,
        significant,
    })
}

/// One report per kernel group, in order of first appearance.
pub fn rank_reports(records: &[ScoreRecord]) -> Result<Vec<RankReport>> {
    let mut groups: Vec<Option<String>> = Vec::new();
    for r in records {
        if !groups.contains(&r.kernel) {
            groups.push(r.kernel.clone());
        }
    }
    if groups.is_empty() {
        return Err(Error::Format {
            line: 1,
            message: "no result rows".into(),
        });
    }
    groups
        .into_iter()
        .map(|g| {
            let members: Vec<&ScoreRecord> = records.iter().filter(|r| r.kernel == g).collect();
            rank_report(g, &members)
        })
        .collect()
}

impl RankReport {
    pub fn ranks_csv(&self) -> Result<String> {
        let mut header = vec!["dataset"];
        header.extend(self.models.iter().map(String::as_str));
        let n = self.datasets.len();
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![self.datasets[i].clone()];
                r.extend((0..self.models.len()).map(|j| sig6(self.table.ranks[(i, j)])));
                r
            })
            .chain(std::iter::once({
                let mut r = vec!["average".to_string()];
                r.extend(self.table.avg_ranks.iter().map(|&v| sig6(v)));
                r
            }));
        csv_text(&header, rows)
    }

    pub fn cd_csv(&self) -> Result<String> {
        let cd = self.cd.map(sig6).unwrap_or_default();
        csv_text(
            &["algorithm", "avg_rank", "cd"],
            self.models
                .iter()
                .zip(&self.table.avg_ranks)
                .map(|(m, &r)| vec![m.clone(), sig6(r), cd.clone()]),
        )
    }

    pub fn stats_text(&self) -> String {
        let f = &self.friedman;
        let mut out = String::new();
        if let Some(g) = &self.group {
            let _ = writeln!(out, "group {g}");
        }
        let _ = writeln!(out, "datasets {}", self.datasets.len());
        let _ = writeln!(out, "algorithms {}", self.models.len());
        let _ = writeln!(out, "chi2_f {}", sig6(f.chi2));
        let _ = writeln!(out, "f_f {}", sig6(f.ff));
        let _ = writeln!(out, "dof {} {}", f.dof1, f.dof2);
        match (self.q_alpha, self.cd) {
            (Some(q), Some(cd)) => {
                let _ = writeln!(out, "q_alpha_0.10 {}", sig6(q));
                let _ = writeln!(out, "cd {}", sig6(cd));
            }
            _ => {
                let _ = writeln!(out, "cd unavailable (no critical value for k = {})", self.models.len());
            }
        }
        out.push_str("average_ranks\n");
        for (m, r) in self.models.iter().zip(&self.table.avg_ranks) {
            let _ = writeln!(out, "  {m} {}", sig6(*r));
        }
        out.push_str("significant_pairs\n");
        for &(i, j) in &self.significant {
            let diff = (self.table.avg_ranks[i] - self.table.avg_ranks[j]).abs();
            let _ = writeln!(out, "  {} vs {} {}", self.models[i], self.models[j], sig6(diff));
        }
        if !self.excluded.is_empty() {
            let _ = writeln!(out, "excluded {}", self.excluded.join(", "));
        }
        out
    }

    /// Writes `ranks`, `stats` and `cd` files, suffixed with the group name
    /// when there is more than one group.
    pub fn write(&self, dir: &Path, suffixed: bool) -> Result<()> {
        let suffix = match (&self.group, suffixed) {
            (Some(g), true) => format!("_{g}"),
            _ => String::new(),
        };
        write_file(&dir.join(format!("ranks{suffix}.csv")), &self.ranks_csv()?)?;
        write_file(&dir.join(format!("stats{suffix}.txt")), &self.stats_text())?;
        write_file(&dir.join(format!("cd{suffix}.csv")), &self.cd_csv()?)
    }
}

/// Reads a results file and writes its rank reports into `dir`.
pub fn write_rank_reports(results_text: &str, dir: &Path) -> Result<Vec<RankReport>> {
    let reports = rank_reports(&read_scores(results_text)?)?;
    let suffixed = reports.len() > 1;
    for r in &reports {
        r.write(dir, suffixed)?;
    }
    Ok(reports)
}
