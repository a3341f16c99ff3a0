//! Grid-searched evaluation of model suites over dataset collections.
//!
//! Candidates are scored on a rayon pool and collected in enumeration order,
//! so results do not depend on the number of workers.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use twinsvm_core::dataset::{stratified_kfold, train_test_split, MinMaxScaler};
use twinsvm_core::evaluation::search::{candidates, finish_search, Candidate, CvEvaluator, SearchResult};
use twinsvm_core::evaluation::{auc, Grids};
use twinsvm_core::pipeline::{fuzzy_weights, train};
use twinsvm_core::{Dataset, Hyperparams, KernelFamily, KernelSpec, ModelKind, SolverParams};

use crate::config::{DatasetSource, ExperimentConfig, Protocol};
use crate::data::load_dataset;
use crate::error::{write_file, Error, Result};
use crate::report::{results_csv, sig6, timings_csv, write_rank_reports, RankReport, ResultRow, TimingRow};

pub fn kernel_name(f: KernelFamily) -> &'static str {
    match f {
        KernelFamily::Linear => "linear",
        KernelFamily::Gaussian => "gaussian",
    }
}

/// The constants a model actually uses, e.g. `sigma=0.5;c=10;c_reg=0.01`.
pub fn describe(kind: ModelKind, cand: &Candidate) -> String {
    let mut s = String::new();
    if !cand.kernel.is_linear() {
        let _ = write!(s, "sigma={};", cand.kernel.sigma);
    }
    let _ = write!(s, "c={}", cand.c);
    if kind.uses_regularizer() {
        let _ = write!(s, ";c_reg={}", cand.c_reg);
    }
    if kind.uses_energy() {
        let _ = write!(s, ";e1={};e2={}", cand.e1, cand.e2);
    }
    s
}

fn template(cfg: &ExperimentConfig) -> Hyperparams {
    let mut hp = Hyperparams::new(KernelSpec::linear(), SolverParams::lstsvm(1.0, 1.0));
    hp.ifma = cfg.ifma;
    hp.pfma = cfg.pfma;
    hp
}

pub fn load_source(src: &DatasetSource) -> Result<Dataset> {
    match src {
        DatasetSource::File(p) => Ok(load_dataset(p, None)?.dataset),
        DatasetSource::Crossplane(c) => Ok(c.generate()?),
    }
}

fn source_name(src: &DatasetSource) -> String {
    match src {
        DatasetSource::File(p) => p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| p.display().to_string()),
        DatasetSource::Crossplane(c) => format!("crossplane{}", c.n_pos + c.n_neg),
    }
}

/// Parallel cross-validated search over `cands` on fixed folds.
pub fn search(
    kind: ModelKind,
    d: &Dataset,
    cands: &[Candidate],
    folds: usize,
    seed: u64,
    template: &Hyperparams,
) -> Result<SearchResult> {
    let folds = stratified_kfold(d, folds, seed)?;
    let eval = CvEvaluator::new(kind, d, &folds, template, cands);
    let outcomes = cands.par_iter().map(|c| eval.evaluate(c)).collect();
    Ok(finish_search(kind, template, cands, outcomes)?)
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub search: SearchResult,
    /// Reported AUC in `[0, 1]`: the tuning CV mean, or the holdout score.
    pub auc: f64,
    pub search_seconds: f64,
    pub fit_seconds: f64,
}

/// Tunes `kind` on `d` and scores it under the configured protocol.
pub fn evaluate(kind: ModelKind, d: &Dataset, family: KernelFamily, cfg: &ExperimentConfig) -> Result<Evaluation> {
    let tpl = template(cfg);
    let cands = candidates(kind, family, &cfg.grids)?;
    let (train_set, test_set) = match cfg.protocol {
        Protocol::Cv => (d.clone(), None),
        Protocol::Holdout { train_fraction } => {
            let (tr, te) = train_test_split(d, train_fraction, cfg.seed)?;
            (d.subset(&tr), Some(d.subset(&te)))
        }
    };
    let (train_set, test_set) = if cfg.min_max_scale {
        let scaler = MinMaxScaler::fit(train_set.features());
        let scale = |s: &Dataset| s.with_features(scaler.transform(s.features()));
        let te = test_set.as_ref().map(scale).transpose()?;
        (scale(&train_set)?, te)
    } else {
        (train_set, test_set)
    };
    let t0 = Instant::now();
    let result = search(kind, &train_set, &cands, cfg.folds, cfg.seed, &tpl)?;
    let search_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let model = train(kind, &train_set, &result.best)?;
    let fit_seconds = t1.elapsed().as_secs_f64();
    let auc = match &test_set {
        Some(te) => auc(te.labels(), &model.predict(te.features())?)?,
        None => result.cv_auc,
    };
    Ok(Evaluation {
        search: result,
        auc,
        search_seconds,
        fit_seconds,
    })
}

#[derive(Debug, Clone)]
pub struct RunRow {
    pub dataset: String,
    pub model: ModelKind,
    pub kernel: KernelFamily,
    pub outcome: std::result::Result<Evaluation, String>,
}

impl RunRow {
    pub fn result_row(&self) -> ResultRow {
        let (params, auc, status) = match &self.outcome {
            Ok(e) => (describe(self.model, &e.search.candidate), Some(100.0 * e.auc), "ok".to_string()),
            Err(msg) => (String::new(), None, format!("error: {msg}")),
        };
        ResultRow {
            dataset: self.dataset.clone(),
            model: self.model.display_name().to_string(),
            kernel: kernel_name(self.kernel).to_string(),
            params,
            auc,
            status,
        }
    }

    pub fn timing_row(&self) -> TimingRow {
        let (s, f) = self.outcome.as_ref().map_or((0.0, 0.0), |e| (e.search_seconds, e.fit_seconds));
        TimingRow {
            dataset: self.dataset.clone(),
            model: self.model.display_name().to_string(),
            kernel: kernel_name(self.kernel).to_string(),
            search_seconds: s,
            fit_seconds: f,
        }
    }
}

type Loaded = Vec<(String, std::result::Result<Dataset, String>)>;

/// Loads every source; repeated names get a `#n` suffix so rows stay distinct.
fn load_all(cfg: &ExperimentConfig) -> Loaded {
    let mut out: Loaded = Vec::new();
    for src in &cfg.datasets {
        let (base, data) = match load_source(src) {
            Ok(d) => (d.name().to_string(), Ok(d)),
            Err(e) => (source_name(src), Err(e.to_string())),
        };
        let mut name = base.clone();
        let mut n = 1;
        while out.iter().any(|(existing, _)| *existing == name) {
            n += 1;
            name = format!("{base}#{n}");
        }
        out.push((name, data));
    }
    out
}

/// Evaluates every dataset x kernel x model. Failures are recorded per row.
pub fn run_rows(cfg: &ExperimentConfig) -> Vec<RunRow> {
    rows_for(cfg, &load_all(cfg))
}

fn rows_for(cfg: &ExperimentConfig, loaded: &Loaded) -> Vec<RunRow> {
    let mut tasks = Vec::new();
    for (i, _) in loaded.iter().enumerate() {
        for &kernel in &cfg.kernels {
            for &model in &cfg.models {
                tasks.push((i, kernel, model));
            }
        }
    }
    tasks
        .into_par_iter()
        .map(|(i, kernel, model)| {
            let (name, data) = &loaded[i];
            let outcome = match data {
                Ok(d) => evaluate(model, d, kernel, cfg).map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            };
            RunRow {
                dataset: name.clone(),
                model,
                kernel,
                outcome,
            }
        })
        .collect()
}

#[derive(Debug)]
pub struct RunOutput {
    pub rows: Vec<RunRow>,
    pub results_csv: String,
    /// Empty when fewer than two models succeeded on a common dataset.
    pub reports: Vec<RankReport>,
    pub report_error: Option<String>,
}

/// Runs the experiment and writes `results.csv`, `timings.csv` and the rank
/// reports into the output directory. Fails only if every row failed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let loaded = load_all(cfg);
    let rows = rows_for(cfg, &loaded);
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| Error::Io {
        path: cfg.output_dir.clone(),
        source,
    })?;
    let results: Vec<ResultRow> = rows.iter().map(RunRow::result_row).collect();
    let text = results_csv(&results)?;
    write_file(&cfg.output_dir.join("results.csv"), &text)?;
    let timings: Vec<TimingRow> = rows.iter().map(RunRow::timing_row).collect();
    write_file(&cfg.output_dir.join("timings.csv"), &timings_csv(&timings)?)?;
    if cfg.dump_memberships {
        dump_memberships(cfg, &loaded, &rows)?;
    }
    let (reports, report_error) = match write_rank_reports(&text, &cfg.output_dir) {
        Ok(r) => (r, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    if rows.iter().all(|r| r.outcome.is_err()) {
        let first = rows
            .iter()
            .find_map(|r| r.outcome.as_ref().err())
            .cloned()
            .unwrap_or_else(|| "nothing to run".into());
        return Err(Error::Unsupported(format!("every run failed; first error: {first}")));
    }
    Ok(RunOutput {
        rows,
        results_csv: text,
        reports,
        report_error,
    })
}

/// Writes the per-sample scores and weights of every successful fuzzy model,
/// computed on the full dataset with its selected constants.
fn dump_memberships(cfg: &ExperimentConfig, loaded: &Loaded, rows: &[RunRow]) -> Result<()> {
    for row in rows {
        let Ok(eval) = &row.outcome else { continue };
        if !matches!(row.model, ModelKind::IfRelstsvm | ModelKind::FRelstsvm) {
            continue;
        }
        let Some((_, Ok(d))) = loaded.iter().find(|(name, _)| *name == row.dataset) else {
            continue;
        };
        let scaled;
        let d = if cfg.min_max_scale {
            scaled = d.with_features(MinMaxScaler::fit(d.features()).transform(d.features()))?;
            &scaled
        } else {
            d
        };
        let w = fuzzy_weights(row.model, d, &eval.search.best)?.expect("fuzzy model");
        let (pos, neg) = d.class_indices();
        let mut weights = vec![0.0; d.len()];
        for (&i, &v) in pos.iter().zip(&w.s1).chain(neg.iter().zip(&w.s2)) {
            weights[i] = v;
        }
        let mut out = String::from("index,label,weight\n");
        for (i, (l, v)) in d.labels().iter().zip(&weights).enumerate() {
            let _ = writeln!(out, "{i},{},{}", l.as_i8(), sig6(*v));
        }
        let file = format!(
            "memberships_{}_{}_{}.csv",
            row.dataset,
            row.model.id(),
            kernel_name(row.kernel)
        );
        write_file(&cfg.output_dir.join(file), &out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dataset: String,
    pub kernel: KernelFamily,
    pub e1: f64,
    pub e2: f64,
    /// Best mean CV AUC over the remaining constants, in `[0, 1]`.
    pub auc: f64,
}

/// Mean CV AUC over every `(e1, e2)` pair, the other constants tuned on the
/// configured grids for each pair.
pub fn sweep_energy(cfg: &ExperimentConfig, kind: ModelKind, e1s: &[f64], e2s: &[f64]) -> Result<Vec<SweepRow>> {
    if !kind.uses_energy() {
        return Err(Error::Config(format!("{kind} has no energy parameters")));
    }
    for (name, g) in [("e1", e1s), ("e2", e2s)] {
        if g.is_empty() || g.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::Config(format!("{name} values must lie in (0, 1]")));
        }
    }
    let tpl = template(cfg);
    let mut out = Vec::new();
    for src in &cfg.datasets {
        let mut d = load_source(src)?;
        if cfg.min_max_scale {
            d = d.with_features(MinMaxScaler::fit(d.features()).transform(d.features()))?;
        }
        let folds = stratified_kfold(&d, cfg.folds, cfg.seed)?;
        for &family in &cfg.kernels {
            let mut blocks = Vec::new();
            for &e1 in e1s {
                for &e2 in e2s {
                    let grids = Grids {
                        e1: vec![e1],
                        e2: vec![e2],
                        ..cfg.grids.clone()
                    };
                    blocks.push((e1, e2, candidates(kind, family, &grids)?));
                }
            }
            let all: Vec<Candidate> = blocks.iter().flat_map(|b| b.2.iter().copied()).collect();
            let eval = CvEvaluator::new(kind, &d, &folds, &tpl, &all);
            let mut scores: Vec<twinsvm_core::Result<f64>> = all.par_iter().map(|c| eval.evaluate(c)).collect();
            for (e1, e2, cands) in &blocks {
                let outcomes = scores.drain(..cands.len()).collect();
                let best = finish_search(kind, &tpl, cands, outcomes)?;
                out.push(SweepRow {
                    dataset: d.name().to_string(),
                    kernel: family,
                    e1: *e1,
                    e2: *e2,
                    auc: best.cv_auc,
                });
            }
        }
    }
    Ok(out)
}

/// `dataset,kernel,e1,e2,auc` with `auc` in percent.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("dataset,kernel,e1,e2,auc\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.dataset,
            kernel_name(r.kernel),
            sig6(r.e1),
            sig6(r.e2),
            sig6(100.0 * r.auc)
        );
    }
    out
}

pub fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<()> {
    write_file(path, &sweep_csv(rows))
}
