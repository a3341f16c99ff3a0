//! Stratified k-fold cross-validation over a parameter grid.
//!
//! Candidates are enumerated in a fixed order (sigma, C, regularizer, E1,
//! E2, each in grid order) and the first candidate with the highest mean
//! validation AUC wins.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{stratified_kfold, Dataset, FoldAssignment};
use crate::error::{Error, Result};
use crate::evaluation::metrics::{auc, mean};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::membership::FuzzyWeights;
use crate::pipeline::{fuzzy_weights, train, train_with_weights, Hyperparams, ModelKind};

/// Values tried for each tunable constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    pub sigma: Vec<f64>,
    pub c: Vec<f64>,
    pub c_reg: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
}

impl Default for Grids {
    /// `sigma in {2^-5..2^5}`, `C in {10^-5..10^5}` for penalties and
    /// regularizers, energies in `{0.6, 0.7, 0.8, 0.9, 1}`.
    fn default() -> Self {
        let c = vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4, 1e5];
        let e = vec![0.6, 0.7, 0.8, 0.9, 1.0];
        Grids {
            sigma: (-5..=5).map(|i| libm::pow(2.0, i as f64)).collect(),
            c_reg: c.clone(),
            c,
            e1: e.clone(),
            e2: e,
        }
    }
}

impl Grids {
    /// A grid holding exactly one value per constant.
    pub fn single(sigma: f64, c: f64, c_reg: f64, e1: f64, e2: f64) -> Self {
        Grids {
            sigma: vec![sigma],
            c: vec![c],
            c_reg: vec![c_reg],
            e1: vec![e1],
            e2: vec![e2],
        }
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub kernel: KernelSpec,
    pub c: f64,
    pub c_reg: f64,
    pub e1: f64,
    pub e2: f64,
}

impl Candidate {
    /// `template` with this candidate's kernel and constants.
    pub fn hyperparams(&self, kind: ModelKind, template: &Hyperparams) -> Hyperparams {
        Hyperparams {
            kernel: self.kernel,
            params: kind.solver_params(self.c, self.c_reg, self.e1, self.e2),
            ..*template
        }
    }
}

/// All grid points that matter for `kind`. Constants a model does not use
/// are not enumerated: LSTSVM has no energies, LSTSVM and ELS-TSVM have no
/// regularizer, and the linear kernel has no width.
pub fn candidates(kind: ModelKind, family: KernelFamily, grids: &Grids) -> Result<Vec<Candidate>> {
    let sigmas: Vec<f64> = match family {
        KernelFamily::Linear => vec![1.0],
        KernelFamily::Gaussian => grids.sigma.clone(),
    };
    let (e1s, e2s) = if kind.uses_energy() {
        (grids.e1.clone(), grids.e2.clone())
    } else {
        (vec![1.0], vec![1.0])
    };
    for (name, g) in [
        ("sigma", &sigmas),
        ("C", &grids.c),
        ("E1", &e1s),
        ("E2", &e2s),
    ] {
        if g.is_empty() {
            return Err(Error::Empty(name));
        }
    }
    if kind.uses_regularizer() && grids.c_reg.is_empty() {
        return Err(Error::Empty("regularizer grid"));
    }
    let mut out = Vec::new();
    for &sigma in &sigmas {
        let kernel = KernelSpec { family, sigma };
        kernel.validate()?;
        for &c in &grids.c {
            let regs: &[f64] = if kind.uses_regularizer() {
                &grids.c_reg
            } else {
                core::slice::from_ref(&c)
            };
            for &c_reg in regs {
                for &e1 in &e1s {
                    for &e2 in &e2s {
                        out.push(Candidate {
                            kernel,
                            c,
                            c_reg,
                            e1,
                            e2,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Validation AUC of every fold.
pub fn fold_aucs(kind: ModelKind, d: &Dataset, hp: &Hyperparams, folds: &FoldAssignment) -> Result<Vec<f64>> {
    (0..folds.k)
        .map(|f| {
            let train_set = d.subset(&folds.train_indices(f));
            let test_set = d.subset(&folds.test_indices(f));
            let model = train(kind, &train_set, hp)?;
            let predicted = model.predict(test_set.features())?;
            auc(test_set.labels(), &predicted)
        })
        .collect()
}

/// Unweighted mean of the fold AUCs.
pub fn cross_validate(kind: ModelKind, d: &Dataset, hp: &Hyperparams, folds: &FoldAssignment) -> Result<f64> {
    let aucs = fold_aucs(kind, d, hp, folds)?;
    mean(&aucs).ok_or(Error::Empty("folds"))
}

/// Index of the first maximal score; NaN scores never win.
pub fn select_best(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        match best {
            Some(b) if scores[b] >= s => {}
            _ => best = Some(i),
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: Hyperparams,
    pub candidate: Candidate,
    pub index: usize,
    pub cv_auc: f64,
    /// Mean validation AUC per candidate in enumeration order; NaN where
    /// training failed.
    pub scores: Vec<f64>,
}

/// Picks the winner from per-candidate outcomes. Failed candidates are
/// skipped; if every candidate failed the first error is returned.
pub fn finish_search(
    kind: ModelKind,
    template: &Hyperparams,
    cands: &[Candidate],
    outcomes: Vec<Result<f64>>,
) -> Result<SearchResult> {
    let mut first_err = None;
    let scores: Vec<f64> = outcomes
        .into_iter()
        .map(|o| match o {
            Ok(s) => s,
            Err(e) => {
                first_err.get_or_insert(e);
                f64::NAN
            }
        })
        .collect();
    let Some(index) = select_best(&scores) else {
        return Err(first_err.unwrap_or(Error::Empty("candidate grid")));
    };
    let candidate = cands[index];
    Ok(SearchResult {
        best: candidate.hyperparams(kind, template),
        candidate,
        index,
        cv_auc: scores[index],
        scores,
    })
}

/// Cross-validation of many candidates on fixed folds.
///
/// Intuitionistic weights depend only on the kernel and the training split,
/// so for IF-RELSTSVM they are computed once per kernel width and fold and
/// shared by every candidate with that width.
pub struct CvEvaluator<'a> {
    kind: ModelKind,
    data: &'a Dataset,
    folds: &'a FoldAssignment,
    template: Hyperparams,
    splits: Vec<(Dataset, Dataset)>,
    ifma_cache: Vec<(KernelSpec, Result<Vec<FuzzyWeights>>)>,
}

impl<'a> CvEvaluator<'a> {
    pub fn new(
        kind: ModelKind,
        data: &'a Dataset,
        folds: &'a FoldAssignment,
        template: &Hyperparams,
        cands: &[Candidate],
    ) -> Self {
        let splits: Vec<(Dataset, Dataset)> = (0..folds.k)
            .map(|f| (data.subset(&folds.train_indices(f)), data.subset(&folds.test_indices(f))))
            .collect();
        let mut ifma_cache: Vec<(KernelSpec, Result<Vec<FuzzyWeights>>)> = Vec::new();
        if kind == ModelKind::IfRelstsvm {
            for c in cands {
                if ifma_cache.iter().any(|(k, _)| *k == c.kernel) {
                    continue;
                }
                let hp = c.hyperparams(kind, template);
                let weights = splits
                    .iter()
                    .map(|(tr, _)| {
                        fuzzy_weights(kind, tr, &hp).map(|w| w.expect("weighted model has weights"))
                    })
                    .collect();
                ifma_cache.push((c.kernel, weights));
            }
        }
        CvEvaluator {
            kind,
            data,
            folds,
            template: *template,
            splits,
            ifma_cache,
        }
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn folds(&self) -> &FoldAssignment {
        self.folds
    }

    /// Validation AUC of every fold for one candidate.
    pub fn fold_aucs(&self, cand: &Candidate) -> Result<Vec<f64>> {
        let hp = cand.hyperparams(self.kind, &self.template);
        let cached = self
            .ifma_cache
            .iter()
            .find(|(k, _)| *k == cand.kernel)
            .map(|(_, w)| w);
        self.splits
            .iter()
            .enumerate()
            .map(|(f, (tr, te))| {
                let model = match cached {
                    Some(Ok(w)) => train_with_weights(tr, &hp, &w[f])?,
                    Some(Err(e)) => return Err(e.clone()),
                    None => train(self.kind, tr, &hp)?,
                };
                auc(te.labels(), &model.predict(te.features())?)
            })
            .collect()
    }

    /// Unweighted mean of the fold AUCs.
    pub fn evaluate(&self, cand: &Candidate) -> Result<f64> {
        mean(&self.fold_aucs(cand)?).ok_or(Error::Empty("folds"))
    }
}

/// Sequential grid search with `k`-fold stratified cross-validation. The
/// same folds are used for every candidate.
pub fn grid_search_cv(
    kind: ModelKind,
    d: &Dataset,
    family: KernelFamily,
    grids: &Grids,
    k: usize,
    seed: u64,
    template: &Hyperparams,
) -> Result<SearchResult> {
    let folds = stratified_kfold(d, k, seed)?;
    let cands = candidates(kind, family, grids)?;
    let eval = CvEvaluator::new(kind, d, &folds, template, &cands);
    let outcomes = cands.iter().map(|c| eval.evaluate(c)).collect();
    finish_search(kind, template, &cands, outcomes)
}
