//! Model identifiers and end-to-end training of each model.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::membership::{
    ifma, pfma, weights_from_scores, FuzzyWeights, IfmaParams, PfmaParams, WeightScheme,
};
use crate::solver::{
    fit_elstsvm, fit_lstsvm, fit_relstsvm, fit_weighted, Formulation, SolverParams, TwinModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Lstsvm,
    Elstsvm,
    Relstsvm,
    /// Weighted RELS-TSVM with intuitionistic fuzzy weights.
    IfRelstsvm,
    /// Weighted RELS-TSVM with projection-based fuzzy weights.
    FRelstsvm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Lstsvm,
        ModelKind::Elstsvm,
        ModelKind::Relstsvm,
        ModelKind::IfRelstsvm,
        ModelKind::FRelstsvm,
    ];

    /// Identifier used in configuration files.
    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Lstsvm => "lstsvm",
            ModelKind::Elstsvm => "elstsvm",
            ModelKind::Relstsvm => "relstsvm",
            ModelKind::IfRelstsvm => "if_relstsvm",
            ModelKind::FRelstsvm => "f_relstsvm",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Lstsvm => "LSTSVM",
            ModelKind::Elstsvm => "ELS-TSVM",
            ModelKind::Relstsvm => "RELS-TSVM",
            ModelKind::IfRelstsvm => "IF-RELSTSVM",
            ModelKind::FRelstsvm => "F-RELSTSVM",
        }
    }

    /// Accepts either the identifier or the display name, ignoring case.
    pub fn parse(s: &str) -> Option<ModelKind> {
        ModelKind::ALL.into_iter().find(|k| {
            s.eq_ignore_ascii_case(k.id()) || s.eq_ignore_ascii_case(k.display_name())
        })
    }

    pub fn formulation(self) -> Formulation {
        match self {
            ModelKind::Lstsvm => Formulation::Lstsvm,
            ModelKind::Elstsvm => Formulation::Elstsvm,
            ModelKind::Relstsvm => Formulation::Relstsvm,
            ModelKind::IfRelstsvm | ModelKind::FRelstsvm => Formulation::WeightedRelstsvm,
        }
    }

    pub fn uses_energy(self) -> bool {
        self != ModelKind::Lstsvm
    }

    pub fn uses_regularizer(self) -> bool {
        matches!(
            self,
            ModelKind::Relstsvm | ModelKind::IfRelstsvm | ModelKind::FRelstsvm
        )
    }

    /// Solver constants from one penalty `c` and one regularizer `c_reg`.
    ///
    /// Both planes share their penalty and their regularizer. In RELS-TSVM
    /// the penalties are `c1, c2` and the regularizers `c3, c4`; in the
    /// weighted model the penalties are `c1, c3` and the regularizers `c2, c4`.
    /// LSTSVM ignores the energies.
    pub fn solver_params(self, c: f64, c_reg: f64, e1: f64, e2: f64) -> SolverParams {
        match self {
            ModelKind::Lstsvm => SolverParams::lstsvm(c, c),
            ModelKind::Elstsvm => SolverParams::elstsvm(c, c, e1, e2),
            ModelKind::Relstsvm => SolverParams::relstsvm(c, c, c_reg, c_reg, e1, e2),
            ModelKind::IfRelstsvm | ModelKind::FRelstsvm => {
                SolverParams::weighted(c, c_reg, c, c_reg, e1, e2)
            }
        }
    }
}

impl core::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.display_name())
    }
}

/// Everything needed to train one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub kernel: KernelSpec,
    pub params: SolverParams,
    pub ifma: IfmaParams,
    pub pfma: PfmaParams,
    /// ELS-TSVM constants for the PFMA planes. `None` reuses the outer
    /// model's penalties (`c1`, `c3`) and energies.
    pub pfma_inner: Option<SolverParams>,
}

impl Hyperparams {
    pub fn new(kernel: KernelSpec, params: SolverParams) -> Self {
        Hyperparams {
            kernel,
            params,
            ifma: IfmaParams::default(),
            pfma: PfmaParams::default(),
            pfma_inner: None,
        }
    }

    fn inner_params(&self) -> SolverParams {
        self.pfma_inner.unwrap_or_else(|| {
            let p = &self.params;
            SolverParams::elstsvm(p.c1, p.c3, p.e1, p.e2)
        })
    }
}

/// Fuzzy weights for the weighted models, `None` for the others.
pub fn fuzzy_weights(kind: ModelKind, d: &Dataset, hp: &Hyperparams) -> Result<Option<FuzzyWeights>> {
    let scores = match kind {
        ModelKind::IfRelstsvm => ifma(d, &hp.kernel, &hp.ifma)?.scores,
        ModelKind::FRelstsvm => pfma(d, &hp.kernel, &hp.inner_params(), &hp.pfma)?.scores,
        _ => return Ok(None),
    };
    let scheme = if kind == ModelKind::IfRelstsvm {
        WeightScheme::Ifma
    } else {
        WeightScheme::Pfma
    };
    weights_from_scores(&scores, d, scheme).map(Some)
}

/// Trains `kind` on `d`; `+1` rows form class `A`.
pub fn train(kind: ModelKind, d: &Dataset, hp: &Hyperparams) -> Result<TwinModel> {
    let split = d.split_classes();
    if split.a.rows() == 0 || split.b.rows() == 0 {
        return Err(Error::DegenerateDataset("training needs both classes"));
    }
    let (a, b, spec, p) = (&split.a, &split.b, &hp.kernel, &hp.params);
    match kind {
        ModelKind::Lstsvm => fit_lstsvm(a, b, p, spec),
        ModelKind::Elstsvm => fit_elstsvm(a, b, p, spec),
        ModelKind::Relstsvm => fit_relstsvm(a, b, p, spec),
        ModelKind::IfRelstsvm | ModelKind::FRelstsvm => {
            let w = fuzzy_weights(kind, d, hp)?.expect("weighted model has weights");
            fit_weighted(a, b, &w.s1, &w.s2, p, spec)
        }
    }
}

/// Trains the weighted model on `d` with weights computed elsewhere.
pub fn train_with_weights(d: &Dataset, hp: &Hyperparams, weights: &FuzzyWeights) -> Result<TwinModel> {
    let split = d.split_classes();
    fit_weighted(&split.a, &split.b, &weights.s1, &weights.s2, &hp.params, &hp.kernel)
}
