//! Closed-form training of the twin-plane models and their decision rules.
//!
//! With `z = [w; b]`, `G = [A e]` and `H = [B e]` (or `[K(A, C^T) e]` and
//! `[K(B, C^T) e]` with `C = [A; B]` for a nonlinear kernel), every plane
//! minimises one of
//!
//! ```text
//! plane 1:  1/2 |G z|^2 + a/2 |S2 (H z + E2)|^2 + r/2 |z|^2
//! plane 2:  1/2 |H z|^2 + a/2 |S1 (G z - E1)|^2 + r/2 |z|^2
//! ```
//!
//! obtained by substituting the equality constraint into the objective.
//! Setting the gradient to zero gives
//! `(G^T G + a H^T S2^2 H + r I) z1 = -a H^T S2^2 E2` and its mirror.
//!
//! | model     | plane 1 `(a, r)` | plane 2 `(a, r)` | `S`     | `E`      |
//! |-----------|------------------|------------------|---------|----------|
//! | LSTSVM    | `(c1, 0)`        | `(c2, 0)`        | `I`     | `1`      |
//! | ELS-TSVM  | `(c1, 0)`        | `(c2, 0)`        | `I`     | `e2, e1` |
//! | RELS-TSVM | `(c1, c3)`       | `(c2, c4)`       | `I`     | `e2, e1` |
//! | weighted  | `(c1, c2)`       | `(c3, c4)`       | weights | `e2, e1` |
//!
//! Energies pair with the opposite-class constraint they appear in.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::kernel::{gram, KernelSpec};
use crate::matrix::{dot, norm, Matrix};
use crate::numerics::{Cholesky, LowRankSystem, SolveTrace};

/// Relative ridge added to an unregularised system whose factorization
/// breaks down.
pub const FALLBACK_RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecisionRule {
    /// `+1` iff `|f1| / |w1| <= |f2| / |w2|`.
    Perpendicular,
    /// `+1` iff `|f1| <= |f2|`.
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    Lstsvm,
    Elstsvm,
    Relstsvm,
    WeightedRelstsvm,
}

/// Penalty, regularization and energy constants. See the module table for
/// which constant plays which role in each formulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub e1: f64,
    pub e2: f64,
    pub formulation: Formulation,
}

impl SolverParams {
    pub fn lstsvm(c1: f64, c2: f64) -> Self {
        SolverParams {
            c1,
            c2,
            c3: c1,
            c4: c2,
            e1: 1.0,
            e2: 1.0,
            formulation: Formulation::Lstsvm,
        }
    }

    pub fn elstsvm(c1: f64, c2: f64, e1: f64, e2: f64) -> Self {
        SolverParams {
            c1,
            c2,
            c3: c1,
            c4: c2,
            e1,
            e2,
            formulation: Formulation::Elstsvm,
        }
    }

    pub fn relstsvm(c1: f64, c2: f64, c3: f64, c4: f64, e1: f64, e2: f64) -> Self {
        SolverParams {
            c1,
            c2,
            c3,
            c4,
            e1,
            e2,
            formulation: Formulation::Relstsvm,
        }
    }

    pub fn weighted(c1: f64, c2: f64, c3: f64, c4: f64, e1: f64, e2: f64) -> Self {
        SolverParams {
            c1,
            c2,
            c3,
            c4,
            e1,
            e2,
            formulation: Formulation::WeightedRelstsvm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
            ("e1", self.e1),
            ("e2", self.e2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }

    pub fn rule(&self) -> DecisionRule {
        match self.formulation {
            Formulation::Lstsvm => DecisionRule::Perpendicular,
            _ => DecisionRule::Ratio,
        }
    }

    /// `(penalty, regularizer, energy)` for each plane.
    fn plane_constants(&self) -> [(f64, f64, f64); 2] {
        match self.formulation {
            Formulation::Lstsvm => [(self.c1, 0.0, 1.0), (self.c2, 0.0, 1.0)],
            Formulation::Elstsvm => [(self.c1, 0.0, self.e2), (self.c2, 0.0, self.e1)],
            Formulation::Relstsvm => [(self.c1, self.c3, self.e2), (self.c2, self.c4, self.e1)],
            Formulation::WeightedRelstsvm => {
                [(self.c1, self.c2, self.e2), (self.c3, self.c4, self.e1)]
            }
        }
    }
}

/// Augmented class blocks `G`, `H` and the kernel basis they were built on.
#[derive(Debug, Clone)]
pub struct TwinDesign {
    pub g: Matrix,
    pub h: Matrix,
    pub basis: Option<Matrix>,
    pub spec: KernelSpec,
}

impl TwinDesign {
    pub fn new(a: &Matrix, b: &Matrix, spec: &KernelSpec) -> Result<Self> {
        spec.validate()?;
        if a.rows() == 0 {
            return Err(Error::DegenerateDataset("class A is empty"));
        }
        if b.rows() == 0 {
            return Err(Error::DegenerateDataset("class B is empty"));
        }
        if a.cols() != b.cols() {
            return Err(Error::Shape {
                context: "class B column count",
                expected: a.cols(),
                found: b.cols(),
            });
        }
        if spec.is_linear() {
            Ok(TwinDesign {
                g: a.augment_ones(),
                h: b.augment_ones(),
                basis: None,
                spec: *spec,
            })
        } else {
            let basis = a.vstack(b)?;
            Ok(TwinDesign {
                g: gram(a, &basis, spec)?.augment_ones(),
                h: gram(b, &basis, spec)?.augment_ones(),
                basis: Some(basis),
                spec: *spec,
            })
        }
    }

    /// Length of `z = [w; b]`.
    pub fn dim(&self) -> usize {
        self.g.cols()
    }
}

/// Two planes `f_i(x) = k(x)^T w_i + b_i`, where `k(x)` is `x` for the linear
/// kernel and `K(x, C^T)` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinModel {
    pub w1: Vec<f64>,
    pub b1: f64,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub spec: KernelSpec,
    pub basis: Option<Matrix>,
    pub rule: DecisionRule,
}

impl TwinModel {
    /// Number of raw input features expected by [`TwinModel::predict`].
    pub fn input_dim(&self) -> usize {
        match &self.basis {
            Some(c) => c.cols(),
            None => self.w1.len(),
        }
    }

    fn features(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape {
                context: "prediction input columns",
                expected: self.input_dim(),
                found: x.cols(),
            });
        }
        match &self.basis {
            Some(c) => gram(x, c, &self.spec),
            None => Ok(x.clone()),
        }
    }

    /// `(f1(x), f2(x))` for every row of `x`.
    pub fn decision_values(&self, x: &Matrix) -> Result<Vec<(f64, f64)>> {
        let k = self.features(x)?;
        Ok(k.iter_rows()
            .map(|r| (dot(r, &self.w1) + self.b1, dot(r, &self.w2) + self.b2))
            .collect())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<Label>> {
        let n1 = norm(&self.w1);
        let n2 = norm(&self.w2);
        Ok(self
            .decision_values(x)?
            .into_iter()
            .map(|(f1, f2)| classify(self.rule, f1, f2, n1, n2))
            .collect())
    }
}

/// Applies a decision rule to plane values. Ties go to `+1`.
pub fn classify(rule: DecisionRule, f1: f64, f2: f64, norm_w1: f64, norm_w2: f64) -> Label {
    let positive = match rule {
        // cross-multiplied to stay defined when a norm is zero
        DecisionRule::Perpendicular => libm::fabs(f1) * norm_w2 <= libm::fabs(f2) * norm_w1,
        DecisionRule::Ratio => libm::fabs(f1) <= libm::fabs(f2),
    };
    if positive {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Which solve produced each plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitTrace {
    pub plane1: SolveTrace,
    pub plane2: SolveTrace,
}

struct Plane<'a> {
    own: &'a Matrix,
    other: &'a Matrix,
    weights: Option<&'a [f64]>,
    penalty: f64,
    ridge: f64,
    energy: f64,
    // -1 for plane 1 (other class pushed to -E), +1 for plane 2
    sign: f64,
}

impl Plane<'_> {
    fn solve(&self) -> Result<(Vec<f64>, SolveTrace)> {
        let scaled;
        let other = match self.weights {
            Some(s) => {
                scaled = self.other.scale_rows(s);
                &scaled
            }
            None => self.other,
        };
        let target: Vec<f64> = match self.weights {
            Some(s) => s.iter().map(|w| w * self.energy).collect(),
            None => vec![self.energy; other.rows()],
        };
        let mut rhs = other.t_mul_vec(&target);
        let coeff = self.sign * self.penalty;
        rhs.iter_mut().for_each(|v| *v *= coeff);

        let dim = self.own.cols();
        // the larger block is the innermost Woodbury update for plane 1, the
        // smaller one for plane 2
        let other_inner = (other.rows() >= self.own.rows()) == (self.sign < 0.0);
        let sys = if other_inner {
            LowRankSystem::new(dim, self.ridge)
                .with_block(self.penalty, other)
                .with_block(1.0, self.own)
        } else {
            LowRankSystem::new(dim, self.ridge)
                .with_block(1.0, self.own)
                .with_block(self.penalty, other)
        };
        if self.ridge > 0.0 {
            return sys.solve(&rhs);
        }
        match sys.solve_direct(&rhs) {
            Err(Error::NotPositiveDefinite { .. }) => {
                let trace = sys.assemble().trace();
                let mut ridged = sys.clone();
                ridged.ridge = FALLBACK_RIDGE * trace / dim as f64;
                ridged.solve_direct(&rhs)
            }
            other => other,
        }
    }
}

fn check_weights(w: &[f64], expected: usize, offset: usize) -> Result<()> {
    if w.len() != expected {
        return Err(Error::Shape {
            context: "fuzzy weight count",
            expected,
            found: w.len(),
        });
    }
    if let Some((i, &v)) = w.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidWeight {
            index: offset + i,
            value: v,
        });
    }
    Ok(())
}

fn split(z: Vec<f64>) -> (Vec<f64>, f64) {
    let mut w = z;
    let b = w.pop().unwrap_or(0.0);
    (w, b)
}

/// Solves both planes on a prepared design. `extra_ridge` is added to both
/// system matrices on top of the formulation's own regularizer.
pub fn fit_design(
    design: &TwinDesign,
    params: &SolverParams,
    weights: Option<(&[f64], &[f64])>,
    extra_ridge: f64,
) -> Result<(TwinModel, FitTrace)> {
    params.validate()?;
    if !(extra_ridge >= 0.0 && extra_ridge.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "ridge",
            value: extra_ridge,
        });
    }
    let (s1, s2) = match weights {
        Some((s1, s2)) => {
            check_weights(s1, design.g.rows(), 0)?;
            check_weights(s2, design.h.rows(), design.g.rows())?;
            (Some(s1), Some(s2))
        }
        None => (None, None),
    };
    let [(a1, r1, en1), (a2, r2, en2)] = params.plane_constants();
    let (z1, t1) = Plane {
        own: &design.g,
        other: &design.h,
        weights: s2,
        penalty: a1,
        ridge: r1 + extra_ridge,
        energy: en1,
        sign: -1.0,
    }
    .solve()?;
    let (z2, t2) = Plane {
        own: &design.h,
        other: &design.g,
        weights: s1,
        penalty: a2,
        ridge: r2 + extra_ridge,
        energy: en2,
        sign: 1.0,
    }
    .solve()?;
    let (w1, b1) = split(z1);
    let (w2, b2) = split(z2);
    Ok((
        TwinModel {
            w1,
            b1,
            w2,
            b2,
            spec: design.spec,
            basis: design.basis.clone(),
            rule: params.rule(),
        },
        FitTrace {
            plane1: t1,
            plane2: t2,
        },
    ))
}

fn fit_as(
    a: &Matrix,
    b: &Matrix,
    params: &SolverParams,
    formulation: Formulation,
    spec: &KernelSpec,
) -> Result<TwinModel> {
    let params = SolverParams {
        formulation,
        ..*params
    };
    let design = TwinDesign::new(a, b, spec)?;
    fit_design(&design, &params, None, 0.0).map(|(m, _)| m)
}

/// LSTSVM: `c1`, `c2` are the slack penalties; energies are fixed at 1 and the
/// perpendicular-distance rule is used.
pub fn fit_lstsvm(a: &Matrix, b: &Matrix, params: &SolverParams, spec: &KernelSpec) -> Result<TwinModel> {
    let params = SolverParams {
        e1: 1.0,
        e2: 1.0,
        ..*params
    };
    fit_as(a, b, &params, Formulation::Lstsvm, spec)
}

/// ELS-TSVM: LSTSVM with energy targets `e2` (plane 1) and `e1` (plane 2)
/// and the ratio rule.
pub fn fit_elstsvm(a: &Matrix, b: &Matrix, params: &SolverParams, spec: &KernelSpec) -> Result<TwinModel> {
    fit_as(a, b, params, Formulation::Elstsvm, spec)
}

/// RELS-TSVM: ELS-TSVM plus `c3/2 |z1|^2` and `c4/2 |z2|^2`.
pub fn fit_relstsvm(a: &Matrix, b: &Matrix, params: &SolverParams, spec: &KernelSpec) -> Result<TwinModel> {
    fit_as(a, b, params, Formulation::Relstsvm, spec)
}

/// Fuzzy-weighted RELS-TSVM. `s1` weights the rows of `a` (in plane 2's
/// slack), `s2` the rows of `b` (in plane 1's slack). Penalties are `c1`,
/// `c3`; regularizers `c2`, `c4`.
pub fn fit_weighted(
    a: &Matrix,
    b: &Matrix,
    s1: &[f64],
    s2: &[f64],
    params: &SolverParams,
    spec: &KernelSpec,
) -> Result<TwinModel> {
    fit_weighted_traced(a, b, s1, s2, params, spec).map(|(m, _)| m)
}

pub fn fit_weighted_traced(
    a: &Matrix,
    b: &Matrix,
    s1: &[f64],
    s2: &[f64],
    params: &SolverParams,
    spec: &KernelSpec,
) -> Result<(TwinModel, FitTrace)> {
    let params = SolverParams {
        formulation: Formulation::WeightedRelstsvm,
        ..*params
    };
    let design = TwinDesign::new(a, b, spec)?;
    fit_design(&design, &params, Some((s1, s2)), 0.0)
}

/// System matrices of the weighted model scaled by `1/c1` and `1/c3`:
/// `G^T G / c1 + (S2 H)^T (S2 H) + (c2 / c1) I` and
/// `H^T H / c3 + (S1 G)^T (S1 G) + (c4 / c3) I`.
pub fn weighted_system_matrices(
    design: &TwinDesign,
    s1: &[f64],
    s2: &[f64],
    params: &SolverParams,
) -> Result<[Matrix; 2]> {
    params.validate()?;
    check_weights(s1, design.g.rows(), 0)?;
    check_weights(s2, design.h.rows(), design.g.rows())?;
    let build = |own: &Matrix, other: &Matrix, s: &[f64], pen: f64, reg: f64| {
        let mut m = own.gram();
        m.scale(1.0 / pen);
        m.add_scaled(1.0, &other.scale_rows(s).gram());
        m.add_diagonal(reg / pen);
        m
    };
    Ok([
        build(&design.g, &design.h, s2, params.c1, params.c2),
        build(&design.h, &design.g, s1, params.c3, params.c4),
    ])
}

/// True if `m` admits a Cholesky factorization.
pub fn is_positive_definite(m: &Matrix) -> bool {
    Cholesky::factor(m).is_ok()
}
