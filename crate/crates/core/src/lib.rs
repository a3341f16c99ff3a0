//! Least-squares twin support vector machines for imbalanced binary
//! classification.
//!
//! The crate covers the LSTSVM family (LSTSVM, ELS-TSVM, RELS-TSVM) and the
//! fuzzy-weighted RELS-TSVM trained with either intuitionistic fuzzy
//! memberships (IF-RELSTSVM) or projection-based memberships (F-RELSTSVM),
//! plus the evaluation machinery used to compare them: balanced-accuracy AUC,
//! stratified cross-validated grid search, and Friedman/Nemenyi rank
//! statistics.
//!
//! Everything here is pure computation over in-memory data and builds without
//! `std`; file formats and the command-line runner live in the `twinsvm`
//! crate.

#![no_std]
// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod kernel;
pub mod matrix;
pub mod membership;
pub mod numerics;
pub mod pipeline;
pub mod solver;

pub use dataset::{ClassStats, Dataset, FoldAssignment, Label};
pub use error::{Error, Result};
pub use kernel::{KernelFamily, KernelSpec};
pub use matrix::Matrix;
pub use membership::{FuzzyWeights, IfNumbers, IfmaParams, PfmaParams};
pub use pipeline::{Hyperparams, ModelKind};
pub use solver::{DecisionRule, Formulation, SolverParams, TwinModel};

