//! Fuzzy membership weights for the weighted solver.
//!
//! Two schemes are provided. Intuitionistic fuzzy memberships (IFMA) combine a
//! membership degree from the distance to the class center in feature space
//! with a non-membership degree from the share of opposite-class neighbors.
//! Projection-based memberships (PFMA) score each sample by its distance to
//! its own class's proximal plane. Either score is turned into weights by
//! multiplying minority-class scores by the imbalance ratio.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{class_stats, Dataset, Label};
use crate::error::{Error, Result};
use crate::kernel::{gram, gram_self, KernelSpec};
use crate::matrix::{dot, norm, Matrix};
use crate::solver::{fit_design, Formulation, SolverParams, TwinDesign};

/// Membership `mu` and non-membership `nu` per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct IfNumbers {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightScheme {
    Ifma,
    Pfma,
}

/// Per-sample weights: `s1` for the `+1` rows (matrix `A`), `s2` for the `-1`
/// rows (matrix `B`), each in dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyWeights {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub scheme: WeightScheme,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfmaParams {
    /// Cushion added to the class radius.
    pub delta: f64,
    /// Neighborhood radius in feature space; `None` uses the median pairwise
    /// feature-space distance.
    pub gamma: Option<f64>,
}

impl Default for IfmaParams {
    fn default() -> Self {
        IfmaParams {
            delta: 1e-4,
            gamma: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Normalization {
    /// Min/max over all training samples.
    Global,
    /// Min/max within each class.
    PerClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlaneNorm {
    /// `|w|` of the coefficient vector.
    Euclidean,
    /// `sqrt(w^T K w)` over the kernel basis; equals `Euclidean` for the
    /// linear kernel.
    Rkhs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfmaParams {
    /// Ridge added to both inner plane systems.
    pub delta: f64,
    pub normalization: Normalization,
    pub plane_norm: PlaneNorm,
}

impl Default for PfmaParams {
    fn default() -> Self {
        PfmaParams {
            delta: 1e-4,
            normalization: Normalization::Global,
            plane_norm: PlaneNorm::Euclidean,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, value: v })
    }
}

/// Squared feature-space distance between samples `i` and `j`.
#[inline]
fn feature_dist2(k: &Matrix, i: usize, j: usize) -> f64 {
    (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(0.0)
}

/// Membership from a precomputed Gram matrix `k = K(X, X^T)`.
pub fn ifma_membership_from_gram(labels: &[Label], k: &Matrix, delta: f64) -> Result<Vec<f64>> {
    positive("delta", delta)?;
    if k.rows() != labels.len() || k.cols() != labels.len() {
        return Err(Error::Shape {
            context: "gram matrix size vs label count",
            expected: labels.len(),
            found: k.rows(),
        });
    }
    let mut mu = vec![0.0; labels.len()];
    for class in [Label::Positive, Label::Negative] {
        let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            return Err(Error::DegenerateDataset("IFMA needs both classes"));
        }
        let l = idx.len() as f64;
        let mut row_sums = Vec::with_capacity(idx.len());
        let mut total = 0.0;
        for &i in &idx {
            let s: f64 = idx.iter().map(|&j| k[(i, j)]).sum();
            total += s;
            row_sums.push(s);
        }
        let center_term = total / (l * l);
        let dist: Vec<f64> = idx
            .iter()
            .zip(&row_sums)
            .map(|(&i, s)| libm::sqrt((k[(i, i)] - 2.0 * s / l + center_term).max(0.0)))
            .collect();
        let radius = dist.iter().cloned().fold(0.0, f64::max);
        for (&i, d) in idx.iter().zip(&dist) {
            mu[i] = 1.0 - d / (radius + delta);
        }
    }
    Ok(mu)
}

/// `mu_i = 1 - |phi(x_i) - center| / (radius + delta)` per class, with all
/// distances taken in the kernel-induced feature space.
pub fn ifma_membership(d: &Dataset, spec: &KernelSpec, delta: f64) -> Result<Vec<f64>> {
    let k = gram_self(d.features(), spec)?;
    ifma_membership_from_gram(d.labels(), &k, delta)
}

/// Median feature-space distance over all unordered sample pairs.
pub fn median_pairwise_distance(k: &Matrix) -> f64 {
    let m = k.rows();
    let mut d: Vec<f64> = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            d.push(libm::sqrt(feature_dist2(k, i, j)));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    let n = d.len();
    let (lower, &mut upper_mid, _) = d.select_nth_unstable_by(n / 2, f64::total_cmp);
    if n % 2 == 1 {
        upper_mid
    } else {
        let lower_mid = lower.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_mid + upper_mid)
    }
}

/// Non-membership from a precomputed Gram matrix.
pub fn ifma_nonmembership_from_gram(
    labels: &[Label],
    k: &Matrix,
    gamma: f64,
    mu: &[f64],
) -> Result<Vec<f64>> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            value: gamma,
        });
    }
    if mu.len() != labels.len() {
        return Err(Error::Shape {
            context: "membership length",
            expected: labels.len(),
            found: mu.len(),
        });
    }
    let g2 = gamma * gamma;
    let m = labels.len();
    Ok((0..m)
        .map(|i| {
            let mut all = 0usize;
            let mut hetero = 0usize;
            for j in 0..m {
                if j == i || feature_dist2(k, i, j) <= g2 {
                    all += 1;
                    if labels[j] != labels[i] {
                        hetero += 1;
                    }
                }
            }
            (1.0 - mu[i]) * (hetero as f64 / all as f64)
        })
        .collect())
}

/// `nu_i = (1 - mu_i) * rho_i`, where `rho_i` is the share of opposite-class
/// samples among all samples (self included) within `gamma` of `x_i` in
/// feature space.
pub fn ifma_nonmembership(d: &Dataset, spec: &KernelSpec, gamma: f64, mu: &[f64]) -> Result<Vec<f64>> {
    positive("gamma", gamma)?;
    let k = gram_self(d.features(), spec)?;
    ifma_nonmembership_from_gram(d.labels(), &k, gamma, mu)
}

/// Intuitionistic score of one `(mu, nu)` pair.
pub fn if_score(mu: f64, nu: f64) -> f64 {
    if nu == 0.0 {
        mu
    } else if mu <= nu {
        0.0
    } else {
        (1.0 - nu) / (2.0 - mu - nu)
    }
}

pub fn ifma_score(numbers: &IfNumbers) -> Vec<f64> {
    numbers
        .mu
        .iter()
        .zip(&numbers.nu)
        .map(|(&m, &n)| if_score(m, n))
        .collect()
}

/// Everything IFMA computes for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct IfmaOutput {
    pub numbers: IfNumbers,
    pub scores: Vec<f64>,
    pub gamma: f64,
}

/// Full IFMA pipeline from a precomputed Gram matrix.
pub fn ifma_from_gram(labels: &[Label], k: &Matrix, params: &IfmaParams) -> Result<IfmaOutput> {
    let gamma = match params.gamma {
        Some(g) => {
            positive("gamma", g)?;
            g
        }
        None => median_pairwise_distance(k),
    };
    let mu = ifma_membership_from_gram(labels, k, params.delta)?;
    let nu = ifma_nonmembership_from_gram(labels, k, gamma, &mu)?;
    let numbers = IfNumbers { mu, nu };
    let scores = ifma_score(&numbers);
    Ok(IfmaOutput {
        numbers,
        scores,
        gamma,
    })
}

pub fn ifma(d: &Dataset, spec: &KernelSpec, params: &IfmaParams) -> Result<IfmaOutput> {
    let k = gram_self(d.features(), spec)?;
    ifma_from_gram(d.labels(), &k, params)
}

/// `S_i = score_i` on the majority class, `IR * score_i` on the minority
/// class.
pub fn weights_from_scores(scores: &[f64], d: &Dataset, scheme: WeightScheme) -> Result<FuzzyWeights> {
    if scores.len() != d.len() {
        return Err(Error::Shape {
            context: "score count",
            expected: d.len(),
            found: scores.len(),
        });
    }
    let stats = class_stats(d)?;
    let mut s1 = Vec::with_capacity(stats.p);
    let mut s2 = Vec::with_capacity(stats.q);
    for (i, (&s, &l)) in scores.iter().zip(d.labels()).enumerate() {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidWeight { index: i, value: s });
        }
        let w = if l == stats.majority_label { s } else { stats.ir * s };
        match l {
            Label::Positive => s1.push(w),
            Label::Negative => s2.push(w),
        }
    }
    Ok(FuzzyWeights { s1, s2, scheme })
}

/// Plane distances and scores from PFMA, in dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmaOutput {
    pub distances: Vec<f64>,
    pub scores: Vec<f64>,
}

/// Maps distances onto `[1/e, 1]` with `exp(-(d - d_min) / (d_max - d_min))`.
/// If all distances are equal every score is 1.
pub fn pfma_normalize(distances: &[f64]) -> Vec<f64> {
    let lo = distances.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = distances.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    distances
        .iter()
        .map(|&d| {
            if span > 0.0 {
                // clamp keeps the bound exact under rounding
                libm::exp(-((d - lo) / span).clamp(0.0, 1.0))
            } else {
                1.0
            }
        })
        .collect()
}

/// PFMA. ELS-TSVM planes are fitted with `delta * I` added to both systems
/// (`inner` supplies `c1`, `c2`, `e1`, `e2`); each sample's distance to its
/// own class's plane is `|f(x)| / |w|`, and distances are normalized with
/// [`pfma_normalize`], globally or per class.
pub fn pfma(d: &Dataset, spec: &KernelSpec, inner: &SolverParams, params: &PfmaParams) -> Result<PfmaOutput> {
    positive("delta", params.delta)?;
    let split = d.split_classes();
    let design = TwinDesign::new(&split.a, &split.b, spec)?;
    let inner = SolverParams {
        formulation: Formulation::Elstsvm,
        ..*inner
    };
    let (model, _) = fit_design(&design, &inner, None, params.delta)?;

    let basis_gram = match (params.plane_norm, &design.basis) {
        (PlaneNorm::Rkhs, Some(c)) => Some(gram(c, c, spec)?),
        _ => None,
    };
    let plane_norm = |w: &[f64]| match &basis_gram {
        Some(k) => libm::sqrt(dot(w, &k.mul_vec(w)).max(0.0)),
        None => norm(w),
    };

    let mut distances = vec![0.0; d.len()];
    for (rows, idx, w, b) in [
        (&design.g, &split.a_index, &model.w1, model.b1),
        (&design.h, &split.b_index, &model.w2, model.b2),
    ] {
        let wn = plane_norm(w);
        if wn > 0.0 {
            for (r, &i) in rows.iter_rows().zip(idx) {
                let f = dot(&r[..w.len()], w) + b;
                distances[i] = libm::fabs(f) / wn;
            }
        }
    }

    let scores = match params.normalization {
        Normalization::Global => pfma_normalize(&distances),
        Normalization::PerClass => {
            let mut scores = vec![0.0; d.len()];
            for idx in [&split.a_index, &split.b_index] {
                let local: Vec<f64> = idx.iter().map(|&i| distances[i]).collect();
                for (&i, h) in idx.iter().zip(pfma_normalize(&local)) {
                    scores[i] = h;
                }
            }
            scores
        }
    };
    Ok(PfmaOutput { distances, scores })
}

pub fn pfma_scores(d: &Dataset, spec: &KernelSpec, inner: &SolverParams, params: &PfmaParams) -> Result<Vec<f64>> {
    pfma(d, spec, inner, params).map(|o| o.scores)
}
