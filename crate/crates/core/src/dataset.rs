//! Binary datasets, class statistics, the crossplane generator and
//! stratified partitioning.
//!
//! Throughout the crate the `+1` class is matrix `A` and the `-1` class is
//! matrix `B`. Loaders map the majority class to `+1`.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn from_sign(v: f64) -> Label {
        if v >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_i8() as f64
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;

    fn try_from(v: i8) -> Result<Label> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(Error::InvalidParameter {
                name: "label",
                value: other as f64,
            }),
        }
    }
}

/// Samples in rows with one `+1`/`-1` label each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<Label>,
    name: String,
}

impl Dataset {
    /// Checks that the label count matches the row count and that every
    /// feature is finite. Single-class datasets are accepted here and
    /// rejected by the operations that need both classes.
    pub fn new(name: impl Into<String>, features: Matrix, labels: Vec<Label>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Shape {
                context: "label count vs feature rows",
                expected: features.rows(),
                found: labels.len(),
            });
        }
        for (row, r) in features.iter_rows().enumerate() {
            if let Some(col) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(Dataset {
            features,
            labels,
            name: name.into(),
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn class_stats(&self) -> Result<ClassStats> {
        class_stats(self)
    }

    /// Rows `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            name: self.name.clone(),
        }
    }

    /// Replaces the features, keeping labels and name.
    pub fn with_features(&self, features: Matrix) -> Result<Dataset> {
        Dataset::new(self.name.clone(), features, self.labels.clone())
    }

    /// Replaces the labels, keeping features and name.
    pub fn with_labels(&self, labels: Vec<Label>) -> Result<Dataset> {
        Dataset::new(self.name.clone(), self.features.clone(), labels)
    }

    /// Row indices of the `+1` and `-1` classes, in dataset order.
    pub fn class_indices(&self) -> (Vec<usize>, Vec<usize>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            match l {
                Label::Positive => pos.push(i),
                Label::Negative => neg.push(i),
            }
        }
        (pos, neg)
    }

    /// Splits into `A` (`+1` rows) and `B` (`-1` rows).
    pub fn split_classes(&self) -> ClassSplit {
        let (pos, neg) = self.class_indices();
        ClassSplit {
            a: self.features.select_rows(&pos),
            b: self.features.select_rows(&neg),
            a_index: pos,
            b_index: neg,
        }
    }
}

/// Class matrices with the dataset row each of their rows came from.
#[derive(Debug, Clone)]
pub struct ClassSplit {
    pub a: Matrix,
    pub b: Matrix,
    pub a_index: Vec<usize>,
    pub b_index: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStats {
    pub p: usize,
    pub q: usize,
    /// `max(p, q) / min(p, q)`.
    pub ir: f64,
    /// Label of the larger class; `+1` on a tie.
    pub majority_label: Label,
}

impl ClassStats {
    pub fn minority_label(&self) -> Label {
        self.majority_label.flip()
    }
}

pub fn class_stats(d: &Dataset) -> Result<ClassStats> {
    let p = d.labels.iter().filter(|&&l| l == Label::Positive).count();
    let q = d.len() - p;
    if p == 0 {
        return Err(Error::DegenerateDataset("no +1 samples"));
    }
    if q == 0 {
        return Err(Error::DegenerateDataset("no -1 samples"));
    }
    let (hi, lo) = (p.max(q), p.min(q));
    Ok(ClassStats {
        p,
        q,
        ir: hi as f64 / lo as f64,
        majority_label: if p >= q {
            Label::Positive
        } else {
            Label::Negative
        },
    })
}

/// Line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Two noisy lines crossing inside the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossplaneConfig {
    pub n_pos: usize,
    pub n_neg: usize,
    /// Half-width of the uniform noise added to `y`.
    pub noise: f64,
    pub seed: u64,
    pub x_min: f64,
    pub x_max: f64,
    pub positive_line: Line,
    pub negative_line: Line,
}

impl CrossplaneConfig {
    pub fn new(n_pos: usize, n_neg: usize, noise: f64, seed: u64) -> Self {
        CrossplaneConfig {
            n_pos,
            n_neg,
            noise,
            seed,
            x_min: 0.0,
            x_max: 1.0,
            positive_line: Line {
                slope: -0.6,
                intercept: 1.0,
            },
            negative_line: Line {
                slope: 0.7,
                intercept: 0.1,
            },
        }
    }

    pub fn generate(&self) -> Result<Dataset> {
        if self.n_pos == 0 || self.n_neg == 0 {
            return Err(Error::DegenerateDataset("crossplane needs both classes"));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::InvalidParameter {
                name: "noise",
                value: self.noise,
            });
        }
        if !(self.x_max > self.x_min) {
            return Err(Error::InvalidParameter {
                name: "x_max",
                value: self.x_max,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let m = self.n_pos + self.n_neg;
        let mut data = Vec::with_capacity(2 * m);
        let mut labels = Vec::with_capacity(m);
        let width = self.x_max - self.x_min;
        for (count, line, label) in [
            (self.n_pos, self.positive_line, Label::Positive),
            (self.n_neg, self.negative_line, Label::Negative),
        ] {
            for _ in 0..count {
                let x = self.x_min + width * rng.gen::<f64>();
                let eps = if self.noise > 0.0 {
                    self.noise * (2.0 * rng.gen::<f64>() - 1.0)
                } else {
                    0.0
                };
                data.push(x);
                data.push(line.at(x) + eps);
                labels.push(label);
            }
        }
        let features = Matrix::from_vec(m, 2, data)?;
        let name = alloc::format!("crossplane{m}");
        Dataset::new(name, features, labels)
    }
}

/// Crossplane data on `x in [0, 1]`: `+1` on `y = -0.6x + 1`, `-1` on
/// `y = 0.7x + 0.1`, each `y` perturbed by uniform noise in
/// `[-noise, noise]`. Positives come first.
pub fn generate_crossplane(n_pos: usize, n_neg: usize, noise: f64, seed: u64) -> Result<Dataset> {
    CrossplaneConfig::new(n_pos, n_neg, noise, seed).generate()
}

/// Fold number of every sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub fold_index: Vec<usize>,
    pub k: usize,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_index.len())
            .filter(|&i| self.fold_index[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_index.len())
            .filter(|&i| self.fold_index[i] != fold)
            .collect()
    }
}

/// Shuffles each class with a seeded generator and deals it round-robin into
/// `k` folds. The dealing position carries over from the `+1` class to the
/// `-1` class so fold sizes stay within one of each other.
pub fn stratified_kfold(d: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidParameter {
            name: "folds",
            value: k as f64,
        });
    }
    let (pos, neg) = d.class_indices();
    for (label, idx) in [(1i8, &pos), (-1i8, &neg)] {
        if idx.len() < k {
            return Err(Error::Stratification {
                label,
                count: idx.len(),
                folds: k,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_index = alloc::vec![0; d.len()];
    let mut offset = 0;
    for mut idx in [pos, neg] {
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            fold_index[i] = (offset + j) % k;
        }
        offset = (offset + idx.len()) % k;
    }
    Ok(FoldAssignment { fold_index, k })
}

/// Stratified holdout split: `train_fraction` of each class (rounded, and
/// keeping at least one sample on each side) goes to training.
pub fn train_test_split(
    d: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter {
            name: "train_fraction",
            value: train_fraction,
        });
    }
    let (pos, neg) = d.class_indices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut idx) in [(1i8, pos), (-1i8, neg)] {
        if idx.len() < 2 {
            return Err(Error::Stratification {
                label,
                count: idx.len(),
                folds: 2,
            });
        }
        idx.shuffle(&mut rng);
        let n_train = libm::round(train_fraction * idx.len() as f64) as usize;
        let n_train = n_train.clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Per-column affine map onto `[0, 1]`, fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    range: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: &Matrix) -> MinMaxScaler {
        let n = x.cols();
        let mut lo = alloc::vec![f64::INFINITY; n];
        let mut hi = alloc::vec![f64::NEG_INFINITY; n];
        for r in x.iter_rows() {
            for j in 0..n {
                lo[j] = lo[j].min(r[j]);
                hi[j] = hi[j].max(r[j]);
            }
        }
        let range = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
        MinMaxScaler { min: lo, range }
    }

    /// Constant columns map to 0.
    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = if self.range[j] > 0.0 {
                    (*v - self.min[j]) / self.range[j]
                } else {
                    0.0
                };
            }
        }
        out
    }
}
