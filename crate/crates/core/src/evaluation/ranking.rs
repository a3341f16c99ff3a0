use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Ranks one row of scores: the highest score gets rank 1 and exact ties
/// share the mean of the positions they cover.
pub fn rank_row(scores: &[f64]) -> Vec<f64> {
    let k = scores.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0.0; k];
    let mut start = 0;
    while start < k {
        let mut end = start + 1;
        while end < k && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &j in &order[start..end] {
            ranks[j] = shared;
        }
        start = end;
    }
    ranks
}

/// Per-dataset ranks of `k` algorithms over `N` datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    /// `N x k` scores the ranks came from; absent when built from ranks.
    pub scores: Option<Matrix>,
    /// `N x k` tie-averaged ranks.
    pub ranks: Matrix,
    /// Column means of `ranks`.
    pub avg_ranks: Vec<f64>,
}

impl RankTable {
    /// Wraps an existing rank matrix, checking that every row sums to
    /// `k (k + 1) / 2`.
    pub fn from_ranks(ranks: Matrix) -> Result<RankTable> {
        check_dims(&ranks)?;
        let k = ranks.cols() as f64;
        let expected = k * (k + 1.0) / 2.0;
        for (i, r) in ranks.iter_rows().enumerate() {
            let s: f64 = r.iter().sum();
            if libm::fabs(s - expected) > 1e-9 {
                return Err(Error::InvalidParameter {
                    name: "rank row sum",
                    value: i as f64,
                });
            }
        }
        let avg_ranks = column_means(&ranks);
        Ok(RankTable {
            scores: None,
            ranks,
            avg_ranks,
        })
    }

    pub fn n_datasets(&self) -> usize {
        self.ranks.rows()
    }

    pub fn n_algorithms(&self) -> usize {
        self.ranks.cols()
    }
}

fn check_dims(m: &Matrix) -> Result<()> {
    if m.rows() == 0 {
        return Err(Error::Empty("rank table"));
    }
    if m.cols() < 2 {
        return Err(Error::Shape {
            context: "ranking needs at least two algorithms",
            expected: 2,
            found: m.cols(),
        });
    }
    Ok(())
}

fn column_means(m: &Matrix) -> Vec<f64> {
    let mut s = vec![0.0; m.cols()];
    for r in m.iter_rows() {
        for (a, v) in s.iter_mut().zip(r) {
            *a += v;
        }
    }
    let n = m.rows() as f64;
    s.iter().map(|v| v / n).collect()
}

/// Ranks every row of an `N x k` score matrix (higher is better).
pub fn rank_table(scores: &Matrix) -> Result<RankTable> {
    check_dims(scores)?;
    for (row, r) in scores.iter_rows().enumerate() {
        if let Some(col) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
    }
    let mut ranks = Matrix::zeros(scores.rows(), scores.cols());
    for (i, r) in scores.iter_rows().enumerate() {
        ranks.row_mut(i).copy_from_slice(&rank_row(r));
    }
    let avg_ranks = column_means(&ranks);
    Ok(RankTable {
        scores: Some(scores.clone()),
        ranks,
        avg_ranks,
    })
}

/// Friedman statistic and its F-distributed refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FriedmanResult {
    pub chi2: f64,
    /// `+inf` when `chi2 = N (k - 1)`.
    pub ff: f64,
    pub dof1: usize,
    pub dof2: usize,
}

impl FriedmanResult {
    /// From average ranks over `n` datasets.
    pub fn from_average_ranks(avg_ranks: &[f64], n: usize) -> Result<FriedmanResult> {
        let k = avg_ranks.len();
        if k < 2 {
            return Err(Error::Shape {
                context: "ranking needs at least two algorithms",
                expected: 2,
                found: k,
            });
        }
        if n == 0 {
            return Err(Error::Empty("rank table"));
        }
        let (kf, nf) = (k as f64, n as f64);
        let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
        let chi2 = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0) * (kf + 1.0) / 4.0)).max(0.0);
        let denom = nf * (kf - 1.0) - chi2;
        let ff = if denom > 0.0 {
            (nf - 1.0) * chi2 / denom
        } else {
            f64::INFINITY
        };
        Ok(FriedmanResult {
            chi2,
            ff,
            dof1: k - 1,
            dof2: (k - 1) * (n - 1),
        })
    }
}

/// `chi2 = 12N / (k(k+1)) (sum_j R_j^2 - k(k+1)^2 / 4)` and
/// `F_F = (N-1) chi2 / (N(k-1) - chi2)` from unrounded average ranks.
pub fn friedman(rt: &RankTable) -> Result<FriedmanResult> {
    FriedmanResult::from_average_ranks(&rt.avg_ranks, rt.n_datasets())
}

/// `CD = q_alpha sqrt(k (k + 1) / (6 N))`.
pub fn nemenyi_cd(k: usize, n_datasets: usize, q_alpha: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k as f64,
        });
    }
    if n_datasets == 0 {
        return Err(Error::InvalidParameter {
            name: "n_datasets",
            value: 0.0,
        });
    }
    if !(q_alpha > 0.0 && q_alpha.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "q_alpha",
            value: q_alpha,
        });
    }
    let kf = k as f64;
    Ok(q_alpha * libm::sqrt(kf * (kf + 1.0) / (6.0 * n_datasets as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alpha {
    P05,
    P10,
}

// Studentized range statistic divided by sqrt(2), k = 2..=10.
const Q_05: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
const Q_10: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];

/// Nemenyi critical value for `k` algorithms, `k` in `2..=10`.
pub fn q_alpha(k: usize, alpha: Alpha) -> Option<f64> {
    let table = match alpha {
        Alpha::P05 => &Q_05,
        Alpha::P10 => &Q_10,
    };
    k.checked_sub(2).and_then(|i| table.get(i)).copied()
}

/// Pairs `(i, j)`, `i < j`, whose average ranks differ by more than `cd`.
pub fn significant_pairs(avg_ranks: &[f64], cd: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..avg_ranks.len() {
        for j in (i + 1)..avg_ranks.len() {
            if libm::fabs(avg_ranks[i] - avg_ranks[j]) > cd {
                out.push((i, j));
            }
        }
    }
    out
}
