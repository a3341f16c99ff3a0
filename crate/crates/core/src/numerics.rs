//! Dense symmetric positive-definite solves.
//!
//! Every plane in the twin-SVM family is the solution of a system of the form
//!
//! ```text
//! (ridge * I + sum_k c_k * U_k^T U_k) x = rhs
//! ```
//!
//! where each `U_k` holds the (augmented, possibly weighted) rows of one
//! class. [`LowRankSystem`] solves it either by assembling the `d x d` matrix
//! and factoring it, or through nested Sherman-Morrison-Woodbury updates that
//! only factor `t_k x t_k` capacitance matrices. The Woodbury route is an exact
//! identity, not an approximation; both paths agree to rounding.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};

/// Woodbury updates are used when the largest block has fewer rows than this
/// fraction of the full dimension.
pub const WOODBURY_THRESHOLD: f64 = 0.8;

/// Residual accepted from the Woodbury route, relative to
/// `||M|| ||x|| + ||rhs||`.
pub const WOODBURY_RESIDUAL: f64 = 64.0 * f64::EPSILON;

/// Refinement steps attempted on the Woodbury route.
pub const REFINEMENT_STEPS: usize = 3;

/// Relative residual accepted by [`spd_solve`].
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Lower-triangular Cholesky factor `M = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors a symmetric matrix, reading only its lower triangle.
    ///
    /// Pivots that are not finite, or not larger than `dim * eps` times the
    /// largest diagonal entry, are treated as a breakdown and reported with
    /// the 1-based index of the offending leading minor.
    pub fn factor(m: &Matrix) -> Result<Self> {
        let n = m.rows();
        if m.cols() != n {
            return Err(Error::Shape {
                context: "cholesky on non-square matrix",
                expected: n,
                found: m.cols(),
            });
        }
        let max_diag = (0..n).map(|i| m[(i, i)]).fold(0.0, f64::max);
        let floor = (n.max(1) as f64) * f64::EPSILON * max_diag;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let row_j = j * n;
            let mut pivot = m[(j, j)];
            for k in 0..j {
                pivot -= l[row_j + k] * l[row_j + k];
            }
            if !pivot.is_finite() || pivot <= floor {
                return Err(Error::NotPositiveDefinite { minor: j + 1 });
            }
            let diag = libm::sqrt(pivot);
            l[row_j + j] = diag;
            for i in (j + 1)..n {
                let row_i = i * n;
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[row_i + k] * l[row_j + k];
                }
                l[row_i + j] = s / diag;
            }
        }
        Ok(Cholesky { dim: n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim;
        debug_assert_eq!(x.len(), n);
        let l = &self.lower;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
    }

    /// Ratio of the largest to smallest diagonal of `L`, squared: a cheap
    /// lower bound on the 2-norm condition number.
    pub fn condition_lower_bound(&self) -> f64 {
        let n = self.dim;
        let (lo, hi) = (0..n)
            .map(|i| self.lower[i * n + i])
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let r = hi / lo;
        r * r
    }
}

/// A symmetric, intended positive-definite system `matrix * x = rhs`.
#[derive(Debug, Clone)]
pub struct SpdSystem {
    pub matrix: Matrix,
    pub rhs: Vec<f64>,
}

/// Solves an SPD system with one step of iterative refinement, checking that
/// the relative residual stays within [`RESIDUAL_TOLERANCE`].
pub fn spd_solve(sys: &SpdSystem) -> Result<Vec<f64>> {
    let m = &sys.matrix;
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::Shape {
            context: "spd_solve matrix must be square",
            expected: n,
            found: m.cols(),
        });
    }
    if sys.rhs.len() != n {
        return Err(Error::Shape {
            context: "spd_solve rhs length",
            expected: n,
            found: sys.rhs.len(),
        });
    }
    let scale = m.as_slice().iter().fold(0.0_f64, |a, &v| a.max(libm::fabs(v)));
    let mut asym = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max(libm::fabs(m[(i, j)] - m[(j, i)]));
        }
    }
    if asym > 1e-10 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }

    let chol = Cholesky::factor(m)?;
    let mut x = chol.solve(&sys.rhs);
    let residual = |x: &[f64]| -> Vec<f64> {
        m.mul_vec(x)
            .iter()
            .zip(&sys.rhs)
            .map(|(mx, b)| b - mx)
            .collect()
    };
    let dx = chol.solve(&residual(&x));
    x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);

    let rhs_norm = norm(&sys.rhs);
    let res_norm = norm(&residual(&x));
    if rhs_norm == 0.0 {
        return if res_norm == 0.0 {
            Ok(x)
        } else {
            Err(Error::IllConditioned {
                relative_residual: f64::INFINITY,
            })
        };
    }
    let rel = res_norm / rhs_norm;
    if !(rel <= RESIDUAL_TOLERANCE) {
        return Err(Error::IllConditioned {
            relative_residual: rel,
        });
    }
    Ok(x)
}

/// Which route a [`LowRankSystem`] solve took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvePath {
    Direct,
    Woodbury,
}

/// Record of the factorizations performed by a solve, innermost first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveTrace {
    pub path: SolvePath,
    pub factorizations: Vec<usize>,
}

impl SolveTrace {
    pub fn used_woodbury(&self) -> bool {
        self.path == SolvePath::Woodbury
    }
}

/// `(ridge * I + sum_k coeff_k * U_k^T U_k) x = rhs`.
///
/// Blocks are applied in order on the Woodbury path: the first block is the
/// innermost update of `ridge * I`.
#[derive(Debug, Clone)]
pub struct LowRankSystem<'a> {
    pub dim: usize,
    pub ridge: f64,
    pub blocks: Vec<(f64, &'a Matrix)>,
}

impl<'a> LowRankSystem<'a> {
    pub fn new(dim: usize, ridge: f64) -> Self {
        LowRankSystem {
            dim,
            ridge,
            blocks: Vec::new(),
        }
    }

    pub fn with_block(mut self, coeff: f64, u: &'a Matrix) -> Self {
        self.blocks.push((coeff, u));
        self
    }

    fn check(&self) -> Result<()> {
        for &(c, u) in &self.blocks {
            if u.cols() != self.dim {
                return Err(Error::Shape {
                    context: "low-rank block width",
                    expected: self.dim,
                    found: u.cols(),
                });
            }
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "block coefficient",
                    value: c,
                });
            }
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::InvalidParameter {
                name: "ridge",
                value: self.ridge,
            });
        }
        Ok(())
    }

    /// The full `d x d` matrix.
    pub fn assemble(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.dim);
        for &(c, u) in &self.blocks {
            m.add_scaled(c, &u.gram());
        }
        m.add_diagonal(self.ridge);
        m
    }

    /// True when the dispatch rule selects the Woodbury route.
    pub fn prefers_woodbury(&self) -> bool {
        let widest = self.blocks.iter().map(|(_, u)| u.rows()).max().unwrap_or(0);
        self.ridge > 0.0 && (widest as f64) < WOODBURY_THRESHOLD * self.dim as f64
    }

    /// Dispatches on [`LowRankSystem::prefers_woodbury`]. A Woodbury solution
    /// whose residual stays above [`WOODBURY_RESIDUAL`] after refinement (tiny
    /// ridges make the identity lose digits) is replaced by a direct solve.
    pub fn solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, SolveTrace)> {
        if self.prefers_woodbury() {
            match self.woodbury_refined(rhs) {
                Ok((x, trace, true)) => return Ok((x, trace)),
                Ok(_) | Err(Error::NotPositiveDefinite { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        self.solve_direct(rhs)
    }

    /// `M x` without forming `M`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = x.iter().map(|v| self.ridge * v).collect();
        for &(c, u) in &self.blocks {
            let ux = u.mul_vec(x);
            for (row, uxj) in u.iter_rows().zip(&ux) {
                let s = c * uxj;
                for (o, r) in out.iter_mut().zip(row) {
                    *o += s * r;
                }
            }
        }
        out
    }

    /// Cheap upper bound on `||M||_2`.
    fn norm_bound(&self) -> f64 {
        self.ridge
            + self
                .blocks
                .iter()
                .map(|(c, u)| c * u.as_slice().iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
    }

    pub fn solve_direct(&self, rhs: &[f64]) -> Result<(Vec<f64>, SolveTrace)> {
        self.check()?;
        self.check_rhs(rhs)?;
        let m = self.assemble();
        let chol = Cholesky::factor(&m)?;
        let mut x = chol.solve(rhs);
        // one refinement step against the assembled matrix
        let r: Vec<f64> = m
            .mul_vec(&x)
            .iter()
            .zip(rhs)
            .map(|(mx, b)| b - mx)
            .collect();
        let dx = chol.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        Ok((
            x,
            SolveTrace {
                path: SolvePath::Direct,
                factorizations: vec![self.dim],
            },
        ))
    }

    pub fn solve_woodbury(&self, rhs: &[f64]) -> Result<(Vec<f64>, SolveTrace)> {
        self.check()?;
        self.check_rhs(rhs)?;
        if !(self.ridge > 0.0) {
            return Err(Error::InvalidParameter {
                name: "ridge",
                value: self.ridge,
            });
        }
        self.woodbury_refined(rhs).map(|(x, t, _)| (x, t))
    }

    /// Woodbury solve plus up to [`REFINEMENT_STEPS`] refinement steps; the
    /// flag reports whether the residual met [`WOODBURY_RESIDUAL`].
    fn woodbury_refined(&self, rhs: &[f64]) -> Result<(Vec<f64>, SolveTrace, bool)> {
        let inverse = WoodburyInverse::build(self)?;
        let mut x = inverse.apply(rhs);
        let scale = self.norm_bound();
        let rhs_norm = norm(rhs);
        let mut converged = false;
        for step in 0..=REFINEMENT_STEPS {
            let r: Vec<f64> = rhs.iter().zip(self.apply(&x)).map(|(b, mx)| b - mx).collect();
            let tol = WOODBURY_RESIDUAL * (scale * norm(&x) + rhs_norm);
            if norm(&r) <= tol || !x.iter().all(|v| v.is_finite()) {
                converged = x.iter().all(|v| v.is_finite());
                break;
            }
            if step == REFINEMENT_STEPS {
                break;
            }
            let dx = inverse.apply(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        }
        Ok((
            x,
            SolveTrace {
                path: SolvePath::Woodbury,
                factorizations: inverse.levels.iter().map(|l| l.cap.dim()).collect(),
            },
            converged,
        ))
    }

    fn check_rhs(&self, rhs: &[f64]) -> Result<()> {
        if rhs.len() != self.dim {
            return Err(Error::Shape {
                context: "rhs length",
                expected: self.dim,
                found: rhs.len(),
            });
        }
        Ok(())
    }
}

struct WoodburyLevel {
    // row j holds B^{-1} u_j for the operator B below this level
    w_t: Matrix,
    cap: Cholesky,
}

/// `(ridge I + sum_k c_k U_k^T U_k)^{-1}` applied level by level:
/// `(B + c U^T U)^{-1} r = B^{-1} r - W (I/c + U W)^{-1} W^T r`, `W = B^{-1} U^T`.
struct WoodburyInverse {
    ridge: f64,
    levels: Vec<WoodburyLevel>,
}

impl WoodburyInverse {
    fn build(sys: &LowRankSystem<'_>) -> Result<Self> {
        let mut inv = WoodburyInverse {
            ridge: sys.ridge,
            levels: Vec::with_capacity(sys.blocks.len()),
        };
        for &(c, u) in &sys.blocks {
            let t = u.rows();
            if t == 0 {
                continue;
            }
            let mut w_t = Matrix::zeros(t, sys.dim);
            for j in 0..t {
                let col = inv.apply(u.row(j));
                w_t.row_mut(j).copy_from_slice(&col);
            }
            let mut cap = u.matmul_t(&w_t)?;
            // symmetrize rounding noise before factoring
            for i in 0..t {
                for j in 0..i {
                    let v = 0.5 * (cap[(i, j)] + cap[(j, i)]);
                    cap[(i, j)] = v;
                    cap[(j, i)] = v;
                }
            }
            cap.add_diagonal(1.0 / c);
            let cap = Cholesky::factor(&cap)?;
            inv.levels.push(WoodburyLevel { w_t, cap });
        }
        Ok(inv)
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = r.iter().map(|v| v / self.ridge).collect();
        for level in &self.levels {
            let proj: Vec<f64> = level.w_t.iter_rows().map(|w| dot(w, r)).collect();
            let y = level.cap.solve(&proj);
            for (wj, yj) in level.w_t.iter_rows().zip(&y) {
                for (xi, wi) in x.iter_mut().zip(wj) {
                    *xi -= yj * wi;
                }
            }
        }
        x
    }
}

/// Solves `(diag_coeff * tall^T tall + ridge * I) x = rhs`.
///
/// Takes the Woodbury route (a `t x t` factorization) when `t` is below
/// [`WOODBURY_THRESHOLD`] times `d`, and the direct `d x d` route otherwise.
pub fn smw_solve(diag_coeff: f64, tall: &Matrix, ridge: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    smw_solve_traced(diag_coeff, tall, ridge, rhs).map(|(x, _)| x)
}

pub fn smw_solve_traced(
    diag_coeff: f64,
    tall: &Matrix,
    ridge: f64,
    rhs: &[f64],
) -> Result<(Vec<f64>, SolveTrace)> {
    if !(ridge > 0.0) {
        return Err(Error::InvalidParameter {
            name: "ridge",
            value: ridge,
        });
    }
    LowRankSystem::new(tall.cols(), ridge)
        .with_block(diag_coeff, tall)
        .solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        let data = (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix::from_vec(r, c, data).unwrap()
    }

    fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
        let a = random_matrix(rng, d + 3, d);
        let mut m = a.gram();
        m.add_diagonal(0.1);
        m
    }

    #[test]
    fn identity_and_scalar_systems() {
        let v = alloc::vec![1.0, -2.0, 3.5];
        let x = spd_solve(&SpdSystem {
            matrix: Matrix::identity(3),
            rhs: v.clone(),
        })
        .unwrap();
        assert_eq!(x, v);

        let mut two = Matrix::identity(3);
        two.add_diagonal(1.0);
        let x = spd_solve(&SpdSystem {
            matrix: two,
            rhs: v.clone(),
        })
        .unwrap();
        for (xi, vi) in x.iter().zip(&v) {
            assert!((xi - vi / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn random_spd_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_spd(&mut rng, 8);
        let rhs: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = spd_solve(&SpdSystem {
            matrix: m.clone(),
            rhs: rhs.clone(),
        })
        .unwrap();
        let r: Vec<f64> = m.mul_vec(&x).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        assert!(norm(&r) <= 1e-10 * norm(&rhs));
    }

    #[test]
    fn indefinite_matrix_names_minor() {
        let m = Matrix::from_rows(&[[4.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let err = Cholesky::factor(&m).unwrap_err();
        assert_eq!(err, Error::NotPositiveDefinite { minor: 2 });

        let neg = Matrix::from_rows(&[[-1.0]]).unwrap();
        assert_eq!(
            Cholesky::factor(&neg).unwrap_err(),
            Error::NotPositiveDefinite { minor: 1 }
        );
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let m = Matrix::from_rows(&[[2.0, 1.0], [0.0, 2.0]]).unwrap();
        let err = spd_solve(&SpdSystem {
            matrix: m,
            rhs: alloc::vec![1.0, 1.0],
        })
        .unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn zero_tall_matrix_is_pure_ridge() {
        let tall = Matrix::zeros(2, 10);
        let rhs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let (x, trace) = smw_solve_traced(3.0, &tall, 4.0, &rhs).unwrap();
        assert_eq!(trace.path, SolvePath::Woodbury);
        for (xi, ri) in x.iter().zip(&rhs) {
            assert!((xi - ri / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn smw_matches_direct_small_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tall = random_matrix(&mut rng, 5, 60);
        let rhs: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (x, trace) = smw_solve_traced(2.0, &tall, 0.5, &rhs).unwrap();
        assert_eq!(trace.factorizations, alloc::vec![5]);
        let (y, _) = LowRankSystem::new(60, 0.5)
            .with_block(2.0, &tall)
            .solve_direct(&rhs)
            .unwrap();
        let diff: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-9 * norm(&y));
    }

    #[test]
    fn wide_tall_falls_through_to_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let tall = random_matrix(&mut rng, 12, 6);
        let rhs = alloc::vec![1.0; 6];
        let (_, trace) = smw_solve_traced(1.0, &tall, 0.1, &rhs).unwrap();
        assert_eq!(trace.path, SolvePath::Direct);
        assert_eq!(trace.factorizations, alloc::vec![6]);
    }

    #[test]
    fn smw_rejects_nonpositive_ridge() {
        let tall = Matrix::zeros(1, 4);
        assert!(matches!(
            smw_solve(1.0, &tall, 0.0, &[0.0; 4]),
            Err(Error::InvalidParameter { name: "ridge", .. })
        ));
        assert!(smw_solve(1.0, &tall, -1.0, &[0.0; 4]).is_err());
    }

    #[test]
    fn nested_woodbury_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = 31;
        let u1 = random_matrix(&mut rng, 18, d);
        let u2 = random_matrix(&mut rng, 12, d);
        let rhs: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sys = LowRankSystem::new(d, 0.3)
            .with_block(1.0, &u1)
            .with_block(0.25, &u2);
        let (x, trace) = sys.solve_woodbury(&rhs).unwrap();
        assert_eq!(trace.factorizations, alloc::vec![18, 12]);
        let (y, _) = sys.solve_direct(&rhs).unwrap();
        let diff: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-9 * norm(&y), "diff {diff}");
    }
}
