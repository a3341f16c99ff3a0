//! Solver and pipeline checks against independent reference computations.

#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twinsvm_core::dataset::{class_stats, generate_crossplane, stratified_kfold};
use twinsvm_core::evaluation::ranking::{friedman, rank_row, RankTable};
use twinsvm_core::evaluation::{auc, cross_validate, fold_aucs, grid_search_cv, nemenyi_cd, Grids};
use twinsvm_core::kernel::{gram, KernelSpec};
use twinsvm_core::membership::{if_score, ifma_membership, ifma_nonmembership};
use twinsvm_core::numerics::SolvePath;
use twinsvm_core::pipeline::train;
use twinsvm_core::solver::{fit_elstsvm, fit_lstsvm, fit_relstsvm, fit_weighted, fit_weighted_traced};
use twinsvm_core::{Dataset, Hyperparams, KernelFamily, Label, Matrix, ModelKind, SolverParams, TwinModel};

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

fn planes(m: &TwinModel) -> (Vec<f64>, Vec<f64>) {
    let mut z1 = m.w1.clone();
    z1.push(m.b1);
    let mut z2 = m.w2.clone();
    z2.push(m.b2);
    (z1, z2)
}

/// Least squares `min |M z - t|` by Householder QR on the stacked rows.
fn householder_lstsq(rows: &[Vec<f64>], t: &[f64]) -> Vec<f64> {
    let n = rows[0].len();
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut b = t.to_vec();
    let m = a.len();
    for k in 0..n {
        let alpha = {
            let s: f64 = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
            if a[k][k] > 0.0 {
                -s
            } else {
                s
            }
        };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|x| x * x).sum();
        if vn == 0.0 {
            continue;
        }
        for j in k..n {
            let s: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum::<f64>() * 2.0 / vn;
            (k..m).for_each(|i| a[i][j] -= s * v[i - k]);
        }
        let s: f64 = (k..m).map(|i| v[i - k] * b[i]).sum::<f64>() * 2.0 / vn;
        (k..m).for_each(|i| b[i] -= s * v[i - k]);
    }
    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * z[j]).sum();
        z[k] = (b[k] - s) / a[k][k];
    }
    z
}

/// Plane minimizing `1/2 |own z|^2 + a/2 |S (other z + sign E)|^2 + r/2 |z|^2`
/// written as one stacked least-squares problem.
fn reference_plane(own: &Matrix, other: &Matrix, s: &[f64], a: f64, r: f64, energy: f64, sign: f64) -> Vec<f64> {
    let mut rows = Vec::new();
    let mut t = Vec::new();
    for row in own.iter_rows() {
        rows.push(row.to_vec());
        t.push(0.0);
    }
    for (row, &si) in other.iter_rows().zip(s) {
        let f = a.sqrt() * si;
        rows.push(row.iter().map(|v| f * v).collect());
        t.push(sign * f * energy);
    }
    let n = own.cols();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = r.sqrt();
        rows.push(e);
        t.push(0.0);
    }
    householder_lstsq(&rows, &t)
}

#[test]
fn closed_forms_match_least_squares_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..40 {
        let p = rng.gen_range(2..7);
        let q = rng.gen_range(2..7);
        let n = rng.gen_range(1..4);
        let a = random_matrix(&mut rng, p, n);
        let b = random_matrix(&mut rng, q, n);
        let ga = a.augment_ones();
        let hb = b.augment_ones();
        let ones_p = vec![1.0; p];
        let ones_q = vec![1.0; q];
        let (c1, c2, c3, c4) = (rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0), rng.gen_range(0.01..1.0), rng.gen_range(0.01..1.0));
        let (e1, e2) = (rng.gen_range(0.6..1.0), rng.gen_range(0.6..1.0));
        let spec = KernelSpec::linear();

        // plain least squares on the unregularized models needs a full-rank own block
        if p > n + 1 && q > n + 1 {
            let m = fit_lstsvm(&a, &b, &SolverParams::lstsvm(c1, c2), &spec).unwrap();
            let (z1, z2) = planes(&m);
            assert!(rel_err(&z1, &reference_plane(&ga, &hb, &ones_q, c1, 0.0, 1.0, -1.0)) < 1e-8, "trial {trial}");
            assert!(rel_err(&z2, &reference_plane(&hb, &ga, &ones_p, c2, 0.0, 1.0, 1.0)) < 1e-8, "trial {trial}");

            let m = fit_elstsvm(&a, &b, &SolverParams::elstsvm(c1, c2, e1, e2), &spec).unwrap();
            let (z1, z2) = planes(&m);
            assert!(rel_err(&z1, &reference_plane(&ga, &hb, &ones_q, c1, 0.0, e2, -1.0)) < 1e-8);
            assert!(rel_err(&z2, &reference_plane(&hb, &ga, &ones_p, c2, 0.0, e1, 1.0)) < 1e-8);
        }

        let m = fit_relstsvm(&a, &b, &SolverParams::relstsvm(c1, c2, c3, c4, e1, e2), &spec).unwrap();
        let (z1, z2) = planes(&m);
        assert!(rel_err(&z1, &reference_plane(&ga, &hb, &ones_q, c1, c3, e2, -1.0)) < 1e-8);
        assert!(rel_err(&z2, &reference_plane(&hb, &ga, &ones_p, c2, c4, e1, 1.0)) < 1e-8);

        let s1: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..2.0)).collect();
        let s2: Vec<f64> = (0..q).map(|_| rng.gen_range(0.0..2.0)).collect();
        let m = fit_weighted(&a, &b, &s1, &s2, &SolverParams::weighted(c1, c3, c2, c4, e1, e2), &spec).unwrap();
        let (z1, z2) = planes(&m);
        assert!(rel_err(&z1, &reference_plane(&ga, &hb, &s2, c1, c3, e2, -1.0)) < 1e-8);
        assert!(rel_err(&z2, &reference_plane(&hb, &ga, &s1, c2, c4, e1, 1.0)) < 1e-8);
    }
}

#[test]
fn kernel_closed_forms_match_least_squares_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_matrix(&mut rng, 5, 2);
    let b = random_matrix(&mut rng, 6, 2);
    let spec = KernelSpec::gaussian(0.5).unwrap();
    let basis = a.vstack(&b).unwrap();
    let g = gram(&a, &basis, &spec).unwrap().augment_ones();
    let h = gram(&b, &basis, &spec).unwrap().augment_ones();
    let m = fit_relstsvm(&a, &b, &SolverParams::relstsvm(2.0, 3.0, 0.1, 0.2, 0.7, 0.9), &spec).unwrap();
    let (z1, z2) = planes(&m);
    assert!(rel_err(&z1, &reference_plane(&g, &h, &[1.0; 6], 2.0, 0.1, 0.9, -1.0)) < 1e-8);
    assert!(rel_err(&z2, &reference_plane(&h, &g, &[1.0; 5], 3.0, 0.2, 0.7, 1.0)) < 1e-8);
}

#[test]
fn vanishing_regularizer_approaches_energy_model() {
    let d = generate_crossplane(12, 9, 0.1, 5).unwrap();
    let split = d.split_classes();
    let spec = KernelSpec::linear();
    let els = fit_elstsvm(&split.a, &split.b, &SolverParams::elstsvm(1.0, 2.0, 0.8, 0.7), &spec).unwrap();
    let rels = fit_relstsvm(&split.a, &split.b, &SolverParams::relstsvm(1.0, 2.0, 1e-10, 1e-10, 0.8, 0.7), &spec).unwrap();
    let (e1, e2) = planes(&els);
    let (r1, r2) = planes(&rels);
    assert!(rel_err(&r1, &e1) < 1e-6);
    assert!(rel_err(&r2, &e2) < 1e-6);
}

#[test]
fn weight_scale_trades_against_penalty() {
    let d = generate_crossplane(10, 14, 0.1, 6).unwrap();
    let split = d.split_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s1: Vec<f64> = (0..10).map(|_| rng.gen_range(0.1..1.5)).collect();
    let s2: Vec<f64> = (0..14).map(|_| rng.gen_range(0.1..1.5)).collect();
    for spec in [KernelSpec::linear(), KernelSpec::gaussian(0.5).unwrap()] {
        for c in [0.3, 2.0, 7.0] {
            let base = SolverParams::weighted(1.5, 0.2, 0.8, 0.3, 0.9, 0.7);
            let scaled_w: Vec<f64> = s2.iter().map(|v| c * v).collect();
            let m1 = fit_weighted(&split.a, &split.b, &s1, &scaled_w, &base, &spec).unwrap();
            let m2 = fit_weighted(&split.a, &split.b, &s1, &s2, &SolverParams { c1: c * c * base.c1, ..base }, &spec).unwrap();
            assert!(rel_err(&planes(&m1).0, &planes(&m2).0) < 1e-8);
        }
    }
}

#[test]
fn unit_weights_reduce_to_regularized_model() {
    let d = generate_crossplane(15, 15, 0.2, 2).unwrap();
    let split = d.split_classes();
    let ones = vec![1.0; 15];
    for spec in [KernelSpec::linear(), KernelSpec::gaussian(1.0).unwrap()] {
        let w = fit_weighted(&split.a, &split.b, &ones, &ones, &SolverParams::weighted(2.0, 0.1, 3.0, 0.4, 0.8, 0.6), &spec).unwrap();
        let r = fit_relstsvm(&split.a, &split.b, &SolverParams::relstsvm(2.0, 3.0, 0.1, 0.4, 0.8, 0.6), &spec).unwrap();
        let (w1, w2) = planes(&w);
        let (r1, r2) = planes(&r);
        assert!(rel_err(&w1, &r1) < 1e-10);
        assert!(rel_err(&w2, &r2) < 1e-10);
    }
}

#[test]
fn fitting_is_bitwise_deterministic() {
    let d = generate_crossplane(20, 30, 0.1, 9).unwrap();
    for kind in ModelKind::ALL {
        for spec in [KernelSpec::linear(), KernelSpec::gaussian(0.25).unwrap()] {
            let hp = Hyperparams::new(spec, kind.solver_params(0.5, 0.01, 0.8, 0.9));
            let m1 = train(kind, &d, &hp).unwrap();
            let m2 = train(kind, &d, &hp).unwrap();
            assert_eq!(m1, m2, "{kind}");
        }
    }
}

#[test]
fn nonlinear_dispatch_inverts_class_sized_systems() {
    for (p, q) in [(8usize, 12usize), (12, 8)] {
        let d = generate_crossplane(p, q, 0.1, 4).unwrap();
        let split = d.split_classes();
        let s1 = vec![1.0; p];
        let s2 = vec![0.5; q];
        let spec = KernelSpec::gaussian(0.5).unwrap();
        let (_, trace) = fit_weighted_traced(&split.a, &split.b, &s1, &s2, &SolverParams::weighted(1.0, 1.0, 1.0, 1.0, 0.8, 0.8), &spec).unwrap();
        assert_eq!(trace.plane1.path, SolvePath::Woodbury);
        assert_eq!(trace.plane2.path, SolvePath::Woodbury);
        if p < q {
            assert_eq!(trace.plane1.factorizations, vec![q, p]);
            assert_eq!(trace.plane2.factorizations, vec![p, q]);
        } else {
            assert_eq!(trace.plane1.factorizations, vec![p, q]);
            assert_eq!(trace.plane2.factorizations, vec![q, p]);
        }
        assert!(trace.plane1.factorizations.iter().all(|&t| t < p + q + 1));
    }
}

#[test]
fn linear_dispatch_uses_full_system() {
    let d = generate_crossplane(8, 12, 0.1, 4).unwrap();
    let split = d.split_classes();
    let (_, trace) = fit_weighted_traced(&split.a, &split.b, &[1.0; 8], &[1.0; 12], &SolverParams::weighted(1.0, 1.0, 1.0, 1.0, 0.8, 0.8), &KernelSpec::linear()).unwrap();
    assert_eq!(trace.plane1.path, SolvePath::Direct);
    assert_eq!(trace.plane1.factorizations, vec![3]);
}

#[test]
fn cv_mean_is_unweighted_fold_average() {
    // 7 + 5 samples over 5 folds gives folds of unequal size
    let d = generate_crossplane(7, 5, 0.3, 17).unwrap();
    let folds = stratified_kfold(&d, 5, 1).unwrap();
    let kind = ModelKind::Relstsvm;
    let hp = Hyperparams::new(KernelSpec::linear(), kind.solver_params(1.0, 0.1, 0.8, 0.8));
    let mut by_hand = Vec::new();
    let mut sizes = Vec::new();
    for fold in 0..5 {
        let train_set = d.subset(&folds.train_indices(fold));
        let test_set = d.subset(&folds.test_indices(fold));
        let model = train(kind, &train_set, &hp).unwrap();
        let pred = model.predict(test_set.features()).unwrap();
        by_hand.push(auc(test_set.labels(), &pred).unwrap());
        sizes.push(test_set.len());
    }
    assert!(sizes.iter().any(|&s| s != sizes[0]));
    assert_eq!(fold_aucs(kind, &d, &hp, &folds).unwrap(), by_hand);
    let mean = by_hand.iter().sum::<f64>() / 5.0;
    assert!((cross_validate(kind, &d, &hp, &folds).unwrap() - mean).abs() < 1e-15);
}

/// Line through two points as `(slope, intercept)`, `None` for vertical.
fn line_through(p: &[f64], q: &[f64]) -> Option<(f64, f64)> {
    if (p[0] - q[0]).abs() < 1e-12 {
        return None;
    }
    let m = (q[1] - p[1]) / (q[0] - p[0]);
    Some((m, p[1] - m * p[0]))
}

/// Finds a line through two same-class samples holding every sample of that class.
fn class_line(x: &Matrix) -> Option<(f64, f64)> {
    for i in 0..x.rows() {
        for j in i + 1..x.rows() {
            if let Some((m, b)) = line_through(x.row(i), x.row(j)) {
                if x.iter_rows().all(|r| (r[1] - m * r[0] - b).abs() < 1e-9) {
                    return Some((m, b));
                }
            }
        }
    }
    None
}

#[test]
fn noiseless_crossplane_is_separated_by_its_class_lines() {
    for seed in 0..20 {
        let d = generate_crossplane(10, 10, 0.0, seed).unwrap();
        let split = d.split_classes();
        let la = class_line(&split.a).expect("positive class lies on one line");
        let lb = class_line(&split.b).expect("negative class lies on one line");
        assert!((la.0 - lb.0).abs() > 1e-6);
        let xc = (lb.1 - la.1) / (la.0 - lb.0);
        let yc = la.0 * xc + la.1;
        assert!((0.0..=1.0).contains(&xc) && (0.1..=1.0).contains(&yc));
        let dist = |l: (f64, f64), r: &[f64]| (r[1] - l.0 * r[0] - l.1).abs() / (1.0 + l.0 * l.0).sqrt();
        for (r, &y) in d.features().iter_rows().zip(d.labels()) {
            let nearest = if dist(la, r) <= dist(lb, r) { Label::Positive } else { Label::Negative };
            assert_eq!(nearest, y, "seed {seed}");
        }

        let model = fit_lstsvm(&split.a, &split.b, &SolverParams::lstsvm(1e-5, 1e-5), &KernelSpec::linear()).unwrap();
        let pred = model.predict(d.features()).unwrap();
        assert_eq!(auc(d.labels(), &pred).unwrap(), 1.0, "seed {seed}");
    }
}

#[test]
fn separable_search_finds_perfect_lstsvm() {
    let d = generate_crossplane(20, 20, 0.0, 3).unwrap();
    let template = Hyperparams::new(KernelSpec::linear(), SolverParams::lstsvm(1.0, 1.0));
    let r1 = grid_search_cv(ModelKind::Lstsvm, &d, KernelFamily::Linear, &Grids::default(), 5, 7, &template).unwrap();
    let r2 = grid_search_cv(ModelKind::Lstsvm, &d, KernelFamily::Linear, &Grids::default(), 5, 7, &template).unwrap();
    assert_eq!(r1.cv_auc, 1.0);
    assert_eq!(r1.index, r2.index);
    assert_eq!(r1.scores, r2.scores);
}

#[test]
fn single_candidate_grid_is_returned() {
    let d = generate_crossplane(10, 10, 0.2, 3).unwrap();
    let template = Hyperparams::new(KernelSpec::linear(), SolverParams::lstsvm(1.0, 1.0));
    let grids = Grids::single(2.0, 10.0, 0.1, 0.7, 0.9);
    let r = grid_search_cv(ModelKind::Relstsvm, &d, KernelFamily::Gaussian, &grids, 2, 0, &template).unwrap();
    assert_eq!(r.index, 0);
    assert_eq!(r.best.kernel, KernelSpec::gaussian(2.0).unwrap());
    assert_eq!(r.best.params, ModelKind::Relstsvm.solver_params(10.0, 0.1, 0.7, 0.9));
}

fn labelled(x: &[f64], y: &[i8]) -> Dataset {
    let m = Matrix::from_vec(y.len(), x.len() / y.len(), x.to_vec()).unwrap();
    Dataset::new("t", m, y.iter().map(|&v| Label::try_from(v).unwrap()).collect()).unwrap()
}

#[test]
fn worked_examples() {
    // gaussian kernel value
    let k = gram(
        &Matrix::from_rows(&[[0.0, 0.0]]).unwrap(),
        &Matrix::from_rows(&[[1.0, 1.0]]).unwrap(),
        &KernelSpec::gaussian(1.0).unwrap(),
    )
    .unwrap();
    assert!((k[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);

    // class statistics
    let stats = |p: usize, q: usize| {
        let mut y = vec![1i8; p];
        y.extend(vec![-1; q]);
        class_stats(&labelled(&vec![0.0; p + q], &y)).unwrap()
    };
    let s = stats(30, 10);
    assert_eq!((s.ir, s.majority_label), (3.0, Label::Positive));
    let s = stats(50, 50);
    assert_eq!((s.ir, s.majority_label), (1.0, Label::Positive));
    let s = stats(10, 25);
    assert_eq!((s.ir, s.majority_label), (2.5, Label::Negative));

    // folds
    let d = generate_crossplane(7, 5, 0.0, 0).unwrap();
    let f = stratified_kfold(&d, 5, 0).unwrap();
    for fold in 0..5 {
        let test = f.test_indices(fold);
        let pos = test.iter().filter(|&&i| d.labels()[i] == Label::Positive).count();
        assert!((1..=2).contains(&pos));
        assert_eq!(test.len() - pos, 1);
    }

    // membership of a symmetric 1-D class
    let d = labelled(&[0.0, 2.0, 10.0], &[1, 1, -1]);
    let mu = ifma_membership(&d, &KernelSpec::linear(), 0.5).unwrap();
    assert!((mu[0] - 1.0 / 3.0).abs() < 1e-12 && (mu[1] - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(mu[2], 1.0);

    // one opposite-class neighbour within gamma
    let d = labelled(&[0.0, 2.0, 2.5, 10.0], &[1, 1, -1, -1]);
    let mu = ifma_membership(&d, &KernelSpec::linear(), 0.5).unwrap();
    let nu = ifma_nonmembership(&d, &KernelSpec::linear(), 1.0, &mu).unwrap();
    assert!((nu[1] - (1.0 - mu[1]) / 2.0).abs() < 1e-12);
    assert_eq!(nu[0], 0.0);
    assert_eq!(nu[3], 0.0);

    // score branches
    assert_eq!(if_score(0.8, 0.0), 0.8);
    assert_eq!(if_score(0.3, 0.5), 0.0);
    assert!((if_score(0.6, 0.2) - 0.8 / 1.2).abs() < 1e-12);

    // metric
    let truth = [1i8, 1, 1, 1, -1, -1, -1, -1].map(|v| Label::try_from(v).unwrap());
    let pred = [1i8, 1, 1, -1, -1, -1, -1, 1].map(|v| Label::try_from(v).unwrap());
    assert!((auc(&truth, &pred).unwrap() - 0.75).abs() < 1e-15);

    // ranks
    assert_eq!(rank_row(&[84.82, 83.16, 84.82, 79.31, 84.58, 85.31]), vec![2.5, 5.0, 2.5, 6.0, 4.0, 1.0]);
    assert_eq!(rank_row(&[50.0, 50.0, 44.73, 47.25, 48.38, 50.0]), vec![2.0, 2.0, 6.0, 5.0, 4.0, 2.0]);
    let rt = RankTable::from_ranks(Matrix::from_rows(&[[1.0, 2.0]]).unwrap()).unwrap();
    assert!((friedman(&rt).unwrap().chi2 - 1.0).abs() < 1e-12);

    // critical differences
    assert!((nemenyi_cd(6, 29, 2.589).unwrap() - 1.272).abs() < 5e-4);
    assert!((nemenyi_cd(6, 22, 2.589).unwrap() - 1.460).abs() < 5e-4);
}
