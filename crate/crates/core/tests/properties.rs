//! Property tests for the invariants each module promises.

use proptest::prelude::*;

use twinsvm_core::dataset::{class_stats, generate_crossplane, stratified_kfold};
use twinsvm_core::evaluation::ranking::{friedman, rank_row, rank_table};
use twinsvm_core::evaluation::{auc, nemenyi_cd};
use twinsvm_core::kernel::{gram, KernelSpec};
use twinsvm_core::membership::{ifma, ifma_score, weights_from_scores, IfNumbers, IfmaParams, WeightScheme};
use twinsvm_core::numerics::{spd_solve, SpdSystem};
use twinsvm_core::solver::{classify, DecisionRule};
use twinsvm_core::{Dataset, Label, Matrix};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-3.0f64..3.0, rows * cols).prop_map(move |d| Matrix::from_vec(rows, cols, d).unwrap())
}

fn dataset(max_rows: usize) -> impl Strategy<Value = Dataset> {
    (1usize..=4, 2usize..=max_rows, 2usize..=max_rows).prop_flat_map(|(n, p, q)| {
        (matrix(p + q, n), Just(p), Just(q)).prop_map(|(x, p, q)| {
            let mut labels = vec![Label::Positive; p];
            labels.extend(vec![Label::Negative; q]);
            Dataset::new("prop", x, labels).unwrap()
        })
    })
}

fn labels(v: &[bool]) -> Vec<Label> {
    v.iter().map(|&b| if b { Label::Positive } else { Label::Negative }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gaussian_entries_in_unit_interval(x in matrix(6, 3), c in matrix(5, 3), sigma in 0.03f64..32.0) {
        let spec = KernelSpec::gaussian(sigma).unwrap();
        let k = gram(&x, &c, &spec).unwrap();
        prop_assert!(k.as_slice().iter().all(|&v| v > 0.0 && v <= 1.0));
        let kk = gram(&x, &x, &spec).unwrap();
        for i in 0..6 {
            prop_assert_eq!(kk[(i, i)], 1.0);
            for j in 0..6 {
                prop_assert_eq!(kk[(i, j)], kk[(j, i)]);
            }
        }
    }

    #[test]
    fn gaussian_translation_invariant(x in matrix(4, 2), c in matrix(3, 2), shift in prop::array::uniform2(-5.0f64..5.0)) {
        let spec = KernelSpec::gaussian(0.7).unwrap();
        let mv = |m: &Matrix| {
            let mut out = m.clone();
            for i in 0..out.rows() {
                out.row_mut(i).iter_mut().zip(shift).for_each(|(v, s)| *v += s);
            }
            out
        };
        let k1 = gram(&x, &c, &spec).unwrap();
        let k2 = gram(&mv(&x), &mv(&c), &spec).unwrap();
        prop_assert!(k1.max_abs_diff(&k2) < 1e-12);
    }

    #[test]
    fn linear_gram_is_product(x in matrix(4, 3), c in matrix(5, 3)) {
        let k = gram(&x, &c, &KernelSpec::linear()).unwrap();
        let prod = x.matmul(&c.transpose()).unwrap();
        prop_assert!(k.max_abs_diff(&prod) < 1e-12);
    }

    #[test]
    fn class_counts_and_ir_permutation_invariant(d in dataset(20), seed in any::<u64>()) {
        let s = class_stats(&d).unwrap();
        prop_assert_eq!(s.p + s.q, d.len());
        prop_assert!(s.ir >= 1.0);
        let mut idx: Vec<usize> = (0..d.len()).collect();
        use rand::{seq::SliceRandom, SeedableRng};
        idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(class_stats(&d.subset(&idx)).unwrap(), s);
    }

    #[test]
    fn folds_partition_and_stratify(p in 2usize..40, q in 2usize..40, k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(p >= k && q >= k);
        let d = generate_crossplane(p, q, 0.1, seed).unwrap();
        let f = stratified_kfold(&d, k, seed).unwrap();
        prop_assert_eq!(f.fold_index.len(), p + q);
        for fold in 0..k {
            let test = f.test_indices(fold);
            prop_assert!(!test.is_empty());
            let pos = test.iter().filter(|&&i| d.labels()[i] == Label::Positive).count();
            let neg = test.len() - pos;
            prop_assert!((pos as f64 - p as f64 / k as f64).abs() < 1.0 + 1e-12);
            prop_assert!((neg as f64 - q as f64 / k as f64).abs() < 1.0 + 1e-12);
        }
        prop_assert_eq!(f, stratified_kfold(&d, k, seed).unwrap());
    }

    #[test]
    fn if_numbers_well_formed(d in dataset(15), sigma in prop::option::of(0.05f64..10.0), delta in 1e-5f64..1.0) {
        let spec = match sigma {
            Some(s) => KernelSpec::gaussian(s).unwrap(),
            None => KernelSpec::linear(),
        };
        let out = ifma(&d, &spec, &IfmaParams { delta, gamma: None }).unwrap();
        for ((&mu, &nu), &k) in out.numbers.mu.iter().zip(&out.numbers.nu).zip(&out.scores) {
            prop_assert!(mu > 0.0 && mu <= 1.0);
            prop_assert!((0.0..=1.0).contains(&nu) && mu + nu <= 1.0);
            prop_assert!((0.0..=1.0).contains(&k));
        }
    }

    #[test]
    fn scores_permutation_equivariant(pairs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..30), seed in any::<u64>()) {
        let pairs: Vec<(f64, f64)> = pairs.into_iter().map(|(m, n)| (m, n * (1.0 - m))).collect();
        let numbers = |v: &[(f64, f64)]| IfNumbers { mu: v.iter().map(|p| p.0).collect(), nu: v.iter().map(|p| p.1).collect() };
        let base = ifma_score(&numbers(&pairs));
        let mut perm: Vec<usize> = (0..pairs.len()).collect();
        use rand::{seq::SliceRandom, SeedableRng};
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let permuted: Vec<(f64, f64)> = perm.iter().map(|&i| pairs[i]).collect();
        let scores = ifma_score(&numbers(&permuted));
        for (j, &i) in perm.iter().enumerate() {
            prop_assert_eq!(scores[j], base[i]);
        }
    }

    #[test]
    fn weights_are_scores_or_scaled(d in dataset(20), raw in prop::collection::vec(0.0f64..=1.0, 40)) {
        let scores = &raw[..d.len()];
        let w = weights_from_scores(scores, &d, WeightScheme::Ifma).unwrap();
        let s = class_stats(&d).unwrap();
        let mut got: Vec<f64> = w.s1.iter().chain(&w.s2).cloned().collect();
        let (pos, neg) = d.class_indices();
        let mut expected: Vec<f64> = pos.iter().chain(&neg).map(|&i| {
            if d.labels()[i] == s.majority_label { scores[i] } else { s.ir * scores[i] }
        }).collect();
        got.sort_by(f64::total_cmp);
        expected.sort_by(f64::total_cmp);
        prop_assert_eq!(got, expected);
        prop_assert!(w.s1.iter().chain(&w.s2).all(|&v| v >= 0.0));
    }

    #[test]
    fn rank_rows_sum(row in prop::collection::vec(prop::sample::select(vec![50.0, 60.5, 70.0, 80.25, 90.0, 100.0]), 2..10)) {
        let k = row.len() as f64;
        let r = rank_row(&row);
        prop_assert!((r.iter().sum::<f64>() - k * (k + 1.0) / 2.0).abs() < 1e-12);
        for (i, a) in row.iter().enumerate() {
            for (j, b) in row.iter().enumerate() {
                if a > b {
                    prop_assert!(r[i] < r[j]);
                }
            }
        }
    }

    #[test]
    fn friedman_row_and_column_permutations(scores in matrix(7, 4), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let base = friedman(&rank_table(&scores).unwrap()).unwrap();
        let mut rows: Vec<usize> = (0..7).collect();
        rows.shuffle(&mut rng);
        let mut cols: Vec<usize> = (0..4).collect();
        cols.shuffle(&mut rng);
        let data: Vec<Vec<f64>> = rows.iter().map(|&i| cols.iter().map(|&j| scores[(i, j)]).collect()).collect();
        let rt = rank_table(&Matrix::from_rows(&data).unwrap()).unwrap();
        let perm = friedman(&rt).unwrap();
        prop_assert!((perm.chi2 - base.chi2).abs() < 1e-9);
        let base_avg = rank_table(&scores).unwrap().avg_ranks;
        for (c, &j) in cols.iter().enumerate() {
            prop_assert!((rt.avg_ranks[c] - base_avg[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn auc_invariant_under_negation(truth in prop::collection::vec(any::<bool>(), 2..40), pred in prop::collection::vec(any::<bool>(), 40)) {
        prop_assume!(truth.iter().any(|&b| b) && truth.iter().any(|&b| !b));
        let t = labels(&truth);
        let p = labels(&pred[..truth.len()]);
        let a = auc(&t, &p).unwrap();
        let flip = |v: &[Label]| v.iter().map(|l| l.flip()).collect::<Vec<_>>();
        prop_assert!((a - auc(&flip(&t), &flip(&p)).unwrap()).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn cd_decreases_with_datasets(k in 2usize..10, n in 1usize..200) {
        prop_assert!(nemenyi_cd(k, n + 1, 2.5).unwrap() < nemenyi_cd(k, n, 2.5).unwrap());
    }

    #[test]
    fn perpendicular_rule_scale_invariant(f1 in -5.0f64..5.0, f2 in -5.0f64..5.0, n1 in 0.1f64..5.0, n2 in 0.1f64..5.0, l1 in 0.01f64..100.0, l2 in 0.01f64..100.0) {
        let base = classify(DecisionRule::Perpendicular, f1, f2, n1, n2);
        // rescaling (w_i, b_i) by l_i scales f_i and |w_i| together
        let scaled = classify(DecisionRule::Perpendicular, l1 * f1, l2 * f2, l1 * n1, l2 * n2);
        let r1 = f1.abs() / n1;
        let r2 = f2.abs() / n2;
        prop_assume!((r1 - r2).abs() > 1e-9 * (r1 + r2));
        prop_assert_eq!(base, scaled);
    }
}

#[test]
fn spd_residual_up_to_cond_1e8() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    for cond_exp in [0, 2, 4, 6, 8] {
        let d = 12;
        // Q diag(eigs) Q^T with Q from Gram-Schmidt
        let mut q: Vec<Vec<f64>> = Vec::new();
        while q.len() < d {
            let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for u in &q {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            q.push(v.into_iter().map(|a| a / n).collect());
        }
        let eig: Vec<f64> = (0..d).map(|i| 10f64.powf(-(cond_exp as f64) * i as f64 / (d - 1) as f64)).collect();
        let mut m = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = (0..d).map(|k| q[k][i] * eig[k] * q[k][j]).sum();
            }
        }
        for i in 0..d {
            for j in 0..i {
                let v = m[(j, i)];
                m[(i, j)] = v;
            }
        }
        let rhs: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = spd_solve(&SpdSystem { matrix: m.clone(), rhs: rhs.clone() }).unwrap();
        let r: f64 = m.mul_vec(&x).iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let rn: f64 = rhs.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(r <= 1e-8 * rn, "cond 1e{cond_exp}: residual {r}");
    }
}

#[test]
fn spd_solve_surfaces_singular_systems() {
    let m = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
    assert!(spd_solve(&SpdSystem { matrix: m, rhs: vec![1.0, 0.0] }).is_err());
}
