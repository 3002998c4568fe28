use gaze_target::learn::{
    argmax_first, dual_objective, max_kkt_violation, ova_margins, ova_predict, ova_train, svm_decision, svm_train,
    svm_train_full, KernelSpec, SvmParams,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Exhaustive active-set solve of max sum(a) - 1/2 a'Qa, 0 <= a <= C, y'a = 0.
fn qp_oracle(x: &[Vec<f64>], y: &[i8], kernel: KernelSpec, c: f64) -> f64 {
    let n = x.len();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let q = DMatrix::from_fn(n, n, |i, j| yf[i] * yf[j] * kernel.eval(&x[i], &x[j]));
    let objective = |a: &DVector<f64>| a.sum() - 0.5 * (a.transpose() * &q * a)[(0, 0)];
    let mut best = f64::NEG_INFINITY;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        // 0 = at zero, 1 = at C, 2 = free
        let mut status = vec![0u8; n];
        let mut r = code;
        for s in status.iter_mut() {
            *s = (r % 3) as u8;
            r /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == 2).collect();
        let mut a = DVector::from_fn(n, |i, _| if status[i] == 1 { c } else { 0.0 });
        if !free.is_empty() {
            let f = free.len();
            let mut m = DMatrix::zeros(f + 1, f + 1);
            let mut rhs = DVector::zeros(f + 1);
            for (ri, &i) in free.iter().enumerate() {
                for (ci, &j) in free.iter().enumerate() {
                    m[(ri, ci)] = q[(i, j)];
                }
                m[(ri, f)] = yf[i];
                m[(f, ri)] = yf[i];
                let fixed: f64 = (0..n).filter(|&j| status[j] == 1).map(|j| q[(i, j)] * c).sum();
                rhs[ri] = 1.0 - fixed;
            }
            rhs[f] = -(0..n).filter(|&j| status[j] == 1).map(|j| yf[j] * c).sum::<f64>();
            for d in 0..=f {
                m[(d, d)] += 1e-10;
            }
            let Some(sol) = m.lu().solve(&rhs) else {
                continue;
            };
            let mut ok = true;
            for (ri, &i) in free.iter().enumerate() {
                let v = sol[ri];
                if !(v > -1e-9 && v < c + 1e-9) {
                    ok = false;
                }
                a[i] = v.clamp(0.0, c);
            }
            if !ok {
                continue;
            }
        }
        if a.iter().zip(&yf).map(|(ai, yi)| ai * yi).sum::<f64>().abs() > 1e-7 {
            continue;
        }
        best = best.max(objective(&a));
    }
    best
}

fn xor() -> (Vec<Vec<f64>>, Vec<i8>) {
    (vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]], vec![-1, -1, 1, 1])
}

#[test]
fn xor_matches_qp_oracle() {
    let (x, y) = xor();
    let kernel = KernelSpec::Rbf { gamma: 1.0 };
    let fit = svm_train_full(&x, &y, &SvmParams::new(kernel, 10.0)).unwrap();
    for (xi, &yi) in x.iter().zip(&y) {
        assert_eq!(svm_decision(&fit.model, xi).unwrap().signum(), f64::from(yi));
    }
    let oracle = qp_oracle(&x, &y, kernel, 10.0);
    let smo = dual_objective(&x, &y, &fit.alpha, kernel);
    assert!((oracle - smo).abs() < 1e-6, "oracle {oracle} smo {smo}");
}

#[test]
fn linear_decision_equals_explicit_weights() {
    let mut rng = gaze_target::seed::rng(9);
    let x: Vec<Vec<f64>> = (0..40).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<i8> = x.iter().map(|r| if r[0] + 0.5 * r[1] - 0.2 > 0.0 { 1 } else { -1 }).collect();
    let m = svm_train(&x, &y, &SvmParams::new(KernelSpec::Linear, 1.0)).unwrap();
    let mut w = [0.0; 3];
    for (sv, coef) in m.support_vectors.iter().zip(&m.dual_coefs) {
        for d in 0..3 {
            w[d] += coef * sv[d];
        }
    }
    for _ in 0..50 {
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let explicit = w.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() + m.bias;
        assert!((svm_decision(&m, &p).unwrap() - explicit).abs() < 1e-10);
    }
}

#[test]
fn positive_support_vector_has_positive_margin() {
    let x = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]];
    let y = [-1, -1, 1, 1];
    let m = svm_train(&x, &y, &SvmParams::new(KernelSpec::Rbf { gamma: 0.5 }, 10.0)).unwrap();
    let pos: Vec<_> = m.support_vectors.iter().zip(&m.dual_coefs).filter(|(_, c)| **c > 0.0).collect();
    assert!(!pos.is_empty());
    for (sv, _) in pos {
        assert!(svm_decision(&m, sv).unwrap() > 0.0);
    }
}

#[test]
fn duplicating_points_keeps_decision() {
    let mut rng = gaze_target::seed::rng(17);
    let kernel = KernelSpec::Rbf { gamma: 1.0 };
    for _ in 0..5 {
        let x: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let shift = if i % 2 == 0 { 2.0 } else { -2.0 };
                vec![shift + rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]
            })
            .collect();
        let y: Vec<i8> = (0..8).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        // Separable data, large C: the hard-margin function is unique and survives duplication.
        let p = SvmParams::new(kernel, 1e4).with_tol(1e-8);
        let single = svm_train(&x, &y, &p).unwrap();
        let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<i8> = y.iter().chain(&y).copied().collect();
        let double = svm_train(&x2, &y2, &p).unwrap();
        for _ in 0..20 {
            let q = vec![rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0)];
            let a = svm_decision(&single, &q).unwrap();
            let b = svm_decision(&double, &q).unwrap();
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }
}

#[test]
fn ova_two_classes_agree_with_binary() {
    let mut rng = gaze_target::seed::rng(5);
    let x: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let labels: Vec<String> = x.iter().map(|r| if r[0] > r[1] { "b".into() } else { "a".into() }).collect();
    let p = SvmParams::new(KernelSpec::Rbf { gamma: 1.0 }, 1.0);
    let ova = ova_train(&x, &labels, &p).unwrap();
    assert_eq!(ova.classes, vec!["a", "b"]);
    let y: Vec<i8> = labels.iter().map(|l| if l == "a" { 1 } else { -1 }).collect();
    let bin = svm_train(&x, &y, &p).unwrap();
    for xi in &x {
        let want = if svm_decision(&bin, xi).unwrap() > 0.0 { "a" } else { "b" };
        assert_eq!(ova_predict(&ova, xi).unwrap(), want);
    }
}

#[test]
fn ova_single_sample_class_trains() {
    let x = vec![vec![0.0], vec![0.1], vec![0.2], vec![5.0]];
    let labels: Vec<String> = ["a", "a", "a", "z"].iter().map(|s| s.to_string()).collect();
    let m = ova_train(&x, &labels, &SvmParams::new(KernelSpec::Rbf { gamma: 1.0 }, 1.0)).unwrap();
    assert_eq!(m.models.len(), 2);
    for model in &m.models {
        assert!(model.dual_coefs.iter().all(|c| c.abs() <= 1.0 + 1e-12));
    }
}

#[test]
fn five_blobs_match_centroid_oracle() {
    let mut rng = gaze_target::seed::rng(33);
    let centers = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [4.0, 4.0], [2.0, 8.0]];
    let noise = Normal::new(0.0, 0.6).unwrap();
    let mut draw = |n: usize| {
        let mut x = Vec::new();
        let mut l = Vec::new();
        for (ci, c) in centers.iter().enumerate() {
            for _ in 0..n {
                x.push(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
                l.push(format!("c{ci}"));
            }
        }
        (x, l)
    };
    let (x, l) = draw(30);
    let (xt, _) = draw(40);
    let m = ova_train(&x, &l, &SvmParams::new(KernelSpec::Rbf { gamma: 0.5 }, 1.0)).unwrap();
    assert_eq!(m.models.len(), 5);
    let agree = xt
        .iter()
        .filter(|p| {
            let d: Vec<f64> = centers.iter().map(|c| -((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2))).collect();
            let oracle = format!("c{}", argmax_first(&d).unwrap());
            ova_predict(&m, p).unwrap() == oracle
        })
        .count();
    assert!(agree as f64 >= 0.95 * xt.len() as f64, "{agree}/{}", xt.len());
}

#[test]
fn margins_shift_does_not_change_argmax() {
    let x = vec![vec![0.0], vec![1.0], vec![2.0]];
    let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let mut m = ova_train(&x, &labels, &SvmParams::new(KernelSpec::Rbf { gamma: 1.0 }, 1.0)).unwrap();
    let q = [1.2];
    let before = ova_predict(&m, &q).unwrap().to_string();
    let margins = ova_margins(&m, &q).unwrap();
    for model in &mut m.models {
        model.bias += 3.7;
    }
    let shifted = ova_margins(&m, &q).unwrap();
    for (a, b) in margins.iter().zip(&shifted) {
        assert!((b - a - 3.7).abs() < 1e-12);
    }
    assert_eq!(ova_predict(&m, &q).unwrap(), before);
}

fn small_instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<i8>, bool, f64, f64)> {
    (2usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), n),
            prop::collection::vec(prop::bool::ANY, n),
            prop::bool::ANY,
            0.1f64..20.0,
            0.1f64..3.0,
        )
            .prop_filter_map("needs both labels", |(x, yb, lin, c, g)| {
                let y: Vec<i8> = yb.iter().map(|&b| if b { 1 } else { -1 }).collect();
                (y.contains(&1) && y.contains(&-1)).then_some((x, y, lin, c, g))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn smo_matches_oracle_on_tiny_problems((x, y, lin, c, g) in small_instance()) {
        let kernel = if lin { KernelSpec::Linear } else { KernelSpec::Rbf { gamma: g } };
        let fit = svm_train_full(&x, &y, &SvmParams::new(kernel, c).with_tol(1e-9)).unwrap();
        let smo = dual_objective(&x, &y, &fit.alpha, kernel);
        let oracle = qp_oracle(&x, &y, kernel, c);
        prop_assert!((smo - oracle).abs() < 1e-6 * (1.0 + oracle.abs()), "smo {} oracle {}", smo, oracle);
        prop_assert!(max_kkt_violation(&x, &y, &fit.alpha, kernel, c) < 1e-3);
    }

    #[test]
    fn dual_feasibility((x, y, lin, c, g) in small_instance()) {
        let kernel = if lin { KernelSpec::Linear } else { KernelSpec::Rbf { gamma: g } };
        let fit = svm_train_full(&x, &y, &SvmParams::new(kernel, c)).unwrap();
        let mut s = 0.0;
        for (a, &yi) in fit.alpha.iter().zip(&y) {
            prop_assert!(*a >= -1e-8 && *a <= c + 1e-8);
            s += a * f64::from(yi);
        }
        prop_assert!(s.abs() < 1e-8);
        prop_assert!(fit.model.train_meta.kkt_residual <= fit.model.tol);
        for coef in &fit.model.dual_coefs {
            prop_assert!(coef.abs() <= c + 1e-12);
        }
    }
}
