//! Properties of trained models across kinds and random data.

use proptest::prelude::*;
use qsurf::dataset::synth::{synth_normal, synth_quadratic};
use qsurf::dataset::{expand_universum, fit_normalizer, generate_universum, ExpandedUniversum, LabeledDataset};
use qsurf::irls::{irls_solve, IrlsConfig};
use qsurf::models::{
    c_bounds, constraint_violation, soft_objective, train_model, Hyperparams, ModelKind, TrainOptions,
};
use qsurf::qp::QpOptions;
use qsurf::symvec::{build_g, is_positive_definite};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QP_KINDS: [ModelKind; 4] = [
    ModelKind::Sqssvm,
    ModelKind::L1Sqssvm,
    ModelKind::USqssvm,
    ModelKind::L1USqssvm,
];

fn instance(m: usize, n: usize, seed: u64) -> (LabeledDataset, ExpandedUniversum) {
    let raw = synth_quadratic(m, n, 0.2, false, seed).unwrap();
    let d = fit_normalizer(&raw).apply_dataset(&raw).unwrap();
    let u = expand_universum(&generate_universum(&d, 0.2, seed).unwrap());
    (d, u)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn qp_models_are_feasible_and_bounded(
        m in 6usize..20,
        n in 1usize..4,
        seed in 0u64..1000,
        log_mu in 0i32..8,
        log_lambda in -3i32..3,
        log_cu in -2i32..4,
        kind_idx in 0usize..4,
    ) {
        let (d, u) = instance(m, n, seed);
        let kind = QP_KINDS[kind_idx];
        let h = Hyperparams::new(
            2f64.powi(log_mu),
            2f64.powi(log_lambda),
            2f64.powi(log_cu),
            0.05,
        ).unwrap();
        let model = train_model(kind, &d, &u, &h, &TrainOptions::default()).unwrap();
        prop_assert!(constraint_violation(&model, &d, &u).unwrap() <= 1e-7);
        let (lo, hi) = c_bounds(&model, &d, &u).unwrap();
        let c = model.classifier.c;
        prop_assert!(lo - 1e-8 <= c && c <= hi + 1e-8, "{lo} <= {c} <= {hi}");
        let soft = soft_objective(&model, &d, &u).unwrap();
        prop_assert!((soft - model.report.objective).abs() <= 1e-6 * (1.0 + soft.abs()));
        if let Some(split) = &model.split {
            let overlap = split.pos.iter().zip(&split.neg).map(|(p, q)| p.min(*q)).fold(0.0, f64::max);
            prop_assert!(overlap <= 1e-7, "min(p, q) = {overlap:e}");
            let sum: f64 = split.pos.iter().chain(&split.neg).sum();
            let l1 = model.classifier.w_half.l1_norm();
            prop_assert!((h.lambda * sum - h.lambda * l1).abs() <= 1e-6);
        }
    }

    #[test]
    fn irls_trace_never_increases(
        m in 6usize..30,
        n in 1usize..4,
        seed in 0u64..1000,
        log_lambda in -2i32..6,
    ) {
        let (d, u) = instance(m, n, seed);
        let h = Hyperparams::new(16.0, 2f64.powi(log_lambda), 2.0, 0.02).unwrap();
        let (_, rep) = irls_solve(&d, &u, &h, &IrlsConfig::default(), None).unwrap();
        for w in rep.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10 * (1.0 + w[0].abs()), "{} -> {}", w[0], w[1]);
        }
    }
}

/// With G positive definite the optimal z is unique, so the starting point
/// of the interior-point method must not matter.
#[test]
fn unique_z_does_not_depend_on_start() {
    for seed in 0..5 {
        let (d, u) = instance(15, 2, seed);
        assert!(is_positive_definite(&build_g(d.points()).unwrap()).unwrap());
        let h = Hyperparams::new(32.0, 0.5, 2.0, 0.05).unwrap();
        for kind in QP_KINDS {
            let solve = |init_scale| {
                let opts = TrainOptions {
                    qp: QpOptions {
                        init_scale,
                        ..QpOptions::default()
                    },
                    ..TrainOptions::default()
                };
                train_model(kind, &d, &u, &h, &opts).unwrap().classifier.z()
            };
            let gap = dist(&solve(1.0), &solve(30.0));
            assert!(gap <= 1e-5, "{kind} seed {seed}: {gap:e}");
        }
    }
}

#[test]
fn irls_limit_does_not_depend_on_start() {
    let (d, u) = instance(25, 2, 8);
    assert!(is_positive_definite(&build_g(d.points()).unwrap()).unwrap());
    let h = Hyperparams::new(64.0, 1.0, 4.0, 0.01).unwrap();
    let cfg = IrlsConfig {
        tol: 1e-9,
        ..IrlsConfig::default()
    };
    let (reference, _) = irls_solve(&d, &u, &h, &cfg, None).unwrap();
    let z_ref = reference.classifier.z();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let z0: Vec<f64> = (0..z_ref.len()).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (m, rep) = irls_solve(&d, &u, &h, &cfg, Some(&z0)).unwrap();
        assert!(rep.converged);
        let gap = dist(&m.classifier.z(), &z_ref);
        assert!(gap <= 1e-4, "{gap:e}");
    }
}

#[test]
fn irls_is_insensitive_to_smoothing() {
    for seed in 0..4 {
        let (d, u) = instance(30, 2, seed);
        let h = Hyperparams::new(64.0, 2.0, 4.0, 0.01).unwrap();
        let run = |delta| {
            let cfg = IrlsConfig {
                delta,
                tol: 1e-9,
                ..IrlsConfig::default()
            };
            irls_solve(&d, &u, &h, &cfg, None).unwrap().0.classifier.z()
        };
        let gap = dist(&run(1e-8), &run(1e-10));
        assert!(gap <= 1e-4, "seed {seed}: {gap:e}");
    }
}

#[test]
fn l1_at_zero_lambda_matches_base_in_cv() {
    use qsurf::harness::{cross_validate, CvOptions};
    let d = synth_quadratic(40, 2, 0.2, false, 21).unwrap();
    let opts = CvOptions {
        k: 5,
        seed: 2,
        ..CvOptions::default()
    };
    for (l1, base) in [
        (ModelKind::L1Sqssvm, ModelKind::Sqssvm),
        (ModelKind::L1USqssvm, ModelKind::USqssvm),
    ] {
        let h = Hyperparams::new(64.0, 0.0, 1.0, 0.05).unwrap();
        let a = cross_validate(l1, &d, &h, &opts).unwrap();
        let b = cross_validate(base, &d, &h, &opts).unwrap();
        assert!((a.mean_accuracy - b.mean_accuracy).abs() <= 0.5, "{l1}: {} vs {}", a.mean_accuracy, b.mean_accuracy);
    }
}

#[test]
fn separable_data_is_learned_exactly() {
    use qsurf::harness::{cross_validate, CvOptions};
    let d = synth_quadratic(100, 2, 0.0, true, 5).unwrap();
    let h = Hyperparams::new(65536.0, 0.0625, 1.0, 0.0625).unwrap();
    for kind in ModelKind::ALL {
        let r = cross_validate(kind, &d, &h, &CvOptions::default()).unwrap();
        assert_eq!((r.mean_accuracy, r.std_accuracy), (100.0, 0.0), "{kind}");
    }
}

#[test]
fn least_squares_on_200_points_is_fast() {
    let raw = synth_normal(100, 2, 2.0, 3).unwrap();
    let d = fit_normalizer(&raw).apply_dataset(&raw).unwrap();
    let u = expand_universum(&generate_universum(&d, 0.1, 3).unwrap());
    let h = Hyperparams::new(64.0, 4.0, 16.0, 0.05).unwrap();
    let model = train_model(ModelKind::LsL1USqssvm, &d, &u, &h, &TrainOptions::default()).unwrap();
    assert!(model.report.seconds < 1.0, "{}s", model.report.seconds);
}

#[test]
fn more_universum_does_not_hurt_on_separable_data() {
    use qsurf::harness::{universum_rate_curve, CvOptions};
    let d = synth_quadratic(40, 2, 0.0, true, 6).unwrap();
    let h = Hyperparams::new(1024.0, 0.0, 1.0, 0.05).unwrap();
    let opts = CvOptions {
        k: 5,
        seed: 6,
        ..CvOptions::default()
    };
    let a = universum_rate_curve(ModelKind::USqssvm, &d, &h, &[0.05, 0.5], 3, &opts).unwrap();
    let b = universum_rate_curve(ModelKind::USqssvm, &d, &h, &[0.05, 0.5], 3, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a[1].mean >= a[0].mean - 2.0, "{a:?}");
}
