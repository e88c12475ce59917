//! Interior-point solver against the active-set oracle on random small QPs.

use qsurf::qp::{brute_force_oracle, kkt_residual, solve_qp, QpOptions, QpStatus};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::random_qp;

#[test]
fn matches_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_obj = 0.0_f64;
    let mut worst_x = 0.0_f64;
    for case in 0..100 {
        let (p, definite) = random_qp(&mut rng);
        let ipm = solve_qp(&p, &QpOptions::default()).unwrap();
        let oracle = brute_force_oracle(&p).unwrap();
        assert_eq!(ipm.status, QpStatus::Optimal, "case {case}: {:?}", ipm.trace.last());
        assert!(kkt_residual(&p, &ipm) <= 1e-8);
        assert!(oracle.objective <= ipm.objective + 1e-6, "case {case}");
        let gap = (ipm.objective - oracle.objective).abs();
        worst_obj = worst_obj.max(gap);
        assert!(gap <= 1e-6, "case {case}: objective gap {gap:e}");
        if definite {
            let dx = (&ipm.x - &oracle.x).amax();
            worst_x = worst_x.max(dx);
            assert!(dx <= 1e-5, "case {case}: primal gap {dx:e}");
        }
        assert!(ipm.dual_objective <= ipm.objective + 1e-8 * (1.0 + ipm.objective.abs()));
    }
    eprintln!("worst objective gap {worst_obj:e}, worst primal gap {worst_x:e}");
}

#[test]
fn merit_rises_only_with_recovery() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let (p, _) = random_qp(&mut rng);
        let sol = solve_qp(&p, &QpOptions::default()).unwrap();
        for pair in sol.trace.windows(2) {
            if pair[1].merit > pair[0].merit {
                assert!(pair[1].recovery);
            }
        }
    }
}

#[test]
fn initial_scaling_does_not_change_definite_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let (p, definite) = random_qp(&mut rng);
        if !definite {
            continue;
        }
        let a = solve_qp(&p, &QpOptions::default()).unwrap();
        let b = solve_qp(&p, &QpOptions { init_scale: 10.0, ..QpOptions::default() }).unwrap();
        assert!((&a.x - &b.x).amax() <= 1e-6);
    }
}
