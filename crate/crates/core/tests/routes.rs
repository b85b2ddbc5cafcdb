//! The three routes to the threshold agree with each other.

use std::f64::consts::FRAC_PI_4;

use locklab_core::asymptotics::{decompose, predict_gamma};
use locklab_core::dynamics::{integrate, seed_state};
use locklab_core::locking::{
    lock_margin, locking_threshold_exact, make_frequencies, normalized, order_param_self_consistent,
};
use locklab_core::{FrequencyRule, FrequencySpec, FrequencySpec64, MeshMode, SeedPhases, SimConfig64, Verdict};

#[test]
fn seed_is_a_fixed_point_at_threshold() {
    for n in [3usize, 7, 20] {
        let g = locking_threshold_exact(&FrequencySpec64::new(FrequencyRule::Midpoint, n, 1.0).unwrap())
            .unwrap()
            .gamma_l;
        let spec = FrequencySpec::new(FrequencyRule::Midpoint, n, g).unwrap();
        let state = seed_state(&spec, SeedPhases::FromExactSolution).unwrap();
        let omegas = make_frequencies(&spec).unwrap();
        let field = locklab_core::dynamics::vector_field(&state.phases, &omegas).unwrap();
        for v in field {
            assert!(v.abs() < 1e-13, "N = {n}: {v:e}");
        }
    }
}

#[test]
fn simulated_verdict_brackets_exact_threshold() {
    let cfg = SimConfig64::default();
    for rule in [FrequencyRule::Endpoint, FrequencyRule::ZetaCorrected] {
        for n in [5usize, 12] {
            let g = locking_threshold_exact(&FrequencySpec64::new(rule, n, 1.0).unwrap())
                .unwrap()
                .gamma_l;
            let below = integrate(&FrequencySpec::new(rule, n, g * 0.99).unwrap(), &cfg).unwrap();
            let above = integrate(&FrequencySpec::new(rule, n, g * 1.01).unwrap(), &cfg).unwrap();
            assert_eq!(below.verdict, Verdict::Locked, "{rule:?} N = {n}");
            assert_eq!(above.verdict, Verdict::Unlocked, "{rule:?} N = {n}");
        }
    }
}

#[test]
fn locked_run_matches_self_consistent_order_parameter() {
    let spec = FrequencySpec64::new(FrequencyRule::Midpoint, 10, 0.7).unwrap();
    let out = integrate(&spec, &SimConfig64::default()).unwrap();
    assert_eq!(out.verdict, Verdict::Locked);
    // locked state: sin θ_j = ω_j / r, r = ⟨cos θ_j⟩
    let omegas = make_frequencies(&spec).unwrap();
    let wmax = omegas.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    let r = out.order_param_final;
    let nu = normalized(&spec).unwrap();
    let want = order_param_self_consistent(&nu, wmax / r).unwrap();
    assert!((r - want).abs() < 1e-6, "{r} vs {want}");
}

#[test]
fn exact_prediction_and_closed_forms_converge_together() {
    for n in [1_000usize, 100_000] {
        let exact = locking_threshold_exact(&FrequencySpec64::new(FrequencyRule::Midpoint, n, 1.0).unwrap()).unwrap();
        let pred = predict_gamma::<f64>(FrequencyRule::Midpoint, n).unwrap();
        let dec = decompose::<f64>(n, MeshMode::Exact).unwrap();
        let nf = n as f64;
        assert!((exact.gamma_l - pred.gamma_l).abs() * nf * nf < 1.0);
        assert!((dec.gamma_from_alpha - exact.gamma_l).abs() < 1e-12 * nf.sqrt());
        assert!(exact.gamma_l > FRAC_PI_4);
    }
}

#[test]
fn margin_changes_sign_once_across_root() {
    let spec = FrequencySpec64::new(FrequencyRule::Endpoint, 41, 1.0).unwrap();
    let nu = normalized(&spec).unwrap();
    let s = locking_threshold_exact(&spec).unwrap().sin_theta_max;
    assert!(lock_margin(&nu, s * (1.0 - 1e-9)).unwrap() > 0.0);
    assert!(lock_margin(&nu, s + (1.0 - s) * 1e-6).unwrap() < 0.0);
}

#[test]
fn single_precision_pipeline() {
    let spec = FrequencySpec::<f32>::new(FrequencyRule::Midpoint, 64, 1.0).unwrap();
    let g32 = locking_threshold_exact(&spec).unwrap().gamma_l as f64;
    let g64 = locking_threshold_exact(&FrequencySpec64::new(FrequencyRule::Midpoint, 64, 1.0).unwrap())
        .unwrap()
        .gamma_l;
    assert!((g32 - g64).abs() < 1e-5, "{g32} vs {g64}");
}
