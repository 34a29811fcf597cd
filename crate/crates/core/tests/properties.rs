//! Properties of whole runs on random piecewise-constant data.

mod common;

use common::{inert_langmuir, langmuir, pc, random_data, seeded};
use proptest::prelude::*;
use psa_chroma::diagnostics::{
    bv_report, check_interaction_ledger, interaction_constant, stratification_gap, triangular_inequality_probe,
    wave_curve_constant, LedgerLimits,
};
use psa_chroma::{godunov_march, l1_slice_distance, track, FtaData, Model, TrackerConfig};

fn grid(end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| end * k as f64 / n as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bv_bounds_hold_on_random_langmuir_runs(seed in any::<u64>()) {
        let m = langmuir();
        let data = random_data(&mut seeded(seed), 4);
        let cfg = TrackerConfig::new(0.1);
        let traj = track(&m, &data, cfg).unwrap();
        let constants = (wave_curve_constant(&m, 100).unwrap(), interaction_constant(&m, 16).unwrap());
        let g = grid(2.0, 40);
        let r = bv_report(&m, &data, &traj, cfg, &g, &g, constants).unwrap();
        prop_assert!(r.c_within_bound && r.ln_u_within_bound && r.ln_v_within_bound, "{r:?}");
    }

    #[test]
    fn velocity_rescaling_leaves_v_unchanged(seed in any::<u64>()) {
        let m = Model::reference_linear();
        let data = random_data(&mut seeded(seed), 4);
        let cfg = TrackerConfig::new(0.1);
        let traj = track(&m, &data, cfg).unwrap();
        let ts: Vec<f64> = (0..30).map(|k| 2.0 * (k as f64 + 0.5) / 30.0).collect();
        let [gv, gc] = stratification_gap(&m, &data, &traj, cfg, &ts, &ts).unwrap();
        prop_assert!(gv <= 1e-12 && gc <= 1e-12, "{gv} {gc}");
    }
}

#[test]
fn inert_carrier_ledger_uses_the_quadratic_bound() {
    // The inert carrier breaks the triangular inequality, so shock merges may raise TV ln u.
    let m = inert_langmuir();
    assert!(triangular_inequality_probe(&m, 10_000, 7).unwrap() < 0.0);
    let limits = LedgerLimits::for_model(&m, 30, 0.1, 0.0).unwrap();
    assert!(!limits.triangle_holds && limits.interaction_constant > 0.0);
    let mut rng = seeded(11);
    let mut grew = 0;
    for _ in 0..200 {
        let data = random_data(&mut rng, 6);
        let traj = track(&m, &data, TrackerConfig::new(0.1)).unwrap();
        grew += traj.interactions.iter().filter(|r| r.tv_l_after > r.tv_l_before + 1e-12).count();
        let lim = LedgerLimits { datum_variation: data.datum_variation(), ..limits };
        let report = check_interaction_ledger(&traj.interactions, &lim);
        assert!(report.passed(), "{:?}", report.violations.first());
    }
    assert!(grew > 0, "no interaction increased TV ln u");
}

#[test]
fn godunov_approaches_front_tracking() {
    // A Riemann problem at the corner followed by a later boundary shock.
    let m = Model::reference_linear();
    let data = FtaData::new(pc(&[], &[0.3], 1.0), pc(&[0.3], &[0.8, 0.1], 1.0), pc(&[], &[1.0], 1.0)).unwrap();
    let traj = track(&m, &data, TrackerConfig::new(0.005)).unwrap();
    let gaps: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| {
            let g = godunov_march(&m, &data, dt, 1.0, 0.9, &[0.5]).unwrap();
            l1_slice_distance(&g, &traj, 0.5, 1.0, 2_000).unwrap()[0]
        })
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[2] < 0.02, "{gaps:?}");
}
