mod common;

use std::fs;

use common::norm_cdf_oracle;
use rand::Rng;
use rand_distr::StandardNormal;
use threshdist::estimators::{DesignSpec, DesignVariant};
use threshdist::finite_dist::{as_mixture, MixtureDistribution};
use threshdist::mc_harness::{
    empirical_mixed_cdf, ks_distance, ks_exact_continuous, replication_rng, reproduce_figures, run_study,
    run_study_with, simulate_component, EtaRule, Panel, RunOptions, SimConfig, StudyEstimator,
};
use threshdist::{ComponentSpec, EstimatorKind, Scaling, VarianceMode};

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn config(estimator: StudyEstimator, variant: DesignVariant, reps: usize, seed: u64) -> SimConfig {
    SimConfig {
        design: DesignSpec { variant, n: 8, k: 4 },
        theta: vec![3.0, 1.5, 0.0, 0.0],
        sigma: 1.0,
        eta_rule: EtaRule::Default,
        estimator,
        reps,
        seed,
    }
}

#[test]
fn same_seed_same_result_at_any_parallelism() {
    let cfg = config(StudyEstimator::Lasso, DesignVariant::I { rho: 0.5 }, 3000, 99);
    let one = run_study_with(&cfg, RunOptions { threads: Some(1), skip_overlay: true }).unwrap();
    let many = run_study_with(&cfg, RunOptions { threads: Some(6), skip_overlay: true }).unwrap();
    assert_eq!(one, many);
    let other = run_study_with(&SimConfig { seed: 100, ..cfg }, RunOptions { threads: None, skip_overlay: true }).unwrap();
    assert_ne!(one.components[0].scaled_samples, other.components[0].scaled_samples);
}

#[test]
fn zero_noise_is_deterministic() {
    for feasible in [true, false] {
        let mut cfg = config(
            StudyEstimator::Threshold { kind: EstimatorKind::Hard, feasible },
            DesignVariant::II { c: 0.2 },
            50,
            1,
        );
        cfg.sigma = 0.0;
        let res = run_study(&cfg).unwrap();
        for c in &res.components {
            let first = c.scaled_samples[0];
            assert!(c.scaled_samples.iter().all(|&v| v == first));
        }
    }
}

#[test]
fn histogram_and_atom_account_for_all_mass() {
    for est in [StudyEstimator::Lasso, StudyEstimator::AdaptiveLasso] {
        let res = run_study(&config(est, DesignVariant::II { c: 2.0 }, 2000, 5)).unwrap();
        assert_eq!(res.failures, 0);
        assert!((res.condition_number - 81.0).abs() < 1e-9);
        for c in &res.components {
            assert!((c.zero_proportion + c.histogram.mass() - 1.0).abs() < 1e-12);
            assert!(c.histogram.heights.iter().all(|h| *h >= 0.0));
            let ov = c.overlay.as_ref().unwrap();
            assert_eq!(ov.grid.len(), 601);
            assert_eq!(ov.atom_location, c.atom_location);
        }
    }
}

#[test]
fn data_level_study_matches_sufficient_statistics() {
    // On a diagonal design the data-level thresholding estimator and the
    // sufficient-statistic sampler have the same law.
    let ortho = DesignVariant::I { rho: 0.0 };
    for kind in EstimatorKind::ALL {
        let cfg = config(StudyEstimator::Threshold { kind, feasible: true }, ortho, 20_000, 7);
        let res = run_study_with(&cfg, RunOptions { threads: None, skip_overlay: true }).unwrap();
        let eta = res.eta;
        for i in [1usize, 2] {
            let spec = ComponentSpec::new(8, 1.0, cfg.theta[i], 1.0, eta, Scaling::RootNOverXi).unwrap();
            let law = as_mixture(kind, VarianceMode::Unknown(4), &spec).unwrap();
            let a = empirical_mixed_cdf(&res.components[i].scaled_samples, spec.atom_location()).unwrap();
            let b = empirical_mixed_cdf(
                &simulate_component(kind, VarianceMode::Unknown(4), &spec, 20_000, 8).unwrap(),
                spec.atom_location(),
            )
            .unwrap();
            let g = grid(-6.0, 6.0, 241);
            assert!(ks_distance(&a, &law, &g).unwrap() < 0.02, "{kind} component {i}");
            assert!(ks_distance(&b, &law, &g).unwrap() < 0.02, "{kind} component {i}");
        }
    }
}

#[test]
fn consistent_tuning_localizes() {
    // Hard, known variance, zeta = 0.5, scale 1/(xi eta).
    let n = 10_000u64;
    let eta = (n as f64).powf(-0.25);
    let spec = ComponentSpec::new(n, 1.0, 0.5 * eta, 1.0, eta, Scaling::InverseXiEta).unwrap();
    let draws = simulate_component(EstimatorKind::Hard, VarianceMode::Known, &spec, 100_000, 3).unwrap();
    let near = |t: f64| draws.iter().filter(|&&v| (v - t).abs() <= 0.05).count() as f64 / draws.len() as f64;
    let (at_atom, at_zero) = (near(-0.5), near(0.0));
    assert!(at_atom + at_zero >= 0.99);
    // Limit weights are (1, 0) for |zeta| < 1.
    let se = (1e-12f64).max((at_atom * (1.0 - at_atom) / 1e5).sqrt());
    assert!((at_atom - 1.0).abs() <= 3.0 * se + 1e-4);
}

#[test]
fn normal_draws_pass_ks() {
    let draws: Vec<f64> = (0..100_000u64)
        .map(|r| replication_rng(2024, r).sample::<f64, _>(StandardNormal))
        .collect();
    let e = empirical_mixed_cdf(&draws, 0.0).unwrap();
    let d = ks_exact_continuous(&e, norm_cdf_oracle);
    assert!(d <= 1.36 / (1e5f64).sqrt() * 1.5, "{d}");
}

// Inverse-CDF sampling from the analytic mixture by bisection.
fn inverse_sample(law: &MixtureDistribution, u: f64) -> f64 {
    let a = law.atom_location();
    if law.cdf_left(a).unwrap() <= u && u <= law.cdf(a).unwrap() {
        return a;
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if law.cdf(mid).unwrap() < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[test]
fn ks_distance_of_inverse_sampled_law() {
    let spec = ComponentSpec::new(8, 1.0, 0.4, 1.0, 0.69, Scaling::RootNOverXi).unwrap();
    let law = as_mixture(EstimatorKind::Soft, VarianceMode::Known, &spec).unwrap();
    let draws: Vec<f64> = (0..1_000_000u64)
        .map(|r| inverse_sample(&law, replication_rng(5, r).random::<f64>()))
        .collect();
    let e = empirical_mixed_cdf(&draws, spec.atom_location()).unwrap();
    let g = grid(-8.0, 8.0, 801);
    assert!(ks_distance(&e, &law, &g).unwrap() <= 0.005);
    assert!((e.zero_fraction() - law.atom_weight()).abs() < 0.003);

    let wrong = as_mixture(EstimatorKind::Soft, VarianceMode::Known, &spec.with_theta(0.9).unwrap()).unwrap();
    assert!(ks_distance(&e, &wrong, &g).unwrap() > 0.05);
}

#[test]
fn identical_steps_have_zero_distance() {
    let s = [0.5, -1.0, 0.5, 2.0];
    let a = empirical_mixed_cdf(&s, 0.5).unwrap();
    let b = empirical_mixed_cdf(&s, 0.5).unwrap();
    let g = grid(-3.0, 3.0, 61);
    let d = g.iter().map(|&x| (a.cdf(x) - b.cdf(x)).abs()).fold(0.0f64, f64::max);
    assert_eq!(d, 0.0);
}

#[test]
fn reproduce_writes_every_panel_deterministically() {
    let panels = Panel::all();
    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let f1 = reproduce_figures(&panels, dir1.path(), 400, 77).unwrap();
    let f2 = reproduce_figures(&panels, dir2.path(), 400, 77).unwrap();
    // schema + 12 panels x (4 components x 2 csv + metadata)
    assert_eq!(f1.len(), 1 + 12 * 9);
    for (a, b) in f1.iter().zip(&f2) {
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap(), "{}", a.display());
    }
    let meta: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir1.path().join("panel11_lasso_design2_c2").join("metadata.json")).unwrap(),
    )
    .unwrap();
    assert!((meta["condition_number"].as_f64().unwrap() - 81.0).abs() < 1e-9);
    let comps = meta["components"].as_array().unwrap();
    for c in &comps[2..] {
        assert!((c["atom_weight_known"].as_f64().unwrap() - 0.95).abs() < 1e-12);
    }
}
