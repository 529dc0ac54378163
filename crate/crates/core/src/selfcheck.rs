//! Runtime invariant suites behind the `selfcheck` command.
//!
//! Each check recomputes a library identity through an independent route
//! (quadrature against closed forms, data-level simulation against analytic
//! laws) and reports the worst discrepancy it saw.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::asymptotics::{
    limit_distribution, limit_selection_probability, tv_distance, DofBehavior, LimitDistribution, RegimeParams,
    VarianceBehavior,
};
use crate::error::Result;
use crate::estimators::{
    read_matrix, threshold_estimate, write_matrix, Design, DesignSpec, DesignVariant, LassoConfig, PenaltyRule,
};
use crate::finite_dist::{
    ac_density, as_mixture, cdf, deletion_probability, ComponentSpec, EstimatorKind, Scaling, VarianceMode,
};
use crate::mc_harness::{
    empirical_mixed_cdf, ks_distance, ks_exact_continuous, run_study_with, simulate_component, EtaRule, RunOptions,
    SimConfig, StudyEstimator,
};
use crate::specfun::quadrature::{integrate, QuadOptions};
use crate::specfun::{
    chi_square_tail, integrate_rho, integrate_rho_range, noncentral_t_cdf, normal_cdf, normal_pdf, normal_quantile,
    ChiScaled,
};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy)]
pub struct SelfcheckOptions {
    /// Replications for the Monte Carlo checks.
    pub reps: usize,
    pub seed: u64,
}

impl Default for SelfcheckOptions {
    fn default() -> Self {
        SelfcheckOptions {
            reps: 100_000,
            seed: 20_240_601,
        }
    }
}

type CheckFn = fn(&SelfcheckOptions) -> Result<(bool, String)>;

const CHECKS: &[(&str, &str, CheckFn)] = &[
    ("specfun", "rho normalization", rho_normalization),
    ("specfun", "non-central t identity", noncentral_t_identity),
    ("specfun", "rescaled rho L1 convergence", rho_l1_convergence),
    ("specfun", "monotonicity", specfun_monotonicity),
    ("finite_dist", "smoothing identity", smoothing_identity),
    ("finite_dist", "sign symmetry", sign_symmetry),
    ("finite_dist", "jump equals deletion probability", jump_is_deletion_probability),
    ("finite_dist", "soft unknown closed and quadrature forms", soft_unknown_forms),
    ("finite_dist", "adaptive known cdf is integrated density", adaptive_known_integrates),
    ("finite_dist", "monotone cdf", finite_monotone),
    ("asymptotics", "weight coherence", weight_coherence),
    ("asymptotics", "reduction coherence", reduction_coherence),
    ("asymptotics", "convergence to conservative limits", conservative_convergence),
    ("asymptotics", "tv closeness trend", tv_trend),
    ("asymptotics", "soft chi fold normalization", soft_chi_fold_mass),
    ("asymptotics", "adaptive chi cdf jump", adaptive_chi_jump),
    ("estimators", "column scaling equivariance", column_equivariance),
    ("estimators", "ordering chains", ordering_chains),
    ("estimators", "feasible equals infeasible at sigma", feasible_at_sigma),
    ("estimators", "monte carlo law on diagonal design", data_level_law),
    ("mc_harness", "oracle agreement", oracle_agreement),
    ("mc_harness", "consistent tuning localization", consistent_localization),
    ("mc_harness", "oracle property", oracle_property),
    ("cli", "numeric round trip", numeric_round_trip),
];

/// Runs every check; errors inside a check count as failures.
pub fn run_all(opts: &SelfcheckOptions) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|&(module, name, f)| {
            let (passed, detail) = match f(opts) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome {
                module,
                name,
                passed,
                detail,
            }
        })
        .collect()
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn tuned_eta(n: u64) -> f64 {
    normal_quantile(0.975).expect("valid level") / (n as f64).sqrt()
}

fn within(worst: f64, tol: f64) -> (bool, String) {
    (worst <= tol, format!("max error {worst:.3e} (tol {tol:.0e})"))
}

fn rho_normalization(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for m in 1..=64 {
        worst = worst.max((integrate_rho(m, |_| 1.0, 1e-12)? - 1.0).abs());
    }
    Ok(within(worst, 1e-10))
}

fn noncentral_t_identity(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for m in [1u32, 2, 5, 20, 60] {
        for a in [-2.0, -0.3, 0.8, 2.5] {
            for b in [-1.5, 0.0, 0.7, 2.0] {
                let q = integrate_rho(m, |s| normal_cdf(a + b * s), 1e-11)?;
                worst = worst.max((q - noncentral_t_cdf(m, -a, b)?).abs());
            }
        }
    }
    Ok(within(worst, 1e-8))
}

/// L1 distance between the density of `sqrt(2m) (S - 1)` and the standard
/// normal density, where `S` has density `rho_m`.
pub fn rescaled_rho_l1(m: u32) -> Result<f64> {
    let rho = ChiScaled::new(m)?;
    let scale = (2.0 * m as f64).sqrt();
    let f = |t: f64| (rho.density(t / scale + 1.0) / scale - normal_pdf(t)).abs();
    // rho vanishes below t = -scale.
    let body = integrate(f, -scale, f64::INFINITY, &[0.0], &QuadOptions::abs(1e-11))?;
    Ok(body.value + normal_cdf(-scale))
}

fn rho_l1_convergence(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let d = [4u32, 16, 64, 256]
        .iter()
        .map(|&m| rescaled_rho_l1(m))
        .collect::<Result<Vec<_>>>()?;
    let ok = d.windows(2).all(|w| w[1] < w[0]) && d[3] <= 0.05 && d.iter().all(|v| v.is_finite());
    Ok((ok, format!("L1 at m = 4, 16, 64, 256: {d:.4?}")))
}

fn specfun_monotonicity(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut bad = Vec::new();
    let g = grid(-40.0, 40.0, 801);
    if g.windows(2).any(|w| normal_cdf(w[0]) > normal_cdf(w[1])) {
        bad.push("normal_cdf".to_string());
    }
    for m in [1u32, 4, 30, 200] {
        let t = grid(0.0, 400.0, 801)
            .into_iter()
            .map(|x| chi_square_tail(m, x))
            .collect::<Result<Vec<_>>>()?;
        if t.windows(2).any(|w| w[1] > w[0]) {
            bad.push(format!("chi_square_tail m={m}"));
        }
        for c in [-2.0, 0.0, 1.5] {
            let t = grid(-8.0, 8.0, 161)
                .into_iter()
                .map(|x| noncentral_t_cdf(m, c, x))
                .collect::<Result<Vec<_>>>()?;
            // Quadrature noise allowance.
            if t.windows(2).any(|w| w[1] < w[0] - 1e-10) {
                bad.push(format!("noncentral_t_cdf m={m} c={c}"));
            }
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { "all monotone".into() } else { bad.join(", ") }))
}

fn smoothing_identity(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let m = 4;
    let mut worst = 0.0f64;
    for theta in [0.0, 1.5, 3.0] {
        let s = ComponentSpec::new(8, 1.0, theta, 1.0, tuned_eta(8), Scaling::RootNOverXi)?;
        for kind in EstimatorKind::ALL {
            for x in grid(-6.0, 6.0, 61) {
                let direct = cdf(kind, VarianceMode::Unknown(m), &s, x)?;
                let smoothed = integrate_rho(
                    m,
                    |sc| {
                        s.with_eta(sc * s.eta())
                            .and_then(|t| cdf(kind, VarianceMode::Known, &t, x))
                            .unwrap_or(f64::NAN)
                    },
                    1e-11,
                )?;
                worst = worst.max((direct - smoothed).abs());
            }
        }
    }
    Ok(within(worst, 1e-7))
}

const MODES: [VarianceMode; 3] = [VarianceMode::Known, VarianceMode::Unknown(3), VarianceMode::Unknown(12)];

fn sign_symmetry(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for theta in [0.0, 0.6, 2.0] {
        let s = ComponentSpec::new(10, 1.3, theta, 1.0, 0.45, Scaling::RootNOverXi)?;
        let r = s.with_theta(-theta)?;
        for kind in EstimatorKind::ALL {
            for mode in MODES {
                worst = worst.max((deletion_probability(&s, mode)? - deletion_probability(&r, mode)?).abs());
                for x in grid(-5.0, 5.0, 41) {
                    worst = worst.max((ac_density(kind, mode, &s, x)? - ac_density(kind, mode, &r, -x)?).abs());
                }
            }
        }
    }
    Ok(within(worst, 1e-9))
}

fn jump_is_deletion_probability(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for theta in [0.0, 0.4, -1.2] {
        let s = ComponentSpec::new(10, 1.3, theta, 1.0, 0.45, Scaling::RootNOverXi)?;
        let x0 = s.atom_location();
        for kind in EstimatorKind::ALL {
            for mode in MODES {
                // The density is bounded, so the offset costs well under 1e-8.
                let left = cdf(kind, mode, &s, x0 - 1e-10 * x0.abs().max(1.0))?;
                let jump = cdf(kind, mode, &s, x0)? - left;
                worst = worst.max((jump - deletion_probability(&s, mode)?).abs());
            }
        }
    }
    Ok(within(worst, 1e-8))
}

fn soft_unknown_forms(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let m = 4;
    let mut worst = 0.0f64;
    for theta in [0.0, 1.5] {
        let s = ComponentSpec::new(8, 1.0, theta, 1.0, tuned_eta(8), Scaling::RootNOverXi)?;
        // alpha = sqrt(n)/xi with xi = sigma = 1 gives v = x + c0.
        let e = (8f64).sqrt() * s.eta();
        let c0 = (8f64).sqrt() * theta;
        for x in grid(-6.0, 6.0, 49) {
            let lib = cdf(EstimatorKind::Soft, VarianceMode::Unknown(m), &s, x)?;
            let v = x + c0;
            let sign = if x >= s.atom_location() { 1.0 } else { -1.0 };
            let closed = noncentral_t_cdf(m, c0 - v, sign * e)?;
            let quad = integrate_rho(m, |sc| normal_cdf(v - c0 + sign * e * sc), 1e-11)?;
            worst = worst.max((lib - closed).abs()).max((lib - quad).abs());
        }
    }
    Ok(within(worst, 1e-8))
}

fn adaptive_known_integrates(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let kind = EstimatorKind::AdaptiveSoft;
    let mode = VarianceMode::Known;
    let mut worst = 0.0f64;
    for theta in [0.0, 1.5] {
        let s = ComponentSpec::new(8, 1.0, theta, 1.0, tuned_eta(8), Scaling::RootNOverXi)?;
        let x0 = s.atom_location();
        let atom = deletion_probability(&s, mode)?;
        for x in [-6.0, -4.5, x0 - 0.5, x0 + 0.25, 0.0, 1.0, 4.0] {
            let mass = integrate(
                |t| ac_density(kind, mode, &s, t).unwrap_or(f64::NAN),
                f64::NEG_INFINITY,
                x,
                &[x0],
                &QuadOptions::abs(1e-10),
            )?
            .value;
            let want = if x >= x0 { mass + atom } else { mass };
            worst = worst.max((cdf(kind, mode, &s, x)? - want).abs());
        }
    }
    Ok(within(worst, 1e-7))
}

fn finite_monotone(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut bad = Vec::new();
    for theta in [0.0, 1.5, -0.7] {
        let s = ComponentSpec::new(8, 1.0, theta, 1.0, tuned_eta(8), Scaling::RootNOverXi)?;
        for kind in EstimatorKind::ALL {
            for mode in [VarianceMode::Known, VarianceMode::Unknown(4)] {
                let mut g = grid(-6.0, 6.0, 601);
                g.push(s.atom_location());
                g.sort_by(f64::total_cmp);
                let f = g.iter().map(|&x| cdf(kind, mode, &s, x)).collect::<Result<Vec<_>>>()?;
                if f.windows(2).any(|w| w[1] < w[0] - 1e-12) || f.iter().any(|p| !(0.0..=1.0).contains(p)) {
                    bad.push(format!("{kind} {mode:?} theta={theta}"));
                }
            }
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { "all six variants monotone".into() } else { bad.join(", ") }))
}

fn weight_coherence(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let dofs = [None, Some(DofBehavior::Fixed(1)), Some(DofBehavior::Fixed(5)), Some(DofBehavior::Diverging)];
    let mut worst = 0.0f64;
    for kind in EstimatorKind::ALL {
        for dof in dofs {
            let mode = if dof.is_some() { VarianceBehavior::Unknown } else { VarianceBehavior::Known };
            for nu in [-2.0, 0.0, 0.7] {
                for e in [0.4, 1.96] {
                    let mut p = RegimeParams::new().e(e).nu(nu);
                    p.dof = dof;
                    let l = limit_distribution(kind, mode, &p)?;
                    worst = worst.max((l.atom_weight_at(-nu)? - limit_selection_probability(&p, mode)?).abs());
                }
            }
            for z in [-3.0f64, -1.0, -0.4, 0.6, 1.0, 2.5] {
                // At |zeta| = 1 the shrinkage of kept values lands on the atom too.
                if kind != EstimatorKind::Hard && z.abs() == 1.0 {
                    continue;
                }
                let mut p = RegimeParams::new().e(f64::INFINITY).zeta(z).r(-0.3).d(0.5);
                p.dof = dof;
                let l = limit_distribution(kind, mode, &p)?;
                worst = worst.max((l.atom_weight_at(-z)? - limit_selection_probability(&p, mode)?).abs());
            }
        }
    }
    Ok(within(worst, 1e-10))
}

fn reduction_coherence(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for m in [1u32, 4, 30] {
        let mut fams = vec![
            LimitDistribution::HardSmoothed(0.8.into(), 0.0, m),
            LimitDistribution::SoftSmoothed((-1.1).into(), 0.0, m),
            LimitDistribution::AdaptiveSmoothed(0.3.into(), 0.0, m),
        ];
        for kind in EstimatorKind::ALL {
            let p = RegimeParams::new().e(0.0).nu(0.5).dof(DofBehavior::Fixed(m));
            fams.push(limit_distribution(kind, VarianceBehavior::Unknown, &p)?);
        }
        for l in &fams {
            for x in grid(-5.0, 5.0, 81) {
                worst = worst.max((l.cdf(x)? - normal_cdf(x)).abs());
            }
        }
    }
    Ok(within(worst, 1e-8))
}

fn conservative_convergence(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let n = 10_000u64;
    let rn = (n as f64).sqrt();
    let mut worst = 0.0f64;
    for kind in EstimatorKind::ALL {
        for (nu, e) in [(0.0, 1.96), (1.2, 0.8), (-2.5, 1.5)] {
            let spec = ComponentSpec::new(n, 1.0, nu / rn, 1.0, e / rn, Scaling::RootNOverXi)?;
            let l = limit_distribution(kind, VarianceBehavior::Known, &RegimeParams::new().e(e).nu(nu))?;
            let mut g = grid(-6.0, 6.0, 121);
            g.push(-nu);
            for x in g {
                worst = worst.max((cdf(kind, VarianceMode::Known, &spec, x)? - l.cdf(x)?).abs());
            }
        }
    }
    Ok(within(worst, 0.01))
}

/// `tv_distance(known, unknown)` at `eta = n^(-1/4)`, `m = n/2`, `xi = sigma = 1`.
pub fn tv_sequence(kind: EstimatorKind, theta: f64, ns: &[u64]) -> Result<Vec<f64>> {
    ns.iter()
        .map(|&n| {
            let spec = ComponentSpec::new(n, 1.0, theta, 1.0, (n as f64).powf(-0.25), Scaling::RootNOverXi)?;
            let k = as_mixture(kind, VarianceMode::Known, &spec)?;
            let u = as_mixture(kind, VarianceMode::unknown((n / 2) as u32)?, &spec)?;
            tv_distance(&k, &u)
        })
        .collect()
}

fn tv_trend(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut bad = Vec::new();
    for kind in EstimatorKind::ALL {
        for theta in [0.0, 0.3, 1.0] {
            let d = tv_sequence(kind, theta, &[20, 80, 320, 1280])?;
            if !d.windows(2).all(|w| w[1] < w[0]) {
                bad.push(format!("{kind} theta={theta}: {d:?}"));
            }
        }
    }
    Ok((bad.is_empty(), if bad.is_empty() { "strictly decreasing".into() } else { bad.join("; ") }))
}

fn soft_chi_fold_mass(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for m in [1u32, 4, 12] {
        for z in [0.3, 1.0, 1.7] {
            for zeta in [z, -z] {
                let l = LimitDistribution::SoftChiFold(zeta.into(), m);
                // Either branch of the indicator integrates rho over (0, |zeta|).
                let ac = integrate_rho_range(m, |_| 1.0, 0.0, z, &[], 1e-12)?.value;
                worst = worst.max((l.atom_weight_at(-zeta)? + ac - 1.0).abs());
            }
        }
    }
    Ok(within(worst, 1e-8))
}

fn adaptive_chi_jump(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for m in [1u32, 4, 9] {
        for zeta in [-1.4, -0.5, 0.5, 2.0] {
            let l = LimitDistribution::AdaptiveChiCdf(zeta, m);
            let jump = l.cdf(-zeta)? - l.cdf(-zeta - 1e-13)?;
            worst = worst.max((jump - chi_square_tail(m, m as f64 * zeta * zeta)?).abs());
        }
    }
    Ok(within(worst, 1e-8))
}

fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, k, |_, _| rng.sample(StandardNormal))
}

fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Orthogonal columns with random lengths, so `X'X` is diagonal.
fn diagonal_design(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    let mut q = normal_matrix(rng, n, k).qr().q();
    for j in 0..k {
        let len: f64 = rng.random_range(0.5..4.0);
        q.column_mut(j).scale_mut(len);
    }
    q
}

fn scale_column(x: &DMatrix<f64>, j: usize, c: f64) -> DMatrix<f64> {
    let mut s = x.clone();
    s.column_mut(j).scale_mut(c);
    s
}

fn scaled_mismatch(a: &DVector<f64>, b: &DVector<f64>, j: usize, c: f64) -> f64 {
    (0..a.len())
        .map(|i| {
            let want = if i == j { a[i] / c } else { a[i] };
            (b[i] - want).abs() / (1.0 + want.abs())
        })
        .fold(0.0, f64::max)
}

fn column_equivariance(opts: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let j = case % 4;
        let c = if case % 2 == 0 { 2.7 } else { -0.4 };
        let x = diagonal_design(&mut rng, 8, 4);
        let y = normal_vector(&mut rng, 8) * 2.0;
        let (d0, d1) = (Design::new(x.clone())?, Design::new(scale_column(&x, j, c))?);
        for kind in EstimatorKind::ALL {
            for sigma in [None, Some(1.3)] {
                let e0 = d0.thresholding(kind, &y, 0.8, sigma)?;
                let e1 = d1.thresholding(kind, &y, 0.8, sigma)?;
                worst = worst.max(scaled_mismatch(&e0, &e1, j, c));
            }
        }
        let xg = normal_matrix(&mut rng, 12, 4);
        let yg = normal_vector(&mut rng, 12) * 2.0 + &xg * DVector::from_column_slice(&[1.5, -0.5, 0.0, 2.0]);
        let (g0, g1) = (Design::new(xg.clone())?, Design::new(scale_column(&xg, j, c))?);
        let sh = g0.least_squares(&yg)?.sigma2.expect("n > k").sqrt();
        let fits = [
            (PenaltyRule::EtaXiInverse(0.3), false),
            (PenaltyRule::EtaPsi(0.3), false),
            (PenaltyRule::Constant(0.3), true),
        ];
        for (rule, adaptive) in fits {
            let cfg = LassoConfig::new(rule);
            let (l0, l1) = if adaptive {
                (g0.adaptive_lasso(&yg, &cfg, sh)?, g1.adaptive_lasso(&yg, &cfg, sh)?)
            } else {
                (g0.lasso(&yg, &cfg, sh)?, g1.lasso(&yg, &cfg, sh)?)
            };
            worst = worst.max(scaled_mismatch(&l0, &l1, j, c));
            let fit_gap = (g0.x() * &l0 - g1.x() * &l1).amax() / (1.0 + (g0.x() * &l0).amax());
            worst = worst.max(fit_gap);
        }
    }
    Ok(within(worst, 1e-8))
}

fn ordering_chains(_: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut violations = 0usize;
    let mut total = 0usize;
    for ls in grid(0.0, 10.0, 41) {
        for scale in [0.01, 0.5, 1.0, 3.0] {
            for xi in [0.1, 1.0, 3.0] {
                for eta in [0.01, 0.3, 1.0, 2.0] {
                    let f = |k, v| threshold_estimate(k, v, scale, xi, eta);
                    let (s, a, h) = (f(EstimatorKind::Soft, ls), f(EstimatorKind::AdaptiveSoft, ls), f(EstimatorKind::Hard, ls));
                    let (sn, an, hn) =
                        (f(EstimatorKind::Soft, -ls), f(EstimatorKind::AdaptiveSoft, -ls), f(EstimatorKind::Hard, -ls));
                    total += 1;
                    if !(0.0 <= s && s <= a && a <= h && h <= ls && -ls <= hn && hn <= an && an <= sn && sn <= 0.0) {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok((violations == 0, format!("{violations} violations in {total} inputs")))
}

fn feasible_at_sigma(opts: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let mut mismatches = 0usize;
    for _ in 0..50 {
        let d = Design::new(normal_matrix(&mut rng, 10, 4))?;
        let y = normal_vector(&mut rng, 10);
        let sh = d.least_squares(&y)?.sigma2.expect("n > k").sqrt();
        for kind in EstimatorKind::ALL {
            if d.thresholding(kind, &y, 0.5, None)? != d.thresholding(kind, &y, 0.5, Some(sh))? {
                mismatches += 1;
            }
        }
    }
    Ok((mismatches == 0, format!("{mismatches} mismatches in 150 comparisons")))
}

const DIAGONAL: DesignVariant = DesignVariant::I { rho: 0.0 };
const STUDY_THETA: [f64; 4] = [3.0, 1.5, 0.0, 0.0];

/// KS distance and zero-proportion z-score of one coordinate's draws
/// against its analytic law.
pub fn law_agreement(
    samples: &[f64],
    kind: EstimatorKind,
    mode: VarianceMode,
    spec: &ComponentSpec,
) -> Result<(f64, f64)> {
    let law = as_mixture(kind, mode, spec)?;
    let emp = empirical_mixed_cdf(samples, spec.atom_location())?;
    let ks = ks_distance(&emp, &law, &grid(-6.0, 6.0, 601))?;
    let p = law.atom_weight();
    let se = (p * (1.0 - p) / samples.len() as f64).sqrt();
    let z = if se > 0.0 {
        (emp.zero_fraction() - p).abs() / se
    } else if emp.zero_fraction() == p {
        0.0
    } else {
        f64::INFINITY
    };
    Ok((ks, z))
}

fn data_level_law(opts: &SelfcheckOptions) -> Result<(bool, String)> {
    let (mut worst_ks, mut worst_z) = (0.0f64, 0.0f64);
    for kind in EstimatorKind::ALL {
        for feasible in [false, true] {
            let cfg = SimConfig {
                design: DesignSpec::new(DIAGONAL, 8, 4)?,
                theta: STUDY_THETA.to_vec(),
                sigma: 1.0,
                eta_rule: EtaRule::Default,
                estimator: StudyEstimator::Threshold { kind, feasible },
                reps: opts.reps,
                seed: opts.seed,
            };
            let res = run_study_with(&cfg, RunOptions { threads: None, skip_overlay: true })?;
            let mode = if feasible { VarianceMode::Unknown(4) } else { VarianceMode::Known };
            for (i, comp) in res.components.iter().enumerate() {
                let spec = ComponentSpec::new(8, res.xi[i], STUDY_THETA[i], 1.0, res.eta, Scaling::RootNOverXi)?;
                let (ks, z) = law_agreement(&comp.scaled_samples, kind, mode, &spec)?;
                worst_ks = worst_ks.max(ks);
                worst_z = worst_z.max(z);
            }
        }
    }
    Ok((
        worst_ks <= 0.01 && worst_z <= 3.0,
        format!("max KS {worst_ks:.4}, max zero-proportion z {worst_z:.2} over {} reps", opts.reps),
    ))
}

fn oracle_agreement(opts: &SelfcheckOptions) -> Result<(bool, String)> {
    let (mut worst_ks, mut worst_z) = (0.0f64, 0.0f64);
    for kind in EstimatorKind::ALL {
        for mode in [VarianceMode::Known, VarianceMode::Unknown(4)] {
            for (i, &theta) in STUDY_THETA.iter().enumerate().take(3) {
                let spec = ComponentSpec::new(8, 1.0, theta, 1.0, tuned_eta(8), Scaling::RootNOverXi)?;
                let draws = simulate_component(kind, mode, &spec, opts.reps, opts.seed.wrapping_add(i as u64))?;
                let (ks, z) = law_agreement(&draws, kind, mode, &spec)?;
                worst_ks = worst_ks.max(ks);
                worst_z = worst_z.max(z);
            }
        }
    }
    Ok((
        worst_ks <= 0.01 && worst_z <= 3.0,
        format!("max KS {worst_ks:.4}, max zero-proportion z {worst_z:.2} over {} reps", opts.reps),
    ))
}

fn consistent_localization(opts: &SelfcheckOptions) -> Result<(bool, String)> {
    let n = 10_000u64;
    let eta = (n as f64).powf(-0.25);
    let zeta = 0.5;
    let spec = ComponentSpec::new(n, 1.0, zeta * eta, 1.0, eta, Scaling::InverseXiEta)?;
    let draws = simulate_component(EstimatorKind::Hard, VarianceMode::Known, &spec, opts.reps, opts.seed)?;
    let frac = |t: f64| draws.iter().filter(|&&v| (v - t).abs() <= 0.05).count() as f64 / draws.len() as f64;
    let (at_atom, at_zero) = (frac(-zeta), frac(0.0));
    // |zeta| < 1: all limit mass sits at -zeta.
    let p = limit_selection_probability(&RegimeParams::new().e(f64::INFINITY).zeta(zeta), VarianceBehavior::Known)?;
    let se = (p * (1.0 - p) / draws.len() as f64).sqrt().max(1.0 / draws.len() as f64);
    let ok = at_atom + at_zero >= 0.99 && (at_atom - p).abs() <= 3.0 * se;
    Ok((ok, format!("mass near -zeta {at_atom:.5}, near 0 {at_zero:.5}, limit weight {p}")))
}

// The adaptive estimator's finite-n shift is sqrt(n) eta^2 / theta in
// scaled units; theta = 3 keeps it well below the KS bound at n = 1e4.
fn oracle_property(opts: &SelfcheckOptions) -> Result<(bool, String)> {
    let n = 10_000u64;
    let eta = (n as f64).powf(-0.4);
    let theta = 3.0;
    let spec = ComponentSpec::new(n, 1.0, theta, 1.0, eta, Scaling::RootNOverXi)?;
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in [EstimatorKind::Hard, EstimatorKind::AdaptiveSoft] {
        let draws = simulate_component(kind, VarianceMode::Known, &spec, opts.reps, opts.seed)?;
        let ks = ks_exact_continuous(&empirical_mixed_cdf(&draws, spec.atom_location())?, normal_cdf);
        ok &= ks <= 0.02;
        parts.push(format!("{kind} KS {ks:.4}"));
    }
    Ok((ok, parts.join(", ")))
}

fn numeric_round_trip(opts: &SelfcheckOptions) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut values: Vec<f64> = (0..2000)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * 10f64.powi(rng.random_range(-300..300))
        })
        .collect();
    values.extend([0.0, -0.0, f64::MIN_POSITIVE, f64::MAX, 5e-324, 0.1, 1.0 / 3.0]);
    let bad = values
        .iter()
        .filter(|v| format!("{v:?}").parse::<f64>().map(|p| p.to_bits() != v.to_bits()).unwrap_or(true))
        .count();
    let x = DMatrix::from_row_slice(2, 3, &values[..6]);
    let mut buf = Vec::new();
    write_matrix(&mut buf, &x)?;
    let back = read_matrix(buf.as_slice())?;
    let ok = bad == 0 && back == x;
    Ok((ok, format!("{bad} of {} values failed to round-trip", values.len())))
}
