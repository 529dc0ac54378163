//! Exact finite-sample laws of `alpha * (estimate - theta) / sigma` for one
//! coordinate of the hard, soft and adaptive soft thresholding estimators.
//!
//! Internally everything is expressed through the standardized least-squares
//! coordinate `v = a x + c0`, where `a = sqrt(n) / (alpha xi)` and
//! `c0 = sqrt(n) theta / (sigma xi)`, and the standardized threshold
//! `E = sqrt(n) eta`. The estimator is zero exactly when `|v| <= E s`, with
//! `s = sigma_hat / sigma` (identically 1 when the variance is known).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::specfun::quadrature::{integrate, QuadOptions};
use crate::specfun::{integrate_rho_range, noncentral_t_cdf, normal_pdf, phi, ChiScaled, ExtReal, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    Hard,
    Soft,
    AdaptiveSoft,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::Hard, EstimatorKind::Soft, EstimatorKind::AdaptiveSoft];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Hard => "hard",
            EstimatorKind::Soft => "soft",
            EstimatorKind::AdaptiveSoft => "adaptive",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hard" => Ok(EstimatorKind::Hard),
            "soft" => Ok(EstimatorKind::Soft),
            "adaptive" | "adaptive-soft" | "adaptivesoft" => Ok(EstimatorKind::AdaptiveSoft),
            _ => Err(invalid(format!("unknown estimator kind {s:?}"))),
        }
    }
}

/// Whether `sigma` is known or estimated from `m = n - k` residual degrees of
/// freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarianceMode {
    Known,
    Unknown(u32),
}

impl VarianceMode {
    pub fn unknown(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(invalid("unknown-variance mode needs m = n - k >= 1"));
        }
        Ok(VarianceMode::Unknown(m))
    }

    fn check(self) -> Result<()> {
        match self {
            VarianceMode::Unknown(0) => Err(invalid("unknown-variance mode needs m = n - k >= 1")),
            _ => Ok(()),
        }
    }
}

/// How the scaling factor `alpha` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scaling {
    /// `alpha = sqrt(n) / xi`.
    RootNOverXi,
    /// `alpha = 1 / (xi eta)`.
    InverseXiEta,
    Value(f64),
}

impl FromStr for Scaling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "root-n-over-xi" => Ok(Scaling::RootNOverXi),
            "inverse-xi-eta" => Ok(Scaling::InverseXiEta),
            v => v
                .parse::<f64>()
                .map(Scaling::Value)
                .map_err(|_| invalid(format!("unknown scaling {s:?}"))),
        }
    }
}

/// Problem data for one coordinate. `alpha` is resolved at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    n: u64,
    xi: f64,
    theta: f64,
    sigma: f64,
    eta: f64,
    alpha: f64,
}

impl ComponentSpec {
    pub fn new(n: u64, xi: f64, theta: f64, sigma: f64, eta: f64, scaling: Scaling) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        for (name, v) in [("xi", xi), ("sigma", sigma), ("eta", eta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !theta.is_finite() {
            return Err(invalid("theta must be finite"));
        }
        let alpha = match scaling {
            Scaling::RootNOverXi => (n as f64).sqrt() / xi,
            Scaling::InverseXiEta => 1.0 / (xi * eta),
            Scaling::Value(a) => a,
        };
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be positive and finite, got {alpha}")));
        }
        Ok(ComponentSpec {
            n,
            xi,
            theta,
            sigma,
            eta,
            alpha,
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same spec with a different `eta`; `alpha` keeps its resolved value.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        ComponentSpec::new(self.n, self.xi, self.theta, self.sigma, eta, Scaling::Value(self.alpha))
    }

    pub fn with_theta(&self, theta: f64) -> Result<Self> {
        ComponentSpec::new(self.n, self.xi, theta, self.sigma, self.eta, Scaling::Value(self.alpha))
    }

    /// `-alpha theta / sigma`, where the estimator sits when it is zero.
    pub fn atom_location(&self) -> f64 {
        -self.alpha * self.theta / self.sigma
    }

    fn root_n(&self) -> f64 {
        (self.n as f64).sqrt()
    }

    fn a(&self) -> f64 {
        self.root_n() / (self.alpha * self.xi)
    }

    fn c0(&self) -> f64 {
        self.root_n() * self.theta / (self.sigma * self.xi)
    }

    fn big_e(&self) -> f64 {
        self.root_n() * self.eta
    }

    /// Standardized coordinate at `x`; exactly zero at the atom.
    fn v(&self, x: f64) -> f64 {
        if x == self.atom_location() {
            0.0
        } else {
            self.a() * x + self.c0()
        }
    }

    /// Points where the law changes form, in `x` units.
    fn breakpoints(&self, kind: EstimatorKind, _mode: VarianceMode) -> Vec<f64> {
        let mut b = vec![self.atom_location()];
        // Hard: the density jumps at |v| = E (known) or turns steeply there (unknown).
        if kind == EstimatorKind::Hard {
            let (a, c0, e) = (self.a(), self.c0(), self.big_e());
            b.push((e - c0) / a);
            b.push((-e - c0) / a);
        }
        b
    }
}

/// `Pr(estimate == 0)`, the same for all three kinds.
pub fn deletion_probability(spec: &ComponentSpec, mode: VarianceMode) -> Result<f64> {
    mode.check()?;
    let c0 = spec.c0();
    let e = spec.big_e();
    let p = match mode {
        VarianceMode::Known => phi(e - c0) - phi(-e - c0),
        VarianceMode::Unknown(m) => noncentral_t_cdf(m, c0, e)? - noncentral_t_cdf(m, c0, -e)?,
    };
    Ok(p.clamp(0.0, 1.0))
}

/// `(z1, z2)` with `z1 <= z2`; `CDF = Phi(z2)` right of the atom and
/// `Phi(z1)` left of it for the adaptive estimator.
pub fn z_bounds(spec: &ComponentSpec, x: f64, y: f64) -> (f64, f64) {
    let u = x / spec.alpha + spec.theta / spec.sigma;
    let w = x / spec.alpha - spec.theta / spec.sigma;
    let rn = spec.root_n();
    let centre = 0.5 * rn * w / spec.xi;
    let half = 0.5 * u / spec.xi;
    let root = rn * (half * half + y * y).sqrt();
    (centre - root, centre + root)
}

// Known-variance CDF at standardized threshold `e`, branch chosen by `nonneg`.
pub(crate) fn known_cdf(kind: EstimatorKind, v: f64, nonneg: bool, c0: f64, e: f64) -> f64 {
    match kind {
        EstimatorKind::Hard => {
            if nonneg {
                if v > e {
                    phi(v - c0)
                } else {
                    phi(e - c0)
                }
            } else if v < -e {
                phi(v - c0)
            } else {
                phi(-e - c0)
            }
        }
        EstimatorKind::Soft => {
            if nonneg {
                phi(v - c0 + e)
            } else {
                phi(v - c0 - e)
            }
        }
        EstimatorKind::AdaptiveSoft => {
            let root = (0.25 * v * v + e * e).sqrt();
            if nonneg {
                phi(0.5 * v - c0 + root)
            } else {
                phi(0.5 * v - c0 - root)
            }
        }
    }
}

// Known-variance density in v units (multiply by `a` for x units).
pub(crate) fn known_density_v(kind: EstimatorKind, v: f64, c0: f64, e: f64) -> f64 {
    match kind {
        EstimatorKind::Hard => {
            if v.abs() > e {
                normal_pdf(v - c0)
            } else {
                0.0
            }
        }
        EstimatorKind::Soft => {
            if v > 0.0 {
                normal_pdf(v - c0 + e)
            } else if v < 0.0 {
                normal_pdf(v - c0 - e)
            } else {
                0.0
            }
        }
        EstimatorKind::AdaptiveSoft => {
            if v == 0.0 {
                return 0.0;
            }
            let root = (0.25 * v * v + e * e).sqrt();
            let t = 0.5 * v / root;
            if v > 0.0 {
                0.5 * normal_pdf(0.5 * v - c0 + root) * (1.0 + t)
            } else {
                0.5 * normal_pdf(0.5 * v - c0 - root) * (1.0 - t)
            }
        }
    }
}

/// Distribution function at `x` (right-continuous).
pub fn cdf(kind: EstimatorKind, mode: VarianceMode, spec: &ComponentSpec, x: impl Into<ExtReal>) -> Result<f64> {
    mode.check()?;
    let x = match x.into() {
        ExtReal::NegInf => return Ok(0.0),
        ExtReal::PosInf => return Ok(1.0),
        ExtReal::Finite(x) => x,
    };
    let nonneg = x >= spec.atom_location();
    let v = spec.v(x);
    let c0 = spec.c0();
    let e = spec.big_e();
    let p = match mode {
        VarianceMode::Known => known_cdf(kind, v, nonneg, c0, e),
        VarianceMode::Unknown(m) => unknown_cdf(kind, m, v, nonneg, c0, e)?,
    };
    Ok(p.clamp(0.0, 1.0))
}

pub(crate) fn unknown_cdf(kind: EstimatorKind, m: u32, v: f64, nonneg: bool, c0: f64, e: f64) -> Result<f64> {
    match kind {
        EstimatorKind::Hard => {
            if e == 0.0 {
                return Ok(phi(v - c0));
            }
            let rho = ChiScaled::new(m)?;
            // Nonzero estimate iff s < |v| / E.
            let cut = v.abs() / e;
            let kept = phi(v - c0) * rho.cdf(cut);
            let sign = if nonneg { 1.0 } else { -1.0 };
            let zeroed = integrate_rho_range(m, |s| phi(sign * e * s - c0), cut, f64::INFINITY, &[], DEFAULT_TOL)?;
            Ok(kept + zeroed.value)
        }
        EstimatorKind::Soft => {
            let threshold = if nonneg { e } else { -e };
            noncentral_t_cdf(m, c0 - v, threshold)
        }
        EstimatorKind::AdaptiveSoft => {
            let bp = adaptive_breakpoint(v, nonneg, c0, e);
            Ok(integrate_rho_range(
                m,
                |s| known_cdf(kind, v, nonneg, c0, e * s),
                0.0,
                f64::INFINITY,
                &bp,
                DEFAULT_TOL,
            )?
            .value)
        }
    }
}

// Value of s at which the Phi argument of the adaptive CDF crosses zero.
fn adaptive_breakpoint(v: f64, nonneg: bool, c0: f64, e: f64) -> Vec<f64> {
    // 0.5 v - c0 +- sqrt(v^2/4 + E^2 s^2) = 0  <=>  E^2 s^2 = (c0 - v/2)^2 - v^2/4
    let d = c0 - 0.5 * v;
    let rhs = d * d - 0.25 * v * v;
    if rhs > 0.0 && ((nonneg && d > 0.0) || (!nonneg && d < 0.0)) {
        vec![rhs.sqrt() / e]
    } else {
        vec![]
    }
}

// Unknown-variance density in v units.
pub(crate) fn unknown_density_v(kind: EstimatorKind, m: u32, v: f64, c0: f64, e: f64) -> Result<f64> {
    match kind {
        EstimatorKind::Hard => Ok(normal_pdf(v - c0) * ChiScaled::new(m)?.cdf(v.abs() / e)),
        _ => {
            if v == 0.0 {
                return Ok(0.0);
            }
            Ok(integrate_rho_range(m, |s| known_density_v(kind, v, c0, e * s), 0.0, f64::INFINITY, &[], DEFAULT_TOL)?.value)
        }
    }
}

/// Density of the absolutely continuous part at `x`.
pub fn ac_density(kind: EstimatorKind, mode: VarianceMode, spec: &ComponentSpec, x: f64) -> Result<f64> {
    mode.check()?;
    if !x.is_finite() {
        return Ok(0.0);
    }
    let a = spec.a();
    let v = spec.v(x);
    let c0 = spec.c0();
    let e = spec.big_e();
    let d = match mode {
        VarianceMode::Known => known_density_v(kind, v, c0, e),
        VarianceMode::Unknown(m) => unknown_density_v(kind, m, v, c0, e)?,
    };
    Ok((a * d).max(0.0))
}

/// A law with one atom plus an absolutely continuous part.
#[derive(Clone)]
pub struct MixtureDistribution {
    atom_location: f64,
    atom_weight: f64,
    density: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>,
    cdf: Arc<dyn Fn(ExtReal) -> Result<f64> + Send + Sync>,
    breakpoints: Vec<f64>,
    scale: f64,
}

impl fmt::Debug for MixtureDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixtureDistribution")
            .field("atom_location", &self.atom_location)
            .field("atom_weight", &self.atom_weight)
            .field("breakpoints", &self.breakpoints)
            .field("scale", &self.scale)
            .finish_non_exhaustive()
    }
}

impl MixtureDistribution {
    pub fn new(
        atom_location: f64,
        atom_weight: f64,
        density: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
        cdf: impl Fn(ExtReal) -> Result<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&atom_weight) {
            return Err(invalid(format!("atom weight {atom_weight} outside [0, 1]")));
        }
        Ok(MixtureDistribution {
            atom_location,
            atom_weight,
            density: Arc::new(density),
            cdf: Arc::new(cdf),
            breakpoints: vec![atom_location],
            scale: 1.0,
        })
    }

    /// Points where the density may jump or kink; used to seed quadrature.
    pub fn with_breakpoints(mut self, mut breakpoints: Vec<f64>) -> Self {
        breakpoints.push(self.atom_location);
        breakpoints.retain(|b| b.is_finite());
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        self.breakpoints = breakpoints;
        self
    }

    /// Typical spread of the continuous part.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn atom_location(&self) -> f64 {
        self.atom_location
    }
    pub fn atom_weight(&self) -> f64 {
        self.atom_weight
    }
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn ac_density(&self, x: f64) -> Result<f64> {
        (self.density)(x)
    }

    pub fn cdf(&self, x: impl Into<ExtReal>) -> Result<f64> {
        (self.cdf)(x.into())
    }

    /// `Pr(X < x)`.
    pub fn cdf_left(&self, x: f64) -> Result<f64> {
        let c = self.cdf(x)?;
        if x == self.atom_location {
            Ok((c - self.atom_weight).max(0.0))
        } else {
            Ok(c)
        }
    }

    /// `int density` over the real line.
    pub fn ac_mass(&self, tol: f64) -> Result<f64> {
        let opts = QuadOptions {
            abs_tol: tol,
            tail_scale: self.scale,
            ..Default::default()
        };
        let f = |x: f64| self.ac_density(x).unwrap_or(f64::NAN);
        let e = integrate(f, f64::NEG_INFINITY, f64::INFINITY, &self.breakpoints, &opts)?;
        if e.value.is_nan() {
            return Err(invalid("density evaluation failed during integration"));
        }
        Ok(e.value)
    }
}

/// The law of one coordinate packaged as a mixture.
pub fn as_mixture(kind: EstimatorKind, mode: VarianceMode, spec: &ComponentSpec) -> Result<MixtureDistribution> {
    mode.check()?;
    let weight = deletion_probability(spec, mode)?;
    let s1 = *spec;
    let s2 = *spec;
    Ok(MixtureDistribution::new(
        spec.atom_location(),
        weight,
        move |x| ac_density(kind, mode, &s1, x),
        move |x| cdf(kind, mode, &s2, x),
    )?
    .with_breakpoints(spec.breakpoints(kind, mode))
    .with_scale(1.0 / spec.a()))
}
