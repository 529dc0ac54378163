//! Limits of the finite-sample laws along moving parameter sequences.
//!
//! The caller supplies the limiting constants in [`RegimeParams`]; every
//! dispatch below matches one proven case or refuses with
//! [`Error::NotCovered`] / [`Error::MissingParameter`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::finite_dist::{known_cdf, unknown_cdf, EstimatorKind, MixtureDistribution};
use crate::specfun::quadrature::{integrate, QuadOptions};
use crate::specfun::{chi2_tail, noncentral_t_cdf, normal_cdf, phi, ChiScaled, ExtReal};

/// Behaviour of the residual degrees of freedom `n - k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DofBehavior {
    Fixed(u32),
    Diverging,
}

/// Whether the limit is for the known- or estimated-variance estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceBehavior {
    Known,
    Unknown,
}

/// Limiting constants of a parameter sequence. Absent fields are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub e: Option<ExtReal>,
    pub nu: Option<ExtReal>,
    pub zeta: Option<ExtReal>,
    pub r: Option<ExtReal>,
    pub d: Option<ExtReal>,
    pub r_prime: Option<ExtReal>,
    pub w: Option<ExtReal>,
    pub dof: Option<DofBehavior>,
}

impl RegimeParams {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn e(mut self, v: impl Into<ExtReal>) -> Self {
        self.e = Some(v.into());
        self
    }
    pub fn nu(mut self, v: impl Into<ExtReal>) -> Self {
        self.nu = Some(v.into());
        self
    }
    pub fn zeta(mut self, v: impl Into<ExtReal>) -> Self {
        self.zeta = Some(v.into());
        self
    }
    pub fn r(mut self, v: impl Into<ExtReal>) -> Self {
        self.r = Some(v.into());
        self
    }
    pub fn d(mut self, v: impl Into<ExtReal>) -> Self {
        self.d = Some(v.into());
        self
    }
    pub fn r_prime(mut self, v: impl Into<ExtReal>) -> Self {
        self.r_prime = Some(v.into());
        self
    }
    pub fn w(mut self, v: impl Into<ExtReal>) -> Self {
        self.w = Some(v.into());
        self
    }
    pub fn dof(mut self, dof: DofBehavior) -> Self {
        self.dof = Some(dof);
        self
    }

    /// Checks the sign constraints on `e` and `d` and a positive fixed dof.
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.e {
            if e < 0.0 {
                return Err(invalid(format!("e must be nonnegative, got {e}")));
            }
        }
        if let Some(d) = self.d {
            if d < 0.0 {
                return Err(invalid(format!("d must be nonnegative, got {d}")));
            }
        }
        if self.dof == Some(DofBehavior::Fixed(0)) {
            return Err(invalid("fixed degrees of freedom must be positive"));
        }
        Ok(())
    }

    fn need(v: Option<ExtReal>, name: &'static str) -> Result<ExtReal> {
        v.ok_or(Error::MissingParameter(name))
    }
    fn get_e(&self) -> Result<ExtReal> {
        Self::need(self.e, "e")
    }
    fn get_nu(&self) -> Result<ExtReal> {
        Self::need(self.nu, "nu")
    }
    fn get_zeta(&self) -> Result<ExtReal> {
        Self::need(self.zeta, "zeta")
    }
    fn get_r(&self) -> Result<ExtReal> {
        Self::need(self.r, "r")
    }
    fn get_d(&self) -> Result<ExtReal> {
        Self::need(self.d, "d")
    }
    fn get_r_prime(&self) -> Result<ExtReal> {
        Self::need(self.r_prime, "r_prime")
    }
    fn get_w(&self) -> Result<ExtReal> {
        Self::need(self.w, "w")
    }
    fn get_dof(&self) -> Result<DofBehavior> {
        self.dof.ok_or(Error::MissingParameter("dof"))
    }
}

/// Where the mass goes when the law escapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// CDF tends to 1 everywhere.
    MinusInfinity,
    /// CDF tends to 0 everywhere.
    PlusInfinity,
}

/// A limit law, kept symbolic.
///
/// `nu` fields may be infinite; `e` fields are finite. `zeta` in
/// [`SoftChiFold`](Self::SoftChiFold) may be infinite, in
/// [`AdaptiveChiCdf`](Self::AdaptiveChiCdf) it is finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LimitDistribution {
    StdNormal,
    PointMass(f64),
    /// Weight at the first location, the rest at the second.
    TwoPointMixture(f64, f64, f64),
    ExcisedNormal(ExtReal, f64),
    SoftShiftNormal(ExtReal, f64),
    AdaptiveKnown(ExtReal, f64),
    HardSmoothed(ExtReal, f64, u32),
    SoftSmoothed(ExtReal, f64, u32),
    AdaptiveSmoothed(ExtReal, f64, u32),
    SoftChiFold(ExtReal, u32),
    AdaptiveChiCdf(f64, u32),
    /// `zeta` is +-1. Mass `Phi(r)` escapes, so the CDF is defective.
    OracleHardBoundary(f64, ExtReal),
    /// CDF `x -> Phi(x + w)`.
    ShiftedNormal(f64),
    EscapesToInfinity(Direction),
}

use LimitDistribution as L;

impl fmt::Display for LimitDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            L::StdNormal => write!(f, "StdNormal"),
            L::PointMass(l) => write!(f, "PointMass({l})"),
            L::TwoPointMixture(w, a, b) => write!(f, "TwoPointMixture({w}, {a}, {b})"),
            L::ExcisedNormal(nu, e) => write!(f, "ExcisedNormal({nu}, {e})"),
            L::SoftShiftNormal(nu, e) => write!(f, "SoftShiftNormal({nu}, {e})"),
            L::AdaptiveKnown(nu, e) => write!(f, "AdaptiveKnown({nu}, {e})"),
            L::HardSmoothed(nu, e, m) => write!(f, "HardSmoothed({nu}, {e}, {m})"),
            L::SoftSmoothed(nu, e, m) => write!(f, "SoftSmoothed({nu}, {e}, {m})"),
            L::AdaptiveSmoothed(nu, e, m) => write!(f, "AdaptiveSmoothed({nu}, {e}, {m})"),
            L::SoftChiFold(z, m) => write!(f, "SoftChiFold({z}, {m})"),
            L::AdaptiveChiCdf(z, m) => write!(f, "AdaptiveChiCdf({z}, {m})"),
            L::OracleHardBoundary(z, r) => write!(f, "OracleHardBoundary({z}, {r})"),
            L::ShiftedNormal(w) => write!(f, "ShiftedNormal({w})"),
            L::EscapesToInfinity(Direction::MinusInfinity) => write!(f, "EscapesToInfinity(-inf)"),
            L::EscapesToInfinity(Direction::PlusInfinity) => write!(f, "EscapesToInfinity(+inf)"),
        }
    }
}

// `t - nu` on the extended line, `t` finite.
fn minus(t: f64, nu: ExtReal) -> ExtReal {
    match nu {
        ExtReal::Finite(v) => ExtReal::Finite(t - v),
        other => -other,
    }
}

fn standardized_kind(l: &LimitDistribution) -> Option<EstimatorKind> {
    match l {
        L::ExcisedNormal(..) | L::HardSmoothed(..) => Some(EstimatorKind::Hard),
        L::SoftShiftNormal(..) | L::SoftSmoothed(..) => Some(EstimatorKind::Soft),
        L::AdaptiveKnown(..) | L::AdaptiveSmoothed(..) => Some(EstimatorKind::AdaptiveSoft),
        _ => None,
    }
}

impl LimitDistribution {
    /// Distribution function at `x` (right-continuous). For the escaping and
    /// boundary variants this is the pointwise limit of the finite-sample
    /// CDFs, which need not be a proper CDF.
    pub fn cdf(&self, x: impl Into<ExtReal>) -> Result<f64> {
        let x = x.into();
        let xf = match x {
            ExtReal::Finite(v) => v,
            ExtReal::NegInf => return Ok(self.escaped_below()),
            ExtReal::PosInf => return Ok(1.0 - self.escaped_above()),
        };
        let p = match *self {
            L::StdNormal => phi(xf),
            L::PointMass(l) => step(xf, l),
            L::TwoPointMixture(w, a, b) => w * step(xf, a) + (1.0 - w) * step(xf, b),
            L::ExcisedNormal(nu, e) | L::SoftShiftNormal(nu, e) | L::AdaptiveKnown(nu, e) => {
                let kind = standardized_kind(self).expect("standardized family");
                match nu {
                    ExtReal::Finite(nu) => {
                        let v = if xf == -nu { 0.0 } else { xf + nu };
                        known_cdf(kind, v, xf >= -nu, nu, e)
                    }
                    // Only the soft law keeps a shift when nu is infinite.
                    _ if kind == EstimatorKind::Soft => phi(xf + nu.signum() * e),
                    _ => phi(xf),
                }
            }
            L::HardSmoothed(nu, e, m) | L::SoftSmoothed(nu, e, m) | L::AdaptiveSmoothed(nu, e, m) => {
                let kind = standardized_kind(self).expect("standardized family");
                match nu {
                    ExtReal::Finite(nu) => {
                        let v = if xf == -nu { 0.0 } else { xf + nu };
                        unknown_cdf(kind, m, v, xf >= -nu, nu, e)?
                    }
                    _ if kind == EstimatorKind::Soft => noncentral_t_cdf(m, -xf, nu.signum() * e)?,
                    _ => phi(xf),
                }
            }
            L::SoftChiFold(zeta, m) => soft_chi_fold_cdf(zeta, m, xf)?,
            L::AdaptiveChiCdf(zeta, m) => {
                let mf = m as f64;
                if zeta >= 0.0 {
                    if xf >= 0.0 {
                        1.0
                    } else if xf >= -zeta {
                        chi2_tail(m, mf * (xf * zeta).abs())
                    } else {
                        0.0
                    }
                } else if xf >= -zeta {
                    1.0
                } else if xf >= 0.0 {
                    1.0 - chi2_tail(m, mf * (xf * zeta).abs())
                } else {
                    0.0
                }
            }
            L::OracleHardBoundary(zeta, r) => {
                if zeta > 0.0 {
                    normal_cdf(r).max(phi(xf))
                } else {
                    let cap = -r;
                    if cap > xf {
                        phi(xf)
                    } else {
                        normal_cdf(cap)
                    }
                }
            }
            L::ShiftedNormal(w) => phi(xf + w),
            L::EscapesToInfinity(Direction::MinusInfinity) => 1.0,
            L::EscapesToInfinity(Direction::PlusInfinity) => 0.0,
        };
        Ok(p.clamp(0.0, 1.0))
    }

    /// Point masses as `(location, weight)`, merged when locations coincide.
    pub fn atoms(&self) -> Result<Vec<(f64, f64)>> {
        let mut out = match *self {
            L::PointMass(l) => vec![(l, 1.0)],
            L::TwoPointMixture(w, a, b) => vec![(a, w), (b, 1.0 - w)],
            L::ExcisedNormal(ExtReal::Finite(nu), e)
            | L::SoftShiftNormal(ExtReal::Finite(nu), e)
            | L::AdaptiveKnown(ExtReal::Finite(nu), e) => vec![(-nu, phi(e - nu) - phi(-e - nu))],
            L::HardSmoothed(ExtReal::Finite(nu), e, m)
            | L::SoftSmoothed(ExtReal::Finite(nu), e, m)
            | L::AdaptiveSmoothed(ExtReal::Finite(nu), e, m) => {
                vec![(-nu, noncentral_t_cdf(m, nu, e)? - noncentral_t_cdf(m, nu, -e)?)]
            }
            L::SoftChiFold(ExtReal::Finite(z), m) => vec![(-z, chi2_tail(m, m as f64 * z * z))],
            L::AdaptiveChiCdf(z, m) => vec![(-z, chi2_tail(m, m as f64 * z * z))],
            _ => vec![],
        };
        for a in &mut out {
            a.0 += 0.0; // -0 -> +0
        }
        out.retain(|&(_, w)| w > 0.0);
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.dedup_by(|later, first| {
            if later.0 == first.0 {
                first.1 += later.1;
                true
            } else {
                false
            }
        });
        Ok(out)
    }

    /// Total weight of the atoms at `loc`.
    pub fn atom_weight_at(&self, loc: f64) -> Result<f64> {
        Ok(self.atoms()?.iter().filter(|a| a.0 == loc).map(|a| a.1).sum())
    }

    /// Mass lost to minus infinity, the CDF limit at minus infinity.
    pub fn escaped_below(&self) -> f64 {
        match *self {
            L::EscapesToInfinity(Direction::MinusInfinity) => 1.0,
            L::OracleHardBoundary(z, r) if z > 0.0 => normal_cdf(r),
            _ => 0.0,
        }
    }

    /// Mass lost to plus infinity.
    pub fn escaped_above(&self) -> f64 {
        match *self {
            L::EscapesToInfinity(Direction::PlusInfinity) => 1.0,
            L::OracleHardBoundary(z, r) if z < 0.0 => normal_cdf(r),
            _ => 0.0,
        }
    }

    /// True when no mass escapes, so [`cdf`](Self::cdf) is a proper CDF.
    pub fn is_proper(&self) -> bool {
        self.escaped_below() == 0.0 && self.escaped_above() == 0.0
    }
}

fn step(x: f64, loc: f64) -> f64 {
    if x >= loc {
        1.0
    } else {
        0.0
    }
}

// Atom Pr(chi2_m > m zeta^2) at -zeta plus density rho(x) on x < -zeta and
// rho(-x) on x > -zeta.
fn soft_chi_fold_cdf(zeta: ExtReal, m: u32, x: f64) -> Result<f64> {
    let rho = ChiScaled::new(m)?;
    Ok(match zeta {
        ExtReal::PosInf => {
            if x >= 0.0 {
                1.0
            } else {
                rho.sf(-x)
            }
        }
        ExtReal::NegInf => rho.cdf(x.max(0.0)),
        ExtReal::Finite(z) if z >= 0.0 => {
            if x >= 0.0 {
                1.0
            } else if x >= -z {
                rho.sf(-x)
            } else {
                0.0
            }
        }
        ExtReal::Finite(z) => {
            if x >= -z {
                1.0
            } else {
                rho.cdf(x.max(0.0))
            }
        }
    })
}

fn conservative_e(params: &RegimeParams) -> Result<Option<f64>> {
    params.validate()?;
    match params.get_e()? {
        ExtReal::Finite(e) => Ok(Some(e)),
        ExtReal::PosInf => Ok(None),
        ExtReal::NegInf => Err(invalid("e must be nonnegative")),
    }
}

// Deletion probability when |zeta| = 1 under consistent tuning with
// diverging degrees of freedom.
fn boundary_weight_diverging(params: &RegimeParams) -> Result<f64> {
    let d = params.get_d()?;
    match d {
        ExtReal::PosInf => Ok(normal_cdf(params.get_r_prime()?)),
        ExtReal::Finite(d) if d == 0.0 => Ok(normal_cdf(params.get_r()?)),
        // int Phi(d t + r) phi(t) dt = Phi(r / sqrt(1 + d^2))
        ExtReal::Finite(d) => Ok(match params.get_r()? {
            ExtReal::Finite(r) => phi(r / (1.0 + d * d).sqrt()),
            other => normal_cdf(other),
        }),
        ExtReal::NegInf => Err(invalid("d must be nonnegative")),
    }
}

fn known_consistent_weight(params: &RegimeParams) -> Result<f64> {
    let z = params.get_zeta()?.abs();
    if z < 1.0 {
        Ok(1.0)
    } else if z > 1.0 {
        Ok(0.0)
    } else {
        Ok(normal_cdf(params.get_r()?))
    }
}

/// Limit of the deletion probability `Pr(estimate == 0)`.
pub fn limit_selection_probability(params: &RegimeParams, mode: VarianceBehavior) -> Result<f64> {
    let e = conservative_e(params)?;
    let dof = match mode {
        VarianceBehavior::Known => None,
        VarianceBehavior::Unknown => Some(params.get_dof()?),
    };
    let p = match (e, dof) {
        (Some(e), None | Some(DofBehavior::Diverging)) => {
            let nu = params.get_nu()?;
            normal_cdf(minus(e, nu)) - normal_cdf(minus(-e, nu))
        }
        (Some(e), Some(DofBehavior::Fixed(m))) => match params.get_nu()? {
            ExtReal::Finite(nu) => noncentral_t_cdf(m, nu, e)? - noncentral_t_cdf(m, nu, -e)?,
            _ => 0.0,
        },
        (None, None) => known_consistent_weight(params)?,
        (None, Some(DofBehavior::Fixed(m))) => match params.get_zeta()? {
            ExtReal::Finite(z) => chi2_tail(m, m as f64 * z * z),
            _ => 0.0,
        },
        (None, Some(DofBehavior::Diverging)) => {
            let z = params.get_zeta()?.abs();
            if z < 1.0 {
                1.0
            } else if z > 1.0 {
                0.0
            } else {
                boundary_weight_diverging(params)?
            }
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

fn known_conservative(kind: EstimatorKind, nu: ExtReal, e: f64) -> LimitDistribution {
    if e == 0.0 {
        return L::StdNormal;
    }
    match (kind, nu.is_finite()) {
        (EstimatorKind::Hard, true) => L::ExcisedNormal(nu, e),
        (EstimatorKind::Soft, true) => L::SoftShiftNormal(nu, e),
        (EstimatorKind::AdaptiveSoft, true) => L::AdaptiveKnown(nu, e),
        (EstimatorKind::Soft, false) => L::ShiftedNormal(nu.signum() * e),
        (_, false) => L::StdNormal,
    }
}

fn unknown_conservative(kind: EstimatorKind, nu: ExtReal, e: f64, m: u32) -> LimitDistribution {
    if e == 0.0 {
        return L::StdNormal;
    }
    match (kind, nu.is_finite()) {
        (EstimatorKind::Hard, true) => L::HardSmoothed(nu, e, m),
        (EstimatorKind::AdaptiveSoft, true) => L::AdaptiveSmoothed(nu, e, m),
        (EstimatorKind::Soft, _) => L::SoftSmoothed(nu, e, m),
        (_, false) => L::StdNormal,
    }
}

fn point(loc: f64) -> LimitDistribution {
    L::PointMass(loc + 0.0)
}

fn known_consistent(kind: EstimatorKind, params: &RegimeParams) -> Result<LimitDistribution> {
    let zeta = params.get_zeta()?;
    let z = zeta.abs();
    Ok(match kind {
        EstimatorKind::Hard => match zeta {
            ExtReal::Finite(zv) if z < 1.0 => point(-zv),
            ExtReal::Finite(zv) if z == 1.0 => L::TwoPointMixture(normal_cdf(params.get_r()?), -zv, 0.0),
            _ => point(0.0),
        },
        EstimatorKind::Soft => match zeta {
            ExtReal::Finite(zv) if z < 1.0 => point(-zv),
            _ => point(-zeta.signum()),
        },
        EstimatorKind::AdaptiveSoft => match zeta {
            ExtReal::Finite(zv) if z < 1.0 => point(-zv),
            ExtReal::Finite(zv) => point(-1.0 / zv),
            _ => point(0.0),
        },
    })
}

fn unknown_consistent_fixed(kind: EstimatorKind, params: &RegimeParams, m: u32) -> Result<LimitDistribution> {
    let zeta = params.get_zeta()?;
    Ok(match (kind, zeta) {
        (EstimatorKind::Hard, ExtReal::Finite(z)) => {
            L::TwoPointMixture(chi2_tail(m, m as f64 * z * z), -z + 0.0, 0.0)
        }
        (EstimatorKind::Hard, _) => point(0.0),
        (EstimatorKind::Soft, _) => L::SoftChiFold(zeta, m),
        (EstimatorKind::AdaptiveSoft, ExtReal::Finite(z)) => L::AdaptiveChiCdf(z, m),
        (EstimatorKind::AdaptiveSoft, _) => point(0.0),
    })
}

fn unknown_consistent_diverging(kind: EstimatorKind, params: &RegimeParams) -> Result<LimitDistribution> {
    if kind != EstimatorKind::Hard {
        return known_consistent(kind, params);
    }
    let zeta = params.get_zeta()?;
    Ok(match zeta {
        ExtReal::Finite(zv) if zv.abs() < 1.0 => point(-zv),
        ExtReal::Finite(zv) if zv.abs() == 1.0 => L::TwoPointMixture(boundary_weight_diverging(params)?, -zv, 0.0),
        _ => point(0.0),
    })
}

/// Limit law of `alpha * (estimate - theta) / sigma` under the scaling
/// implied by the tuning: `sqrt(n) / xi` when conservative, `1 / (xi eta)`
/// when consistent.
pub fn limit_distribution(
    kind: EstimatorKind,
    mode: VarianceBehavior,
    params: &RegimeParams,
) -> Result<LimitDistribution> {
    let e = conservative_e(params)?;
    match (mode, e) {
        (VarianceBehavior::Known, Some(e)) => Ok(known_conservative(kind, params.get_nu()?, e)),
        (VarianceBehavior::Known, None) => known_consistent(kind, params),
        (VarianceBehavior::Unknown, e) => match (params.get_dof()?, e) {
            (DofBehavior::Fixed(m), Some(e)) => Ok(unknown_conservative(kind, params.get_nu()?, e, m)),
            (DofBehavior::Diverging, Some(e)) => Ok(known_conservative(kind, params.get_nu()?, e)),
            (DofBehavior::Fixed(m), None) => unknown_consistent_fixed(kind, params, m),
            (DofBehavior::Diverging, None) => unknown_consistent_diverging(kind, params),
        },
    }
}

fn escape_toward_minus_nu(nu: ExtReal) -> LimitDistribution {
    match nu {
        ExtReal::Finite(v) => point(-v),
        ExtReal::PosInf => L::EscapesToInfinity(Direction::MinusInfinity),
        ExtReal::NegInf => L::EscapesToInfinity(Direction::PlusInfinity),
    }
}

/// Limit under `sqrt(n) / xi` scaling with consistent tuning, the scaling
/// at which the infeasible oracle estimator is asymptotically normal.
pub fn oracle_limit(kind: EstimatorKind, params: &RegimeParams) -> Result<LimitDistribution> {
    params.validate()?;
    match kind {
        EstimatorKind::Soft => Ok(escape_toward_minus_nu(params.get_nu()?)),
        EstimatorKind::Hard => {
            let zeta = params.get_zeta()?;
            let z = zeta.abs();
            if z < 1.0 {
                Ok(escape_toward_minus_nu(params.get_nu()?))
            } else if z > 1.0 {
                Ok(L::StdNormal)
            } else {
                let r = params.get_r()?;
                if r == ExtReal::NegInf {
                    Ok(L::StdNormal)
                } else {
                    Ok(L::OracleHardBoundary(zeta.signum(), r))
                }
            }
        }
        EstimatorKind::AdaptiveSoft => {
            let zeta = params.get_zeta()?;
            match zeta {
                ExtReal::Finite(z) if z == 0.0 => Ok(escape_toward_minus_nu(params.get_nu()?)),
                ExtReal::Finite(z) if z < 0.0 => Ok(L::EscapesToInfinity(Direction::PlusInfinity)),
                ExtReal::Finite(_) => Ok(L::EscapesToInfinity(Direction::MinusInfinity)),
                _ => match (zeta, params.get_w()?) {
                    (_, ExtReal::Finite(w)) => Ok(L::ShiftedNormal(w)),
                    (ExtReal::NegInf, ExtReal::NegInf) => Ok(L::EscapesToInfinity(Direction::PlusInfinity)),
                    (ExtReal::PosInf, ExtReal::PosInf) => Ok(L::EscapesToInfinity(Direction::MinusInfinity)),
                    (z, w) => Err(Error::NotCovered(format!(
                        "adaptive oracle limit with zeta = {z} and w = {w} of opposite sign"
                    ))),
                },
            }
        }
    }
}

/// `min(sqrt(n) / xi, 1 / (xi eta))`, the best uniform rate of convergence.
pub fn uniform_rate(n: u64, xi: f64, eta: f64) -> Result<f64> {
    if n == 0 || !(xi > 0.0 && xi.is_finite()) || !(eta > 0.0 && eta.is_finite()) {
        return Err(invalid(format!("uniform rate needs n, xi, eta > 0 (got {n}, {xi}, {eta})")));
    }
    Ok(((n as f64).sqrt() / xi).min(1.0 / (xi * eta)))
}

/// Absolute tolerance of the L1 integral in [`tv_distance`].
pub const TV_TOL: f64 = 1e-8;

/// `|w_a - w_b| + int |f_a - f_b|` for two laws with their atom at the same
/// point. This is the L1 distance of the measures, twice their total
/// variation distance.
pub fn tv_distance(a: &MixtureDistribution, b: &MixtureDistribution) -> Result<f64> {
    let (la, lb) = (a.atom_location(), b.atom_location());
    if (la - lb).abs() > 1e-12 * la.abs().max(lb.abs()).max(1.0) {
        return Err(Error::UnsupportedComparison(format!("atoms at {la} and {lb}")));
    }
    let mut cuts: Vec<f64> = a.breakpoints().iter().chain(b.breakpoints()).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let opts = QuadOptions {
        abs_tol: TV_TOL,
        tail_scale: a.scale().max(b.scale()),
        max_panels: 20_000,
        ..Default::default()
    };
    let f = |x: f64| match (a.ac_density(x), b.ac_density(x)) {
        (Ok(p), Ok(q)) => (p - q).abs(),
        _ => f64::NAN,
    };
    let l1 = integrate(f, f64::NEG_INFINITY, f64::INFINITY, &cuts, &opts)?;
    if l1.value.is_nan() {
        return Err(invalid("density evaluation failed during integration"));
    }
    Ok((a.atom_weight() - b.atom_weight()).abs() + l1.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_rate_examples() {
        assert_eq!(uniform_rate(100, 1.0, 0.5).unwrap(), 2.0);
        assert!((uniform_rate(8, 2.0, 0.1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(uniform_rate(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn missing_field_is_reported() {
        let p = RegimeParams::new().e(1.0);
        match limit_selection_probability(&p, VarianceBehavior::Known) {
            Err(Error::MissingParameter("nu")) => {}
            other => panic!("{other:?}"),
        }
        let p = RegimeParams::new().e(1.0).nu(0.0);
        assert!(matches!(
            limit_distribution(EstimatorKind::Hard, VarianceBehavior::Unknown, &p),
            Err(Error::MissingParameter("dof"))
        ));
    }

    #[test]
    fn zero_threshold_is_normal() {
        for kind in EstimatorKind::ALL {
            let p = RegimeParams::new().e(0.0).nu(1.3);
            assert_eq!(limit_distribution(kind, VarianceBehavior::Known, &p).unwrap(), L::StdNormal);
        }
    }

    #[test]
    fn boundary_oracle_is_defective() {
        let l = L::OracleHardBoundary(1.0, ExtReal::Finite(0.0));
        assert_eq!(l.cdf(-50.0).unwrap(), 0.5);
        assert_eq!(l.cdf(ExtReal::NegInf).unwrap(), 0.5);
        assert!(!l.is_proper());
        let l = L::OracleHardBoundary(-1.0, ExtReal::Finite(0.0));
        assert_eq!(l.cdf(50.0).unwrap(), 0.5);
        assert!((l.cdf(-1.0).unwrap() - phi(-1.0)).abs() < 1e-16);
    }

    #[test]
    fn escape_constants() {
        let l = oracle_limit(EstimatorKind::Soft, &RegimeParams::new().nu(f64::INFINITY)).unwrap();
        assert_eq!(l, L::EscapesToInfinity(Direction::MinusInfinity));
        assert_eq!(l.cdf(-1e300).unwrap(), 1.0);
    }
}
