//! Normal, chi and non-central t functions, and quadrature against the
//! density of `sqrt(chi2_m / m)`.

pub mod quadrature;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::Neg;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use quadrature::{integrate, Estimate, QuadOptions};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Mass of `rho_m` discarded on each side of the truncated support.
pub const TRUNCATION_MASS: f64 = 1e-14;

const LN_2: f64 = std::f64::consts::LN_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A point of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Infinities map to `f64` infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn abs(self) -> ExtReal {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v.abs()),
            _ => ExtReal::PosInf,
        }
    }

    /// -1, 0 or 1.
    pub fn signum(self) -> f64 {
        match self {
            ExtReal::NegInf => -1.0,
            ExtReal::PosInf => 1.0,
            ExtReal::Finite(v) if v > 0.0 => 1.0,
            ExtReal::Finite(v) if v < 0.0 => -1.0,
            ExtReal::Finite(_) => 0.0,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        debug_assert!(!v.is_nan(), "NaN is not an extended real");
        if v == f64::INFINITY {
            ExtReal::PosInf
        } else if v == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(v)
        }
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl PartialEq<f64> for ExtReal {
    fn eq(&self, other: &f64) -> bool {
        self.to_f64() == *other
    }
}

impl PartialOrd<f64> for ExtReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.to_f64().partial_cmp(other)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}

impl FromStr for ExtReal {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(ExtReal::PosInf),
            "-inf" | "-infinity" => Ok(ExtReal::NegInf),
            t => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| invalid(format!("not an extended real: {s:?}")))?;
                if v.is_nan() {
                    return Err(invalid("NaN is not an extended real"));
                }
                Ok(ExtReal::from(v))
            }
        }
    }
}

pub fn normal_cdf(x: impl Into<ExtReal>) -> f64 {
    match x.into() {
        ExtReal::NegInf => 0.0,
        ExtReal::PosInf => 1.0,
        ExtReal::Finite(v) => 0.5 * libm::erfc(-v * std::f64::consts::FRAC_1_SQRT_2),
    }
}

#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Inverse of `normal_cdf` on (0, 1).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("quantile level must lie in (0, 1), got {p}")));
    }
    let x = ppnd16(p);
    // One Halley step polishes the rational approximation.
    let err = normal_cdf(x) - p;
    let d = normal_pdf(x);
    if d > 0.0 {
        let u = err / d;
        return Ok(x - u / (1.0 + 0.5 * x * u));
    }
    Ok(x)
}

// Wichura's AS 241.
fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
                + 67265.770_927_008_7)
                * r
                + 45921.953_931_549_87)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5226.495_278_852_545 * r + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

fn check_dof(m: u32) -> Result<()> {
    if m == 0 {
        return Err(invalid("degrees of freedom must be at least 1"));
    }
    Ok(())
}

/// `ln Gamma(m / 2)`, summed exactly over the integer or half-integer ladder.
pub fn ln_gamma_half(m: u32) -> f64 {
    debug_assert!(m >= 1);
    if m % 2 == 0 {
        (1..m / 2).map(|j| (j as f64).ln()).sum()
    } else {
        0.5 * std::f64::consts::PI.ln() + (0..(m - 1) / 2).map(|j| (j as f64 + 0.5).ln()).sum::<f64>()
    }
}

/// The density `rho_m` of `sqrt(chi2_m / m)` with its normalizing constant
/// computed once.
#[derive(Debug, Clone, Copy)]
pub struct ChiScaled {
    m: u32,
    log_norm: f64,
}

impl ChiScaled {
    pub fn new(m: u32) -> Result<Self> {
        check_dof(m)?;
        let mf = m as f64;
        let log_norm = LN_2 + 0.5 * mf * mf.ln() - 0.5 * mf * LN_2 - ln_gamma_half(m);
        Ok(ChiScaled { m, log_norm })
    }

    pub fn dof(&self) -> u32 {
        self.m
    }

    pub fn density(&self, s: f64) -> f64 {
        if !(s > 0.0) || s.is_infinite() {
            return 0.0;
        }
        let mf = self.m as f64;
        if self.m == 1 {
            return (self.log_norm - 0.5 * s * s).exp();
        }
        // m s * e^{-y} y^{m/2 - 1} / Gamma(m/2), y = m s^2 / 2
        mf * s * poisson_term(0.5 * mf - 1.0, 0.5 * mf * s * s)
    }

    /// `Pr(S <= s)`.
    pub fn cdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s.is_infinite() {
            return 1.0;
        }
        chi2_cdf(self.m, self.m as f64 * s * s)
    }

    /// `Pr(S > s)`.
    pub fn sf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 1.0;
        }
        if s.is_infinite() {
            return 0.0;
        }
        chi2_tail(self.m, self.m as f64 * s * s)
    }

    /// Support interval carrying all but `2 * TRUNCATION_MASS` of the mass.
    pub fn support(&self) -> (f64, f64) {
        truncation_bounds(self.m)
    }
}

pub fn chi_scaled_density(m: u32, s: f64) -> Result<f64> {
    Ok(ChiScaled::new(m)?.density(s))
}

/// `Pr(chi2_m > x)`.
pub fn chi_square_tail(m: u32, x: f64) -> Result<f64> {
    check_dof(m)?;
    if !(x >= 0.0) {
        return Err(invalid(format!("chi-square argument must be nonnegative, got {x}")));
    }
    Ok(chi2_tail(m, x))
}

/// `Pr(chi2_m <= x)`.
pub fn chi_square_cdf(m: u32, x: f64) -> Result<f64> {
    check_dof(m)?;
    if !(x >= 0.0) {
        return Err(invalid(format!("chi-square argument must be nonnegative, got {x}")));
    }
    Ok(chi2_cdf(m, x))
}

// Stirling remainder `ln Gamma(nu + 1) - (nu + 1/2) ln nu + nu - ln sqrt(2 pi)`.
fn stirlerr(nu: f64) -> f64 {
    if nu <= 15.0 {
        return libm::lgamma(nu + 1.0) - (nu + 0.5) * nu.ln() + nu - LN_SQRT_2PI;
    }
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let nn = nu * nu;
    if nu > 500.0 {
        (S0 - S1 / nn) / nu
    } else if nu > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / nu
    } else if nu > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nu
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nu
    }
}

// Deviance `x ln(x / mu) + mu - x`, evaluated without cancellation near x = mu.
fn bd0(x: f64, mu: f64) -> f64 {
    if (x - mu).abs() < 0.1 * (x + mu) {
        let mut v = (x - mu) / (x + mu);
        let mut s = (x - mu) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        let mut j = 1.0;
        loop {
            ej *= v;
            let s1 = s + ej / (2.0 * j + 1.0);
            if s1 == s {
                return s;
            }
            s = s1;
            j += 1.0;
        }
    }
    x * (x / mu).ln() + mu - x
}

/// `e^{-y} y^nu / Gamma(nu + 1)` for real `nu >= 0`, accurate to a few ulp.
fn poisson_term(nu: f64, y: f64) -> f64 {
    if nu == 0.0 {
        return (-y).exp();
    }
    if y == 0.0 {
        return 0.0;
    }
    (-stirlerr(nu) - bd0(nu, y)).exp() / (2.0 * std::f64::consts::PI * nu).sqrt()
}

// Finite closed-form sums of positive terms: no cancellation. Below the
// mode the tail is the complement of the lower series instead, since summing
// terms to a value near 1 loses the monotonicity in the last ulps.
pub(crate) fn chi2_tail(m: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let y = 0.5 * x;
    let a = 0.5 * m as f64;
    if y < a + 1.0 {
        return 1.0 - lower_gamma_series(a, y);
    }
    let q = if m % 2 == 0 {
        (0..m / 2).map(|j| poisson_term(j as f64, y)).sum::<f64>()
    } else {
        2.0 * phi(-x.sqrt()) + (1..=(m - 1) / 2).map(|j| poisson_term(j as f64 - 0.5, y)).sum::<f64>()
    };
    q.clamp(0.0, 1.0)
}

pub(crate) fn chi2_cdf(m: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * m as f64;
    let y = 0.5 * x;
    if y >= a + 1.0 {
        return (1.0 - chi2_tail(m, x)).clamp(0.0, 1.0);
    }
    lower_gamma_series(a, y)
}

// Regularized P(a, y) = p(a; y) * sum_k prod_{i<=k} y / (a + i), for y < a + 1.
fn lower_gamma_series(a: f64, y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= y / (a + k);
        sum += term;
        k += 1.0;
    }
    (sum * poisson_term(a, y)).clamp(0.0, 1.0)
}

fn truncation_bounds(m: u32) -> (f64, f64) {
    static CACHE: OnceLock<Mutex<HashMap<u32, (f64, f64)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("cache poisoned").get(&m) {
        return *b;
    }
    let mf = m as f64;
    let lower = bisect(|s| chi2_cdf(m, mf * s * s) - TRUNCATION_MASS, 0.0, 1.0);
    let mut hi = 2.0;
    while chi2_tail(m, mf * hi * hi) > TRUNCATION_MASS {
        hi *= 2.0;
    }
    let upper = bisect(|s| TRUNCATION_MASS - chi2_tail(m, mf * s * s), 0.0, hi);
    let b = (lower, upper);
    cache.lock().expect("cache poisoned").insert(m, b);
    b
}

// Root of an increasing function bracketed by [lo, hi].
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `int_0^inf f(s) rho_m(s) ds` to absolute tolerance `tol`.
pub fn integrate_rho<F: Fn(f64) -> f64>(m: u32, f: F, tol: f64) -> Result<f64> {
    Ok(integrate_rho_range(m, f, 0.0, f64::INFINITY, &[], tol)?.value)
}

/// `int_lo^hi f(s) rho_m(s) ds` over the truncated support, with jump points
/// of `f` passed as breakpoints.
pub fn integrate_rho_range<F: Fn(f64) -> f64>(
    m: u32,
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<Estimate> {
    let rho = ChiScaled::new(m)?;
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let (q_lo, q_hi) = rho.support();
    let a = lo.max(q_lo);
    let b = hi.min(q_hi);
    if !(a < b) {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    let mut cuts = breakpoints.to_vec();
    // The mode splits the bulk from the tails.
    if m > 1 {
        cuts.push(((m as f64 - 1.0) / m as f64).sqrt());
    }
    integrate(|s| f(s) * rho.density(s), a, b, &cuts, &QuadOptions::abs(tol))
}

/// Non-central t distribution function `T_{m,c}(x) = int Phi(-c + x s) rho_m(s) ds`.
pub fn noncentral_t_cdf(m: u32, c: f64, x: impl Into<ExtReal>) -> Result<f64> {
    check_dof(m)?;
    if !c.is_finite() {
        return Err(invalid("noncentrality must be finite"));
    }
    let x = match x.into() {
        ExtReal::NegInf => return Ok(0.0),
        ExtReal::PosInf => return Ok(1.0),
        ExtReal::Finite(v) => v,
    };
    if x == 0.0 {
        return Ok(phi(-c));
    }
    let bp = [c / x];
    let e = integrate_rho_range(m, |s| phi(-c + x * s), 0.0, f64::INFINITY, &bp, 0.1 * DEFAULT_TOL)?;
    Ok(e.value.clamp(0.0, 1.0))
}

/// A shareable real evaluator, used for densities and distribution functions.
pub type Evaluator = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ext_real_order_and_negation() {
        let a = ExtReal::NegInf;
        let b = ExtReal::from(-3.0);
        let c = ExtReal::PosInf;
        assert!(a < b && b < c);
        assert_eq!(-a, c);
        assert_eq!(-b, ExtReal::Finite(3.0));
        assert_eq!(ExtReal::from(f64::INFINITY), ExtReal::PosInf);
        assert_eq!("-Inf".parse::<ExtReal>().unwrap(), ExtReal::NegInf);
        assert_eq!("2.5".parse::<ExtReal>().unwrap(), ExtReal::Finite(2.5));
        assert!("nan".parse::<ExtReal>().is_err());
    }

    #[test]
    fn normal_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_eq!(normal_cdf(ExtReal::PosInf), 1.0);
        assert_eq!(normal_cdf(ExtReal::NegInf), 0.0);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((normal_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
        assert!((normal_pdf(2.0) - 0.053_990_966_513_188_06).abs() < 1e-16);
    }

    #[test]
    fn quantile_inverts_cdf() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        let z = normal_quantile(0.975).unwrap();
        assert!((z - 1.959_963_984_540_054).abs() < 1e-13);
        for &p in &[1e-12, 1e-5, 0.01, 0.3, 0.7, 0.99, 1.0 - 1e-9] {
            let x = normal_quantile(p).unwrap();
            assert!((normal_cdf(x) - p).abs() <= 1e-12 * p.max(1e-3), "p={p}");
        }
        // Only levels whose complement is exact in binary.
        for &p in &[0.0625, 0.25, 0.375, 0.001953125] {
            let x = normal_quantile(p).unwrap();
            assert!((normal_quantile(1.0 - p).unwrap() + x).abs() < 1e-13);
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn rho_closed_forms() {
        assert_eq!(chi_scaled_density(4, -1.0).unwrap(), 0.0);
        assert!((chi_scaled_density(2, 1.0).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!(chi_scaled_density(0, 1.0).is_err());
    }

    #[test]
    fn chi_tail_closed_forms() {
        assert_eq!(chi_square_tail(3, 0.0).unwrap(), 1.0);
        assert!((chi_square_tail(2, 4.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        // 3 e^{-2}
        assert!((chi_square_tail(4, 4.0).unwrap() - 3.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!(chi_square_tail(4, -1.0).is_err());
        let p = chi_square_cdf(7, 3.3).unwrap() + chi_square_tail(7, 3.3).unwrap();
        assert!((p - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rho_moments() {
        assert!((integrate_rho(4, |_| 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-11);
        assert!((integrate_rho(5, |s| s * s, 1e-12).unwrap() - 1.0).abs() < 1e-11);
        // sqrt(2/4) Gamma(2.5) / Gamma(2)
        let mean = integrate_rho(4, |s| s, 1e-12).unwrap();
        assert!((mean - 0.5f64.sqrt() * 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn noncentral_t_edges() {
        assert_eq!(noncentral_t_cdf(3, 0.0, 0.0).unwrap(), 0.5);
        assert_eq!(noncentral_t_cdf(3, 1.0, ExtReal::PosInf).unwrap(), 1.0);
        assert_eq!(noncentral_t_cdf(3, 1.0, ExtReal::NegInf).unwrap(), 0.0);
        // Central t with 1 dof is Cauchy.
        let v = noncentral_t_cdf(1, 0.0, 1.0).unwrap();
        assert!((v - 0.75).abs() < 1e-11);
    }
}
