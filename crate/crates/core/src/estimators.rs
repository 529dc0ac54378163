//! Data-level estimators: least squares, the variance estimate, the three
//! thresholding estimators, Lasso and adaptive Lasso, plus the two design
//! families used in the simulation study.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::finite_dist::EstimatorKind;

/// Smallest-to-largest singular value ratio at or below which `X` is
/// treated as rank deficient.
pub const RANK_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DesignVariant {
    /// `X'X = n Omega(rho)`, `Omega_ij = rho^|i-j|`.
    I { rho: f64 },
    /// First `k` rows `I + cE`, the rest zero.
    II { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub variant: DesignVariant,
    pub n: usize,
    pub k: usize,
}

impl DesignSpec {
    pub fn new(variant: DesignVariant, n: usize, k: usize) -> Result<Self> {
        let s = DesignSpec { variant, n, k };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.n, self.k);
        if k == 0 || n < k {
            return Err(invalid(format!("need 1 <= k <= n, got n = {n}, k = {k}")));
        }
        match self.variant {
            DesignVariant::I { rho } => {
                if !(rho > -1.0 && rho < 1.0) {
                    return Err(invalid(format!("rho must lie in (-1, 1), got {rho}")));
                }
                if n % k != 0 {
                    return Err(invalid(format!("design I needs k | n, got n = {n}, k = {k}")));
                }
            }
            DesignVariant::II { c } => {
                if !(c > -1.0 / k as f64) || !c.is_finite() {
                    return Err(invalid(format!("design II needs c > -1/k, got {c}")));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for DesignSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.variant {
            DesignVariant::I { rho } => write!(f, "design I (rho = {rho}, n = {}, k = {})", self.n, self.k),
            DesignVariant::II { c } => write!(f, "design II (c = {c}, n = {}, k = {})", self.n, self.k),
        }
    }
}

/// `Omega(rho)_ij = rho^|i-j|`.
pub fn toeplitz_omega(rho: f64, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| rho.powi((i as i32 - j as i32).abs()))
}

/// The design matrix. Design I stacks `n / k` copies of `sqrt(k) L'`, with
/// `L L' = Omega(rho)`, so that `X'X = n Omega(rho)`.
pub fn make_design(spec: &DesignSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let (n, k) = (spec.n, spec.k);
    match spec.variant {
        DesignVariant::I { rho } => {
            let chol = toeplitz_omega(rho, k)
                .cholesky()
                .ok_or_else(|| Error::SingularDesign(format!("Omega({rho}) is not positive definite")))?;
            let block = chol.l().transpose() * (k as f64).sqrt();
            let mut x = DMatrix::zeros(n, k);
            for b in 0..n / k {
                x.view_mut((b * k, 0), (k, k)).copy_from(&block);
            }
            Ok(x)
        }
        DesignVariant::II { c } => {
            let mut x = DMatrix::zeros(n, k);
            for i in 0..k {
                for j in 0..k {
                    x[(i, j)] = c + if i == j { 1.0 } else { 0.0 };
                }
            }
            Ok(x)
        }
    }
}

/// Condition number of `X'X`.
pub fn condition_number(x: &DMatrix<f64>) -> f64 {
    let sv = x.singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    (hi / lo).powi(2)
}

/// Uncentred correlations of the regressors, `D^-1/2 X'X D^-1/2`.
pub fn gram_correlations(x: &DMatrix<f64>) -> DMatrix<f64> {
    let g = x.transpose() * x;
    let d: Vec<f64> = (0..g.nrows()).map(|i| g[(i, i)].sqrt()).collect();
    DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| g[(i, j)] / (d[i] * d[j]))
}

/// A full-rank design with the quantities every estimator reuses.
#[derive(Debug, Clone)]
pub struct Design {
    x: DMatrix<f64>,
    gram: DMatrix<f64>,
    pinv: DMatrix<f64>,
    xi: DVector<f64>,
    psi: DVector<f64>,
}

impl Design {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        let (n, k) = x.shape();
        if k == 0 || n < k {
            return Err(Error::SingularDesign(format!("{n} x {k} design cannot have full column rank")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("design has non-finite entries"));
        }
        let svd = x.clone().svd(true, true);
        let sv = &svd.singular_values;
        let smax = sv.max();
        let smin = sv.min();
        if !(smin > RANK_RATIO * smax) {
            return Err(Error::SingularDesign(format!(
                "singular value ratio {:e} at or below {RANK_RATIO:e}",
                smin / smax
            )));
        }
        let u = svd.u.as_ref().expect("requested U");
        let vt = svd.v_t.as_ref().expect("requested V'");
        // pinv = V S^-1 U'
        let mut vs = vt.transpose();
        for (j, s) in sv.iter().enumerate() {
            vs.column_mut(j).scale_mut(1.0 / s);
        }
        let pinv = &vs * u.transpose();
        // diag((X'X / n)^-1) = n * rowsum((V S^-1)^2)
        let xi = DVector::from_fn(k, |i, _| (n as f64 * vs.row(i).norm_squared()).sqrt());
        let gram = x.transpose() * &x;
        let psi = DVector::from_fn(k, |i, _| (gram[(i, i)] / n as f64).sqrt());
        Ok(Design { x, gram, pinv, xi, psi })
    }

    pub fn from_spec(spec: &DesignSpec) -> Result<Self> {
        Self::new(make_design(spec)?)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }
    pub fn n(&self) -> usize {
        self.x.nrows()
    }
    pub fn k(&self) -> usize {
        self.x.ncols()
    }
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }
    /// `xi_i = sqrt(((X'X / n)^-1)_ii)`.
    pub fn xi(&self) -> &DVector<f64> {
        &self.xi
    }
    /// `psi_i = sqrt((X'X / n)_ii)`.
    pub fn psi(&self) -> &DVector<f64> {
        &self.psi
    }

    fn check_y(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.n() {
            return Err(invalid(format!("response has length {}, design has {} rows", y.len(), self.n())));
        }
        Ok(())
    }

    pub fn least_squares(&self, y: &DVector<f64>) -> Result<LeastSquares> {
        self.check_y(y)?;
        let theta = &self.pinv * y;
        let (n, k) = (self.n(), self.k());
        let sigma2 = if n > k {
            let resid = y - &self.x * &theta;
            Some(resid.norm_squared() / (n - k) as f64)
        } else {
            None
        };
        Ok(LeastSquares { theta, sigma2 })
    }

    /// Thresholding estimator applied componentwise with a common `eta`.
    pub fn threshold(&self, kind: EstimatorKind, ls: &DVector<f64>, scale: f64, eta: f64) -> DVector<f64> {
        DVector::from_fn(ls.len(), |i, _| threshold_estimate(kind, ls[i], scale, self.xi[i], eta))
    }

    /// Thresholding estimator from data: feasible (scale `sigma_hat`) when
    /// `sigma` is `None`, infeasible otherwise.
    pub fn thresholding(
        &self,
        kind: EstimatorKind,
        y: &DVector<f64>,
        eta: f64,
        sigma: Option<f64>,
    ) -> Result<DVector<f64>> {
        let ls = self.least_squares(y)?;
        let scale = match sigma {
            Some(s) => s,
            None => ls
                .sigma2
                .ok_or_else(|| invalid("feasible thresholding needs n > k"))?
                .sqrt(),
        };
        Ok(self.threshold(kind, &ls.theta, scale, eta))
    }

    /// Per-coordinate `eta'` for the rule.
    pub fn penalty_weights(&self, rule: &PenaltyRule) -> Result<DVector<f64>> {
        let k = self.k();
        let w = match rule {
            PenaltyRule::PerComponent(v) => {
                if v.len() != k {
                    return Err(invalid(format!("{} penalty weights for {k} coefficients", v.len())));
                }
                DVector::from_column_slice(v)
            }
            PenaltyRule::EtaXiInverse(eta) => self.xi.map(|x| eta / x),
            PenaltyRule::EtaPsi(eta) => self.psi.map(|p| eta * p),
            PenaltyRule::Constant(e) => DVector::from_element(k, *e),
        };
        if w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("penalty weights must be finite and nonnegative"));
        }
        Ok(w)
    }

    /// Minimizer of `|Y - X theta|^2 + 2 n sigma_hat sum eta'_i |theta_i|`.
    pub fn lasso(&self, y: &DVector<f64>, config: &LassoConfig, sigma_hat: f64) -> Result<DVector<f64>> {
        self.check_y(y)?;
        check_sigma(sigma_hat)?;
        config.validate()?;
        let w = self.penalty_weights(&config.penalty_rule)?;
        let lambda = w * (self.n() as f64 * sigma_hat);
        let start = &self.pinv * y;
        self.coordinate_descent(&(self.x.transpose() * y), &lambda, start, config)
    }

    /// Minimizer of `|Y - X theta|^2 + 2 n sigma_hat^2 sum eta'_i^2 |theta_i| / |ls_i|`.
    pub fn adaptive_lasso(&self, y: &DVector<f64>, config: &LassoConfig, sigma_hat: f64) -> Result<DVector<f64>> {
        self.check_y(y)?;
        check_sigma(sigma_hat)?;
        config.validate()?;
        let ls = &self.pinv * y;
        let w = self.penalty_weights(&config.penalty_rule)?;
        let scale = ls.amax().max(f64::MIN_POSITIVE);
        let mut lambda = DVector::zeros(self.k());
        for i in 0..self.k() {
            if ls[i].abs() <= f64::EPSILON * scale {
                return Err(Error::UndefinedWeights(i));
            }
            lambda[i] = self.n() as f64 * sigma_hat * sigma_hat * w[i] * w[i] / ls[i].abs();
        }
        self.coordinate_descent(&(self.x.transpose() * y), &lambda, ls, config)
    }

    // Minimizes theta'G theta / 2 - b'theta + sum lambda_i |theta_i|, which is
    // half of either objective above.
    fn coordinate_descent(
        &self,
        b: &DVector<f64>,
        lambda: &DVector<f64>,
        mut theta: DVector<f64>,
        config: &LassoConfig,
    ) -> Result<DVector<f64>> {
        let g = &self.gram;
        let k = self.k();
        let mut last = f64::INFINITY;
        for _ in 0..config.max_sweeps {
            last = 0.0f64;
            for j in 0..k {
                let mut z = b[j];
                for l in 0..k {
                    if l != j {
                        z -= g[(j, l)] * theta[l];
                    }
                }
                let new = soft(z, lambda[j]) / g[(j, j)];
                last = last.max((new - theta[j]).abs());
                theta[j] = new;
            }
            if last <= config.tol {
                return Ok(theta);
            }
        }
        Err(Error::NonConvergence {
            sweeps: config.max_sweeps,
            last_change: last,
            iterate: theta.iter().copied().collect(),
        })
    }
}

fn check_sigma(sigma_hat: f64) -> Result<()> {
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(invalid(format!("sigma_hat must be positive, got {sigma_hat}")));
    }
    Ok(())
}

// sign(z) (|z| - t)_+ with sign(0) = 0.
fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub theta: DVector<f64>,
    /// `RSS / (n - k)`; absent when `n = k`.
    pub sigma2: Option<f64>,
}

/// Observed data `Y = X theta + u`.
#[derive(Debug, Clone)]
pub struct RegressionData {
    pub design: Design,
    pub y: DVector<f64>,
}

impl RegressionData {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let design = Design::new(x)?;
        design.check_y(&y)?;
        Ok(RegressionData { design, y })
    }
}

/// How the Lasso penalty `eta'_i` is formed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PenaltyRule {
    PerComponent(Vec<f64>),
    /// `eta'_i = eta / xi_i`.
    EtaXiInverse(f64),
    /// `eta'_i = eta psi_i`.
    EtaPsi(f64),
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub penalty_rule: PenaltyRule,
    /// Bound on the largest coordinate change in a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl LassoConfig {
    pub const DEFAULT_TOL: f64 = 1e-12;
    pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

    pub fn new(penalty_rule: PenaltyRule) -> Self {
        LassoConfig {
            penalty_rule,
            tol: Self::DEFAULT_TOL,
            max_sweeps: Self::DEFAULT_MAX_SWEEPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(invalid("max_sweeps must be at least 1"));
        }
        Ok(())
    }
}

pub fn xi_values(x: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(Design::new(x.clone())?.xi.clone())
}

pub fn least_squares(data: &RegressionData) -> Result<LeastSquares> {
    data.design.least_squares(&data.y)
}

/// One coordinate of a thresholding estimator with threshold
/// `t = scale * xi * eta`; `scale` is `sigma_hat` or the true `sigma`.
pub fn threshold_estimate(kind: EstimatorKind, ls: f64, scale: f64, xi: f64, eta: f64) -> f64 {
    let t = scale * xi * eta;
    if ls.abs() <= t {
        return 0.0;
    }
    match kind {
        EstimatorKind::Hard => ls,
        EstimatorKind::Soft => soft(ls, t),
        EstimatorKind::AdaptiveSoft => ls - t * t / ls,
    }
}

pub fn lasso(data: &RegressionData, config: &LassoConfig, sigma_hat: f64) -> Result<DVector<f64>> {
    data.design.lasso(&data.y, config, sigma_hat)
}

pub fn adaptive_lasso(data: &RegressionData, config: &LassoConfig, sigma_hat: f64) -> Result<DVector<f64>> {
    data.design.adaptive_lasso(&data.y, config, sigma_hat)
}

/// Reads a matrix written one row per line with whitespace-separated
/// entries. Blank lines and lines starting with `#` are skipped.
pub fn read_matrix(r: impl BufRead) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t
            .split_whitespace()
            .map(|s| f64::from_str(s).map_err(|_| invalid(format!("bad matrix entry {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(invalid(format!("ragged matrix: rows of {} and {} entries", first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(invalid("empty matrix"));
    }
    let (n, k) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, k, |i, j| rows[i][j]))
}

/// Inverse of [`read_matrix`]; entries use the shortest round-trip form.
pub fn write_matrix(w: &mut impl Write, x: &DMatrix<f64>) -> Result<()> {
    for i in 0..x.nrows() {
        let row: Vec<String> = x.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}
