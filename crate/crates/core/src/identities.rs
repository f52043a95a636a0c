//! Quadrature checks of the radial Hardy–Rellich identities, the norm
//! decomposition, the Hardy inequality and the `τ_α` change of variables.
//!
//! Radial integrals `ω_n∫f²r^{n−1−w}dr` are taken in `t = −ln r`, where they
//! read `ω_n∫f(e^{−t})²e^{−(n−w)t}dt` and the origin is pushed to `t = +∞`.

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::quadrature::QuadratureGrid;
use crate::special::sphere_measure;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Integrand size at `±T`, relative to its peak, above which a tail is
/// considered not negligible.
pub const TAIL_TOL: f64 = 1e-14;
/// Pass threshold for equalities.
pub const IDENTITY_TOL: f64 = 1e-6;
/// Slack granted to the Hardy ratio.
pub const HARDY_SLACK: f64 = 1e-9;

type Evaluator = dyn Fn(f64) -> (f64, f64, f64) + Send + Sync;

/// A radial profile with analytic `(u, u′, u″)`.
#[derive(Clone)]
pub struct RadialTestFunction {
    pub name: String,
    evaluator: Arc<Evaluator>,
    /// Effective support `(r_min, r_max)`; sets the span of [`Self::grid`].
    pub support_hint: (f64, f64),
    pub smoothness_tag: String,
}

impl fmt::Debug for RadialTestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialTestFunction")
            .field("name", &self.name)
            .field("support_hint", &self.support_hint)
            .field("smoothness_tag", &self.smoothness_tag)
            .finish()
    }
}

impl RadialTestFunction {
    pub fn new<F>(name: &str, support_hint: (f64, f64), smoothness_tag: &str, evaluator: F) -> Self
    where
        F: Fn(f64) -> (f64, f64, f64) + Send + Sync + 'static,
    {
        Self { name: name.into(), evaluator: Arc::new(evaluator), support_hint, smoothness_tag: smoothness_tag.into() }
    }

    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        (self.evaluator)(r)
    }

    /// `e^{−r²}`
    pub fn gaussian() -> Self {
        Self::new("gaussian", ((-40.0f64).exp(), 8.0), "smooth", |r| {
            let u = (-r * r).exp();
            (u, -2.0 * r * u, (4.0 * r * r - 2.0) * u)
        })
    }

    /// `r²e^{−r²}`
    pub fn r2_gaussian() -> Self {
        Self::new("r2_gaussian", ((-40.0f64).exp(), 8.0), "smooth", |r| {
            let g = (-r * r).exp();
            let r2 = r * r;
            (r2 * g, (2.0 * r - 2.0 * r * r2) * g, (2.0 - 10.0 * r2 + 4.0 * r2 * r2) * g)
        })
    }

    /// `e^{−(ln r)²}`, Gaussian in `t`.
    pub fn log_gaussian() -> Self {
        Self::new("log_gaussian", ((-10.0f64).exp(), 10.0f64.exp()), "smooth away from 0", |r| {
            let l = r.ln();
            let u = (-l * l).exp();
            (u, -2.0 * l / r * u, (4.0 * l * l + 2.0 * l - 2.0) / (r * r) * u)
        })
    }

    /// `sech(ln r) = 2r/(1+r²)`, decaying only like `r^{∓1}` at the ends.
    pub fn sech_log() -> Self {
        Self::new("sech_log", ((-80.0f64).exp(), 80.0f64.exp()), "algebraic tails", |r| {
            let q = 1.0 + r * r;
            (2.0 * r / q, 2.0 * (1.0 - r * r) / (q * q), 4.0 * r * (r * r - 3.0) / (q * q * q))
        })
    }

    pub fn zero() -> Self {
        Self::new("zero", (1e-3, 1e3), "smooth", |_| (0.0, 0.0, 0.0))
    }

    pub fn suite() -> Vec<Self> {
        vec![Self::gaussian(), Self::r2_gaussian(), Self::log_gaussian(), Self::sech_log()]
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "gaussian" => Some(Self::gaussian()),
            "r2_gaussian" => Some(Self::r2_gaussian()),
            "log_gaussian" => Some(Self::log_gaussian()),
            "sech_log" => Some(Self::sech_log()),
            "zero" => Some(Self::zero()),
            _ => None,
        }
    }

    /// `ũ(r) = u(r^{1/τ})` with its derivatives by the chain rule.
    pub fn rescaled(&self, tau: f64) -> Self {
        let inner = self.clone();
        let hint = (self.support_hint.0.powf(tau), self.support_hint.1.powf(tau));
        Self::new(&format!("{}_tau", self.name), hint, &self.smoothness_tag, move |r| {
            let s = r.powf(1.0 / tau);
            let (u, du, d2u) = inner.eval(s);
            let ds = s / (tau * r);
            (u, du * ds, d2u * ds * ds + du * (1.0 / tau) * (1.0 / tau - 1.0) * s / (r * r))
        })
    }

    /// Symmetric grid in `t` covering the support hint, two panels per unit.
    pub fn grid(&self) -> QuadratureGrid {
        let half = self.support_hint.0.ln().abs().max(self.support_hint.1.ln().abs()).max(1.0);
        QuadratureGrid::symmetric(half, (4.0 * half).ceil() as usize, 16)
    }
}

/// `T_a u = u′ + (n−2−a)/(2r) u`.
pub fn t_operator(n: u32, alpha_idx: f64, u: &RadialTestFunction, r: f64) -> f64 {
    let (v, dv, _) = u.eval(r);
    dv + t_coef(n, alpha_idx) / r * v
}

fn t_coef(n: u32, a: f64) -> f64 {
    (n as f64 - 2.0 - a) / 2.0
}

/// `T_α(T_{α+2}u)` from `(u, u′, u″)`.
fn tt(n: u32, alpha: f64, r: f64, (u, du, d2u): (f64, f64, f64)) -> f64 {
    let c = t_coef(n, alpha + 2.0);
    let w = du + c / r * u;
    let dw = d2u + c * (du / r - u / (r * r));
    dw + t_coef(n, alpha) / r * w
}

fn laplacian(n: u32, r: f64, (_, du, d2u): (f64, f64, f64)) -> f64 {
    d2u + (n as f64 - 1.0) * du / r
}

/// `ω_n∫g(r) r^{n−1−w} dr` for `g ≥ 0` given through `ln g` (`−∞` for zero).
fn radial_integral_ln<F: Fn(f64) -> f64>(ln_g: F, weight_exp: f64, n: u32, grid: &QuadratureGrid) -> Result<f64> {
    let d = n as f64 - weight_exp;
    let integrand = |t: f64| {
        let l = ln_g((-t).exp());
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            (l - d * t).exp()
        }
    };
    let vals: Vec<f64> = grid.nodes.iter().map(|&t| integrand(t)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::TailNonconvergence(format!("non-finite integrand for weight exponent {weight_exp}")));
    }
    let peak = vals.iter().fold(0.0f64, |m, v| m.max(*v));
    let (a, b) = grid.t_span;
    let ends = integrand(a).max(integrand(b));
    if peak > 0.0 && !(ends <= TAIL_TOL * peak) {
        return Err(Error::TailNonconvergence(format!(
            "integrand at the ends of t in ({a}, {b}) is {:.1e} of its peak (weight exponent {weight_exp}, n = {n})",
            ends / peak
        )));
    }
    let s: f64 = vals.iter().zip(&grid.weights).map(|(v, w)| v * w).sum();
    Ok(sphere_measure(n)? * s)
}

fn ln_sq(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        2.0 * x.abs().ln()
    }
}

/// `‖f‖²_w = ω_n∫f(r)² r^{−w} r^{n−1} dr`.
pub fn weighted_integral<F: Fn(f64) -> f64>(f: F, weight_exp: f64, n: u32, grid: &QuadratureGrid) -> Result<f64> {
    radial_integral_ln(|r| ln_sq(f(r)), weight_exp, n, grid)
}

fn norm_alpha_raw(u: &RadialTestFunction, n: u32, alpha: f64, lambda: f64, mu: f64, grid: &QuadratureGrid) -> Result<f64> {
    let lap = weighted_integral(|r| laplacian(n, r, u.eval(r)), alpha, n, grid)?;
    let grad = weighted_integral(|r| u.eval(r).1, alpha + 2.0, n, grid)?;
    let zero = weighted_integral(|r| u.eval(r).0, alpha + 4.0, n, grid)?;
    Ok(lap - lambda * grad + mu * zero)
}

/// `∫|x|^{−α}|Δu|² − λ|x|^{−α−2}|∇u|² + μ|x|^{−α−4}u²`.
pub fn norm_alpha(u: &RadialTestFunction, params: &ProblemParams, grid: &QuadratureGrid) -> Result<f64> {
    norm_alpha_raw(u, params.n, params.alpha, params.lambda, params.mu, grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdentityId {
    Rellich22,
    Gradient23,
    TOp24,
    Gradient25,
    NormDecomp,
    Hardy31,
    TauScaling,
}

impl IdentityId {
    pub const ALL: [IdentityId; 7] = [
        IdentityId::Rellich22,
        IdentityId::Gradient23,
        IdentityId::TOp24,
        IdentityId::Gradient25,
        IdentityId::NormDecomp,
        IdentityId::Hardy31,
        IdentityId::TauScaling,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_id: IdentityId,
    pub function: String,
    pub n: u32,
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// For equalities `|lhs − rhs|/max(|lhs|, |rhs|)`; for the Hardy
    /// inequality the relative shortfall of `lhs` below `rhs`, zero when it holds.
    pub rel_err: f64,
    /// Hardy only: `‖∇u‖²_{α+2}/‖u‖²_{α+4}`.
    pub ratio: Option<f64>,
    /// Hardy only: `(n−4−α)²/4`.
    pub constant: Option<f64>,
    pub passed: bool,
}

pub fn rel_err(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300)
}

pub fn verify_identity(
    id: IdentityId,
    u: &RadialTestFunction,
    n: u32,
    alpha: f64,
    lambda: f64,
    mu: f64,
    grid: &QuadratureGrid,
) -> Result<IdentityReport> {
    let nf = n as f64;
    if n < 5 || !(alpha > -nf && alpha < nf - 4.0) {
        return Err(Error::Validation(format!("identities need n >= 5 and -n < alpha < n-4, got n = {n}, alpha = {alpha}")));
    }
    let wi = |f: &dyn Fn(f64) -> f64, w: f64| weighted_integral(f, w, n, grid);
    let ev = |r: f64| u.eval(r);
    let mut report = IdentityReport {
        identity_id: id,
        function: u.name.clone(),
        n,
        alpha,
        lambda,
        mu,
        lhs: 0.0,
        rhs: 0.0,
        rel_err: 0.0,
        ratio: None,
        constant: None,
        passed: false,
    };
    let t2 = |r: f64| t_operator(n, alpha + 2.0, u, r);
    let a4 = (nf - 4.0 - alpha) * (nf - 4.0 - alpha) / 4.0;
    let (lhs, rhs) = match id {
        IdentityId::Rellich22 => {
            let lhs = wi(&|r| laplacian(n, r, ev(r)), alpha)?;
            let rhs = (nf + alpha).powi(2) / 4.0 * wi(&|r| ev(r).1, alpha + 2.0)?
                + a4 * wi(&t2, alpha + 2.0)?
                + wi(&|r| tt(n, alpha, r, ev(r)), alpha)?;
            (lhs, rhs)
        }
        IdentityId::Gradient23 => {
            // ∇(r^k u) by the product rule, independent of T_α
            let k = t_coef(n, alpha);
            let lhs = wi(&|r| ev(r).1, alpha)?;
            let rhs = k * k * wi(&|r| ev(r).0, alpha + 2.0)?
                + wi(
                    &|r| {
                        let (v, dv, _) = ev(r);
                        k * r.powf(k - 1.0) * v + r.powf(k) * dv
                    },
                    nf - 2.0,
                )?;
            (lhs, rhs)
        }
        IdentityId::TOp24 => {
            let k = t_coef(n, alpha + 2.0);
            let lhs = wi(
                &|r| {
                    let (v, dv, _) = ev(r);
                    k * r.powf(k - 1.0) * v + r.powf(k) * dv
                },
                nf - 2.0,
            )?;
            (lhs, wi(&t2, alpha + 2.0)?)
        }
        IdentityId::Gradient25 => {
            let lhs = wi(&|r| ev(r).1, alpha + 2.0)?;
            let rhs = a4 * wi(&|r| ev(r).0, alpha + 4.0)? + wi(&t2, alpha + 2.0)?;
            (lhs, rhs)
        }
        IdentityId::NormDecomp => {
            let lhs = norm_alpha_raw(u, n, alpha, lambda, mu, grid)?;
            let c0 = mu + (nf + alpha).powi(2) * (nf - 4.0 - alpha).powi(2) / 16.0 - a4 * lambda;
            let c1 = (nf + alpha).powi(2) / 4.0 - lambda + a4;
            let rhs = c0 * wi(&|r| ev(r).0, alpha + 4.0)?
                + c1 * wi(&t2, alpha + 2.0)?
                + wi(&|r| tt(n, alpha, r, ev(r)), alpha)?;
            (lhs, rhs)
        }
        IdentityId::Hardy31 => {
            let grad = wi(&|r| ev(r).1, alpha + 2.0)?;
            let zero = wi(&|r| ev(r).0, alpha + 4.0)?;
            let ratio = grad / zero;
            report.ratio = Some(ratio);
            report.constant = Some(a4);
            report.lhs = grad;
            report.rhs = a4 * zero;
            report.rel_err = ((report.rhs - grad) / grad.abs().max(report.rhs.abs()).max(1e-300)).max(0.0);
            report.passed = ratio >= a4 - HARDY_SLACK;
            return Ok(report);
        }
        IdentityId::TauScaling => return tau_scaling(report, u, n, alpha, grid),
    };
    report.lhs = lhs;
    report.rhs = rhs;
    report.rel_err = rel_err(lhs, rhs);
    report.passed = report.rel_err <= IDENTITY_TOL;
    Ok(report)
}

/// The four integrals under `ũ(r) = u(r^{1/τ})`, `τ = 1 − α/(n−4)`;
/// `lhs`/`rhs` carry the pair with the largest discrepancy.
fn tau_scaling(
    mut report: IdentityReport,
    u: &RadialTestFunction,
    n: u32,
    alpha: f64,
    grid: &QuadratureGrid,
) -> Result<IdentityReport> {
    let nf = n as f64;
    let tau = 1.0 - alpha / (nf - 4.0);
    let ut = u.rescaled(tau);
    let crit = 2.0 * nf / (nf - 4.0);
    fn ln_power(f: &RadialTestFunction, crit: f64) -> impl Fn(f64) -> f64 + '_ {
        move |r: f64| {
            let v = f.eval(r).0;
            if v == 0.0 {
                f64::NEG_INFINITY
            } else {
                crit * v.abs().ln()
            }
        }
    }
    let ri = |g: &dyn Fn(f64) -> f64, w: f64| radial_integral_ln(g, w, n, grid);
    let wi = |f: &dyn Fn(f64) -> f64, w: f64| weighted_integral(f, w, n, grid);
    let pairs = [
        (ri(&ln_power(&ut, crit), 0.0)?, tau * ri(&ln_power(u, crit), nf * alpha / (nf - 4.0))?),
        (wi(&|r| ut.eval(r).1, 2.0)?, wi(&|r| u.eval(r).1, alpha + 2.0)? / tau),
        (wi(&|r| ut.eval(r).0, 4.0)?, tau * wi(&|r| u.eval(r).0, alpha + 4.0)?),
        (
            wi(&|r| laplacian(n, r, ut.eval(r)), 0.0)?,
            wi(
                &|r| {
                    let e = u.eval(r);
                    laplacian(n, r, e) + (tau - 1.0) * (nf - 2.0) * e.1 / r
                },
                alpha,
            )? / tau.powi(3),
        ),
    ];
    let (lhs, rhs) = pairs
        .into_iter()
        .max_by(|a, b| rel_err(a.0, a.1).total_cmp(&rel_err(b.0, b.1)))
        .expect("four pairs");
    report.lhs = lhs;
    report.rhs = rhs;
    report.rel_err = rel_err(lhs, rhs);
    report.passed = report.rel_err <= IDENTITY_TOL;
    Ok(report)
}

/// Result of one suite entry: a report, or the reason it was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub identity_id: IdentityId,
    pub function: String,
    pub n: u32,
    pub alpha: f64,
    pub report: Option<IdentityReport>,
    pub skipped: Option<String>,
}

/// Coupling constants used for the norm decomposition in the builtin suite.
pub const SUITE_LAMBDA: f64 = 1.0;
pub const SUITE_MU: f64 = 0.5;

/// Every identity over the four profiles, `n ∈ {5, 6, 8}`, `α ∈ {−1, 0, 1, −3}`
/// inside `(−n, n−4)`. Divergent combinations are recorded as skipped.
pub fn builtin_suite_cases() -> Vec<(IdentityId, String, u32, f64)> {
    let mut out = Vec::new();
    for id in IdentityId::ALL {
        for f in RadialTestFunction::suite() {
            for n in [5u32, 6, 8] {
                for alpha in [-1.0, 0.0, 1.0, -3.0] {
                    if alpha < n as f64 - 4.0 {
                        out.push((id, f.name.clone(), n, alpha));
                    }
                }
            }
        }
    }
    out
}

pub fn run_case(id: IdentityId, function: &str, n: u32, alpha: f64, lambda: f64, mu: f64) -> Result<SuiteEntry> {
    let u = RadialTestFunction::by_name(function)
        .ok_or_else(|| Error::Validation(format!("unknown test function '{function}'")))?;
    let mut grid = u.grid();
    if id == IdentityId::TauScaling {
        // ũ lives on the span of u stretched by τ
        let wide = u.rescaled(1.0 - alpha / (n as f64 - 4.0)).grid();
        if wide.t_span.1 > grid.t_span.1 {
            grid = wide;
        }
    }
    let (report, skipped) = match verify_identity(id, &u, n, alpha, lambda, mu, &grid) {
        Ok(r) => (Some(r), None),
        Err(e @ Error::TailNonconvergence(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(SuiteEntry { identity_id: id, function: function.into(), n, alpha, report, skipped })
}
