//! Problem parameters `(n, α, β, p, λ, μ)`, the coefficients of the reduced
//! equation `v'''' − K2 v'' + K0 v = v^p`, and the admissibility conditions.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Tolerance on the critical-hyperbola residual accepted at construction.
pub const HYPERBOLA_TOL: f64 = 1e-12;

/// Relative slack used by every inequality in [`ConditionReport`].
const CMP_EPS: f64 = 1e-12;

fn leq(a: f64, b: f64) -> bool {
    a <= b + CMP_EPS * 1f64.max(a.abs()).max(b.abs())
}

fn lt(a: f64, b: f64) -> bool {
    a < b - CMP_EPS * 1f64.max(a.abs()).max(b.abs())
}

/// A validated problem instance. Always satisfies
/// `(n+α)/2 + (n+β)/(p+1) = n−2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ProblemParams {
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Deserialize)]
struct RawParams {
    n: u32,
    alpha: f64,
    beta: f64,
    p: f64,
    lambda: f64,
    mu: f64,
}

impl TryFrom<RawParams> for ProblemParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ProblemParams::with_beta(r.n, r.alpha, r.beta, r.p, r.lambda, r.mu)
    }
}

/// β such that `(n, α, β, p)` lies on the critical hyperbola.
pub fn beta_from_hyperbola(n: u32, alpha: f64, p: f64) -> Result<f64> {
    if n < 5 {
        return Err(Error::Validation(format!("dimension n = {n} must be at least 5")));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("nonlinearity exponent p = {p} must exceed 1")));
    }
    let n = f64::from(n);
    Ok((p + 1.0) * (n - 2.0 - 0.5 * (n + alpha)) - n)
}

/// p such that `(n, α, β, p)` lies on the critical hyperbola.
pub fn p_from_hyperbola(n: u32, alpha: f64, beta: f64) -> Result<f64> {
    if n < 5 {
        return Err(Error::Validation(format!("dimension n = {n} must be at least 5")));
    }
    let nf = f64::from(n);
    let ef = nf - 4.0 - alpha;
    if !(ef > 0.0) {
        return Err(Error::Validation(format!(
            "alpha = {alpha} must satisfy alpha < n - 4 = {}",
            nf - 4.0
        )));
    }
    let p = 2.0 * (nf + beta) / ef - 1.0;
    if !(p > 1.0) {
        return Err(Error::Domain(format!(
            "beta = {beta} puts p = {p} at or below 1 on the critical hyperbola"
        )));
    }
    Ok(p)
}

impl ProblemParams {
    /// Builds an instance with β recomputed from the hyperbola.
    pub fn new(n: u32, alpha: f64, p: f64, lambda: f64, mu: f64) -> Result<Self> {
        let beta = beta_from_hyperbola(n, alpha, p)?;
        let params = Self { n, alpha, beta, p, lambda, mu };
        params.validate()?;
        Ok(params)
    }

    /// Builds an instance from all six values; the hyperbola must hold to
    /// [`HYPERBOLA_TOL`].
    pub fn with_beta(n: u32, alpha: f64, beta: f64, p: f64, lambda: f64, mu: f64) -> Result<Self> {
        let params = Self { n, alpha, beta, p, lambda, mu };
        params.validate()?;
        Ok(params)
    }

    /// Builds an instance with p recomputed from the hyperbola.
    pub fn from_beta(n: u32, alpha: f64, beta: f64, lambda: f64, mu: f64) -> Result<Self> {
        let p = p_from_hyperbola(n, alpha, beta)?;
        Self::with_beta(n, alpha, beta, p, lambda, mu)
    }

    pub fn validate(&self) -> Result<()> {
        let n = f64::from(self.n);
        if self.n < 5 {
            return Err(Error::Validation(format!("dimension n = {} must be at least 5", self.n)));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("p", self.p),
            ("lambda", self.lambda),
            ("mu", self.mu),
        ] {
            if !v.is_finite() {
                return Err(Error::Validation(format!("{name} = {v} is not finite")));
            }
        }
        if !(-n < self.alpha && self.alpha < n - 4.0) {
            return Err(Error::Validation(format!(
                "weight exponent alpha = {} must satisfy -n < alpha < n - 4 with n = {}",
                self.alpha, self.n
            )));
        }
        if !(self.p > 1.0) {
            return Err(Error::Validation(format!("nonlinearity exponent p = {} must exceed 1", self.p)));
        }
        let r = self.hyperbola_residual();
        if r.abs() > HYPERBOLA_TOL {
            return Err(Error::Validation(format!(
                "critical hyperbola (n+alpha)/2 + (n+beta)/(p+1) = n-2 violated by {r:e}"
            )));
        }
        Ok(())
    }

    pub fn hyperbola_residual(&self) -> f64 {
        let n = f64::from(self.n);
        0.5 * (n + self.alpha) + (n + self.beta) / (self.p + 1.0) - (n - 2.0)
    }

    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    /// Exponent `(n−4−α)/2` of the Emden–Fowler substitution.
    pub fn ef_exponent(&self) -> f64 {
        0.5 * (self.nf() - 4.0 - self.alpha)
    }

    /// `(n−2)(α+2)`, the pivot of every λ-threshold.
    pub fn lambda_pivot(&self) -> f64 {
        (self.nf() - 2.0) * (self.alpha + 2.0)
    }

    pub fn k2(&self) -> f64 {
        let n = self.nf();
        0.5 * ((n - 2.0).powi(2) + (self.alpha + 2.0).powi(2)) - self.lambda
    }

    pub fn k0(&self) -> f64 {
        let n = self.nf();
        let e = n - 4.0 - self.alpha;
        let s = n + self.alpha;
        e * e * s * s / 16.0 - self.lambda * (0.5 * e).powi(2) + self.mu
    }

    /// `(λ − (n−2)(α+2))² − 4μ`, which equals `K2² − 4K0`.
    pub fn discriminant(&self) -> f64 {
        (self.lambda - self.lambda_pivot()).powi(2) - 4.0 * self.mu
    }

    /// Positive constant solution `K0^{1/(p−1)}`, if `K0 > 0`.
    pub fn equilibrium(&self) -> Option<f64> {
        let k0 = self.k0();
        (k0 > 0.0).then(|| k0.powf(1.0 / (self.p - 1.0)))
    }

    pub fn derive(&self) -> DerivedCoefficients {
        derive_coefficients(self)
    }

    pub fn conditions(&self) -> ConditionReport {
        check_conditions(self)
    }
}

/// One root of `r⁴ − K2 r² + K0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    fn real(re: f64) -> Self {
        Self { re, im: 0.0 }
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for Eigenvalue {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedCoefficients {
    #[serde(rename = "K2")]
    pub k2: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    pub l: Option<f64>,
    pub lam1: Eigenvalue,
    pub lam2: Eigenvalue,
    pub lam3: Eigenvalue,
    pub lam4: Eigenvalue,
}

impl DerivedCoefficients {
    pub fn eigenvalues(&self) -> [Eigenvalue; 4] {
        [self.lam1, self.lam2, self.lam3, self.lam4]
    }

    pub fn all_real(&self) -> bool {
        self.eigenvalues().iter().all(Eigenvalue::is_real)
    }

    /// Real eigenvalues in descending order, `None` if any is complex.
    pub fn real_eigenvalues_desc(&self) -> Option<[f64; 4]> {
        self.all_real()
            .then(|| [self.lam1.re, self.lam2.re, self.lam4.re, self.lam3.re])
    }

    /// `|r⁴ − K2 r² + K0|` at `r`.
    pub fn characteristic_residual(&self, r: Eigenvalue) -> f64 {
        let z = r.as_complex();
        let z2 = z * z;
        (z2 * z2 - z2 * self.k2 + self.k0).norm()
    }
}

/// Coefficients of the reduced equation and the four characteristic roots
/// `±√((K2 ± √D)/2)`, `D = (λ − (n−2)(α+2))² − 4μ`. Roots are labelled
/// `λ1 > λ2 > 0 > λ4 > λ3` when real; complex roots are reported as such.
pub fn derive_coefficients(params: &ProblemParams) -> DerivedCoefficients {
    let k2 = params.k2();
    let k0 = params.k0();
    let d = params.discriminant();
    let (hi, lo) = if d >= 0.0 {
        let s = d.sqrt();
        let r2_hi = 0.5 * (k2 + s);
        // The smaller root of the quadratic in r² via the product K0.
        let r2_lo = if r2_hi != 0.0 { k0 / r2_hi } else { 0.5 * (k2 - s) };
        (real_or_imaginary_sqrt(r2_hi), real_or_imaginary_sqrt(r2_lo))
    } else {
        let s = Complex64::new(0.0, (-d).sqrt());
        let k2c = Complex64::new(k2, 0.0);
        (((k2c + s) * 0.5).sqrt(), ((k2c - s) * 0.5).sqrt())
    };
    let as_eig = |z: Complex64| {
        if z.im == 0.0 {
            Eigenvalue::real(z.re)
        } else {
            Eigenvalue::from(z)
        }
    };
    DerivedCoefficients {
        k2,
        k0,
        l: params.equilibrium(),
        lam1: as_eig(hi),
        lam2: as_eig(lo),
        lam3: as_eig(-hi),
        lam4: as_eig(-lo),
    }
}

fn real_or_imaginary_sqrt(x: f64) -> Complex64 {
    if x >= 0.0 {
        Complex64::new(x.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-x).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    /// λ, μ lie in the region where the weighted quadratic form is a norm.
    pub norm_ok: bool,
    /// `K2² − 4K0 ≥ 0`.
    pub uniqueness_ok: bool,
    /// `−2 < α < n−4`, `μ > 0`, `λ ≤ (n−2)(α+2) − 2√μ`.
    pub periodicity_regime: bool,
    /// `−2 < α < n−4`, `μ ≥ 0`, `λ < (n−2)(α+2) − 2√μ` (strict form).
    pub periodicity_regime_strict: bool,
    /// `−n < α ≤ −2`, `λ > (n−2)(α+2) + 2√μ`.
    pub singular_regime: bool,
}

impl ConditionReport {
    pub fn any_c(&self) -> bool {
        self.c1 || self.c2 || self.c3
    }
}

pub fn check_conditions(params: &ProblemParams) -> ConditionReport {
    let n = params.nf();
    let (alpha, lambda, mu) = (params.alpha, params.lambda, params.mu);
    let e = n - 4.0 - alpha;
    let s = n + alpha;
    let pivot = params.lambda_pivot();
    let sqrt_mu = if mu >= 0.0 { mu.sqrt() } else { f64::NAN };
    let mu_cap = (0.5 * e).powi(4);
    let upper_small_mu = 4.0 * mu / (e * e) + s * s / 4.0;
    let upper_large_mu = e * e / 4.0 + s * s / 4.0;

    let c1 = mu >= 0.0 && leq(lambda, pivot - 2.0 * sqrt_mu);
    let c2 = mu >= 0.0
        && leq(mu, mu_cap)
        && leq(pivot + 2.0 * sqrt_mu, lambda)
        && leq(lambda, upper_small_mu);
    let c3 = mu <= 0.0 && leq(lambda, upper_small_mu);

    let norm_ok = (leq(lambda, upper_small_mu) && leq(mu, mu_cap))
        || (leq(lambda, upper_large_mu) && mu > mu_cap);

    let k2 = params.k2();
    let k0 = params.k0();
    let uniqueness_ok = leq(4.0 * k0, k2 * k2);

    let mid_alpha = -2.0 < alpha && alpha < n - 4.0;
    let periodicity_regime = mid_alpha && mu > 0.0 && leq(lambda, pivot - 2.0 * sqrt_mu);
    let periodicity_regime_strict = mid_alpha && mu >= 0.0 && lt(lambda, pivot - 2.0 * sqrt_mu);
    let singular_regime =
        -n < alpha && alpha <= -2.0 && mu >= 0.0 && lt(pivot + 2.0 * sqrt_mu, lambda);

    ConditionReport {
        c1,
        c2,
        c3,
        norm_ok,
        uniqueness_ok,
        periodicity_regime,
        periodicity_regime_strict,
        singular_regime,
    }
}

/// Which family of explicit cosh-power solutions a λ-branch belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExplicitCase {
    /// `α = β > −2`.
    Case1,
    /// `(n+α)(n+β) = (n−4−α)²`, `α < −2`.
    Case2,
}

impl ExplicitCase {
    /// The exponent p forced by the case on the critical hyperbola.
    pub fn exponent(self, n: u32, alpha: f64) -> f64 {
        let n = f64::from(n);
        match self {
            ExplicitCase::Case1 => 2.0 * (n + alpha) / (n - 4.0 - alpha) - 1.0,
            ExplicitCase::Case2 => 2.0 * (n - 4.0 - alpha) / (n + alpha) - 1.0,
        }
    }

    /// The β forced by the case.
    pub fn beta(self, n: u32, alpha: f64) -> f64 {
        let n = f64::from(n);
        match self {
            ExplicitCase::Case1 => alpha,
            ExplicitCase::Case2 => (n - 4.0 - alpha).powi(2) / (n + alpha) - n,
        }
    }
}

/// The two λ values admitting an explicit solution, plus the value of the
/// single closed form written in `(n, α, μ)` alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBranches {
    pub plus: f64,
    pub minus: f64,
    pub unified: Option<f64>,
}

impl LambdaBranches {
    /// Distance from `unified` to the nearer branch, relative to scale.
    pub fn unified_mismatch(&self) -> Option<f64> {
        self.unified.map(|u| {
            let d = (u - self.plus).abs().min((u - self.minus).abs());
            d / 1f64.max(u.abs())
        })
    }
}

pub fn explicit_lambda_branches(case: ExplicitCase, n: u32, alpha: f64, mu: f64) -> Result<LambdaBranches> {
    if n < 5 {
        return Err(Error::Validation(format!("dimension n = {n} must be at least 5")));
    }
    let nf = f64::from(n);
    if !(-nf < alpha && alpha < nf - 4.0) {
        return Err(Error::Validation(format!(
            "alpha = {alpha} must satisfy -n < alpha < n - 4 with n = {n}"
        )));
    }
    match case {
        ExplicitCase::Case1 if !(alpha > -2.0) => {
            return Err(Error::CaseMismatch(format!(
                "the alpha = beta family needs alpha > -2, got {alpha}"
            )))
        }
        ExplicitCase::Case2 if !(alpha < -2.0) => {
            return Err(Error::CaseMismatch(format!(
                "the (n+alpha)(n+beta) = (n-4-alpha)^2 family needs alpha < -2, got {alpha}"
            )))
        }
        _ => {}
    }
    let q = case.exponent(n, alpha) + 1.0;
    let p3 = q + 2.0;
    let scale = (nf - 2.0).powi(2);
    let mu_rel = mu / scale.powi(2);
    let q2 = q * q;
    let q4 = q2 * q2;
    let (lead, radicand, denom) = match case {
        ExplicitCase::Case1 => (
            q4 - 16.0,
            (q4 - 16.0).powi(2) + q2 * p3.powi(4) * (q2 + 4.0).powi(2) * mu_rel,
            2.0 * q2 * p3 * p3,
        ),
        ExplicitCase::Case2 => (
            q2 * (16.0 - q4),
            q4 * (q4 - 16.0).powi(2) + 16.0 * q2 * p3.powi(4) * (q2 + 4.0).powi(2) * mu_rel,
            8.0 * q2 * p3 * p3,
        ),
    };
    if radicand < 0.0 {
        return Err(Error::Domain(format!(
            "radicand {radicand:e} of the explicit lambda-branch formula is negative (mu = {mu})"
        )));
    }
    let root = radicand.sqrt();
    Ok(LambdaBranches {
        plus: scale * (lead + root) / denom,
        minus: scale * (lead - root) / denom,
        unified: unified_lambda(n, alpha, mu),
    })
}

/// The λ-branch written directly in `(n, α, μ)`; `None` when its radicand is
/// negative or its denominator vanishes.
pub fn unified_lambda(n: u32, alpha: f64, mu: f64) -> Option<f64> {
    let a = f64::from(n) - 2.0;
    let b = 2.0 + alpha;
    let e = a - b;
    let s = a + b;
    let rad = a * a * b * b * e * e + 4.0 * s * s * mu;
    let den = s * s * e;
    (rad >= 0.0 && den != 0.0).then(|| (a * a + b * b) * (a * b * e + rad.sqrt()) / den)
}

/// Convenience constructor for the instance on a given explicit branch.
pub fn explicit_params(case: ExplicitCase, n: u32, alpha: f64, mu: f64, lambda: f64) -> Result<ProblemParams> {
    let p = case.exponent(n, alpha);
    let beta = case.beta(n, alpha);
    ProblemParams::with_beta(n, alpha, beta, p, lambda, mu)
}
