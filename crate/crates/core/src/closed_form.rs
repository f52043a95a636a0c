//! Explicit solutions `v(t) = C (cosh νt)^m` of the reduced equation, their
//! radial form `u(r)`, and the Emden–Fowler map between the two.

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Relative tolerance on `4q²K2² = K0(q²+4)²`, `q = p+1`.
pub const SOLVABILITY_TOL: f64 = 1e-9;

/// Which explicit family a solution belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    Case1,
    Case2,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoshSolution {
    pub m: f64,
    pub nu: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub case_tag: CaseTag,
    pub gamma_decay: f64,
}

/// `ln cosh x` without overflow.
pub(crate) fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        a.cosh().ln()
    } else {
        a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
    }
}

/// Relative mismatch of the solvability relation; zero on the explicit branches.
pub fn solvability_mismatch(params: &ProblemParams) -> f64 {
    let q = params.p + 1.0;
    let lhs = 4.0 * q * q * params.k2().powi(2);
    let rhs = params.k0() * (q * q + 4.0).powi(2);
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

fn case_tag(params: &ProblemParams, m: f64) -> CaseTag {
    let n = params.nf();
    let a = params.alpha;
    if close(a, params.beta, 1e-12) && a > -2.0 && close(m, -(n - 4.0 - a) / (2.0 + a), 1e-12) {
        return CaseTag::Case1;
    }
    if a < -2.0
        && close((n + a) * (n + params.beta), (n - 4.0 - a).powi(2), 1e-12)
        && close(m, (n + a) / (2.0 + a), 1e-12)
    {
        return CaseTag::Case2;
    }
    CaseTag::Generic
}

pub fn build_cosh_solution(params: &ProblemParams) -> Result<CoshSolution> {
    let k2 = params.k2();
    if !(k2 > 0.0) {
        return Err(Error::NoExplicitSolution(format!("needs K2 > 0, got K2 = {k2}")));
    }
    let mismatch = solvability_mismatch(params);
    if !(mismatch <= SOLVABILITY_TOL) {
        return Err(Error::NoExplicitSolution(format!(
            "4(p+1)^2 K2^2 = K0((p+1)^2+4)^2 fails with relative mismatch {mismatch:e}"
        )));
    }
    let p = params.p;
    let m = -4.0 / (p - 1.0);
    let nu = (k2 / (m * m + (m - 2.0).powi(2))).sqrt();
    let amp = m * (m - 1.0) * (m - 2.0) * (m - 3.0) * nu.powi(4);
    if !(amp > 0.0) {
        return Err(Error::Amplitude(amp));
    }
    let c = amp.powf(1.0 / (p - 1.0));
    Ok(CoshSolution {
        m,
        nu,
        c,
        case_tag: case_tag(params, m),
        gamma_decay: params.ef_exponent() + nu * m,
    })
}

// One term `coef · sinh^s · cosh^q` in the x-derivative expansion, s ∈ {0, 1}.
#[derive(Clone, Copy)]
struct Term {
    coef: f64,
    sinh: bool,
    q: f64,
}

fn differentiate(terms: &[Term]) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::with_capacity(terms.len() + 1);
    let mut push = |t: Term| {
        if let Some(e) = out.iter_mut().find(|e| e.sinh == t.sinh && e.q == t.q) {
            e.coef += t.coef;
        } else {
            out.push(t);
        }
    };
    for t in terms {
        if t.sinh {
            // (s c^q)' = (q+1) c^{q+1} − q c^{q−1}
            push(Term { coef: t.coef * (t.q + 1.0), sinh: false, q: t.q + 1.0 });
            push(Term { coef: -t.coef * t.q, sinh: false, q: t.q - 1.0 });
        } else {
            // (c^q)' = q s c^{q−1}
            push(Term { coef: t.coef * t.q, sinh: true, q: t.q - 1.0 });
        }
    }
    out.retain(|t| t.coef != 0.0);
    out
}

impl CoshSolution {
    /// The k-th derivative of `v`, k ≤ 4.
    pub fn eval_v(&self, t: f64, order: usize) -> f64 {
        assert!(order <= 4, "derivative order {order} > 4");
        self.derivatives(t)[order]
    }

    /// `(v, v′, v″, v‴, v⁗)` at `t`.
    pub fn derivatives(&self, t: f64) -> [f64; 5] {
        let x = self.nu * t;
        let lc = ln_cosh(x);
        let th = x.tanh();
        let mut terms = vec![Term { coef: 1.0, sinh: false, q: self.m }];
        let mut out = [0.0; 5];
        let mut scale = self.c;
        for (k, slot) in out.iter_mut().enumerate() {
            if k > 0 {
                terms = differentiate(&terms);
                scale *= self.nu;
            }
            let sum: f64 = terms
                .iter()
                .map(|t| {
                    if t.sinh {
                        // sinh · cosh^q = tanh · cosh^{q+1}
                        t.coef * th * ((t.q + 1.0) * lc).exp()
                    } else {
                        t.coef * (t.q * lc).exp()
                    }
                })
                .sum();
            *slot = scale * sum;
        }
        out
    }

    /// Radial profile `(C/2^m) r^{−γ} (1 + r^{2ν})^m`.
    pub fn eval_u(&self, r: f64) -> f64 {
        let lr = r.ln();
        let s = 2.0 * self.nu * lr;
        let ln1p = if s > 0.0 { s + (-s).exp().ln_1p() } else { s.exp().ln_1p() };
        let ln_u = self.c.ln() - self.m * std::f64::consts::LN_2 - self.gamma_decay * lr + self.m * ln1p;
        ln_u.exp()
    }
}

/// `v⁗ − K2v″ + K0v − v^p` from a derivative oracle returning `(v, …, v⁗)`.
pub fn ode_residual<F: Fn(f64) -> [f64; 5]>(vfun: F, t: f64, k2: f64, k0: f64, p: f64) -> f64 {
    let d = vfun(t);
    d[4] - k2 * d[2] + k0 * d[0] - d[0].powf(p)
}

/// `v(t) = r^{e} u(r)` with `t = −ln r` and `e = (n−4−α)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdenFowlerMap {
    pub n: u32,
    pub alpha: f64,
    pub exponent: f64,
}

impl EmdenFowlerMap {
    pub fn new(n: u32, alpha: f64) -> Result<Self> {
        let exponent = 0.5 * (f64::from(n) - 4.0 - alpha);
        if !(exponent > 0.0) {
            return Err(Error::Domain(format!(
                "Emden-Fowler exponent (n-4-alpha)/2 = {exponent} must be positive"
            )));
        }
        Ok(Self { n, alpha, exponent })
    }

    pub fn from_params(params: &ProblemParams) -> Self {
        Self { n: params.n, alpha: params.alpha, exponent: params.ef_exponent() }
    }

    /// `v(t)` given the radial value `u(r)` at `r = e^{−t}`.
    pub fn forward<U: Fn(f64) -> f64>(&self, u: U, t: f64) -> f64 {
        let r = (-t).exp();
        (self.exponent * -t).exp() * u(r)
    }

    /// `u(r)` given `v` as a function of `t`.
    pub fn inverse<V: Fn(f64) -> f64>(&self, v: V, r: f64) -> f64 {
        r.powf(-self.exponent) * v(-r.ln())
    }
}

/// `u(r)` pushed through the forward map and back.
pub fn emden_fowler_roundtrip<U: Fn(f64) -> f64>(map: &EmdenFowlerMap, u: U, r: f64) -> f64 {
    map.inverse(|t| map.forward(&u, t), r)
}

/// CSV of `(t, v, v′, v″, v‴, residual)` samples.
pub fn write_v_csv<W: Write>(sol: &CoshSolution, params: &ProblemParams, ts: &[f64], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let io = |e: csv::Error| Error::Domain(format!("csv output failed: {e}"));
    wr.write_record(["t", "v", "dv", "d2v", "d3v", "residual"]).map_err(io)?;
    for &t in ts {
        let d = sol.derivatives(t);
        let res = ode_residual(|s| sol.derivatives(s), t, params.k2(), params.k0(), params.p);
        wr.write_record([t, d[0], d[1], d[2], d[3], res].map(|x| format!("{x:.16e}"))).map_err(io)?;
    }
    wr.flush().map_err(|e| Error::Domain(format!("csv output failed: {e}")))
}

/// CSV of `(r, u)` samples.
pub fn write_u_csv<W: Write>(sol: &CoshSolution, rs: &[f64], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let io = |e: csv::Error| Error::Domain(format!("csv output failed: {e}"));
    wr.write_record(["r", "u"]).map_err(io)?;
    for &r in rs {
        wr.write_record([r, sol.eval_u(r)].map(|x| format!("{x:.16e}"))).map_err(io)?;
    }
    wr.flush().map_err(|e| Error::Domain(format!("csv output failed: {e}")))
}
