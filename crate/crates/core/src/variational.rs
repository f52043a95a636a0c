//! The one-dimensional quotient
//! `Q(v) = ∫(v″² + K2v′² + K0v²) / (∫|v|^{p+1})^{2/(p+1)}`,
//! its minimization on a uniform grid, and the closed-form infimum on the
//! explicit branches.

use crate::banded::{BandedCholesky, SymBanded};
use crate::closed_form::build_cosh_solution;
use crate::error::{Error, Result};
use crate::params::ProblemParams;
use crate::special::{beta_fn, sphere_measure};
use serde::{Deserialize, Serialize};

/// Relative change of the quotient that ends the descent.
pub const DESCENT_TOL: f64 = 1e-10;
pub const MAX_DESCENT_ITERS: usize = 5000;
/// Decay required at `±L` before the boundary warning is raised.
pub const BOUNDARY_DECAY: f64 = 1e-8;

/// Samples of `v` at `t_i = −L + i h`, `i = 0..=2L/h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    #[serde(rename = "L")]
    pub half_length: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl Grid1D {
    fn check(half_length: f64, h: f64) -> Result<usize> {
        if !(half_length > 0.0 && h > 0.0) {
            return Err(Error::Domain(format!("grid needs L > 0 and h > 0, got L = {half_length}, h = {h}")));
        }
        let ratio = half_length / h;
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio.max(1.0) || k < 2.0 {
            return Err(Error::Domain(format!("L/h = {ratio} must be an integer >= 2")));
        }
        Ok(2 * k as usize + 1)
    }

    pub fn from_fn<F: Fn(f64) -> f64>(half_length: f64, h: f64, f: F) -> Result<Self> {
        let n = Self::check(half_length, h)?;
        let values = (0..n).map(|i| f(-half_length + i as f64 * h)).collect();
        Ok(Self { half_length, h, values })
    }

    pub fn t(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.len();
        let mut w = vec![self.h; n];
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
        w
    }

    /// CSV with columns `t, v`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let io = |e: csv::Error| Error::Domain(format!("csv output failed: {e}"));
        wr.write_record(["t", "v"]).map_err(io)?;
        for (i, v) in self.values.iter().enumerate() {
            wr.write_record([format!("{:.16e}", self.t(i)), format!("{v:.16e}")]).map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Domain(format!("csv output failed: {e}")))
    }

    /// Largest `|v|` at the two end points.
    pub fn boundary_value(&self) -> f64 {
        self.values[0].abs().max(self.values[self.len() - 1].abs())
    }
}

// Row stencils (column, coefficient) of the first and second derivative.
fn d1_row(i: usize, n: usize, h: f64) -> Vec<(usize, f64)> {
    let c = 1.0 / (2.0 * h);
    if i == 0 {
        vec![(0, -3.0 * c), (1, 4.0 * c), (2, -c)]
    } else if i == n - 1 {
        vec![(n - 3, c), (n - 2, -4.0 * c), (n - 1, 3.0 * c)]
    } else {
        vec![(i - 1, -c), (i + 1, c)]
    }
}

fn d2_row(i: usize, n: usize, h: f64) -> Vec<(usize, f64)> {
    let c = 1.0 / (h * h);
    if i == 0 {
        vec![(0, 2.0 * c), (1, -5.0 * c), (2, 4.0 * c), (3, -c)]
    } else if i == n - 1 {
        vec![(n - 4, -c), (n - 3, 4.0 * c), (n - 2, -5.0 * c), (n - 1, 2.0 * c)]
    } else {
        vec![(i - 1, c), (i, -2.0 * c), (i + 1, c)]
    }
}

fn apply(row: &[(usize, f64)], v: &[f64]) -> f64 {
    row.iter().map(|&(j, c)| c * v[j]).sum()
}

/// `∫v″² + K2v′² + K0v²` with the stencils above and trapezoid weights.
fn numerator(grid: &Grid1D, k2: f64, k0: f64) -> f64 {
    numerator_of(&grid.values, grid.h, k2, k0)
}

fn numerator_of(v: &[f64], h: f64, k2: f64, k0: f64) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let d2 = apply(&d2_row(i, n, h), v);
            let d1 = apply(&d1_row(i, n, h), v);
            let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            w * (d2 * d2 + k2 * d1 * d1 + k0 * v[i] * v[i])
        })
        .sum()
}

fn ln_power_integral(grid: &Grid1D, p: f64) -> f64 {
    // log-sum-exp keeps huge amplitudes finite
    let w = grid.trapezoid_weights();
    let logs: Vec<f64> = grid
        .values
        .iter()
        .zip(&w)
        .filter(|(v, _)| **v != 0.0)
        .map(|(v, wi)| (p + 1.0) * v.abs().ln() + wi.ln())
        .collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

pub fn rayleigh_quotient(grid: &Grid1D, k2: f64, k0: f64, p: f64) -> Result<f64> {
    if grid.len() < 4 {
        return Err(Error::Domain("grid too small for the boundary stencils".into()));
    }
    let peak = grid.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    // Q is homogeneous of degree zero, so work with max|v| = 1
    let unit = Grid1D { values: grid.values.iter().map(|v| v / peak).collect(), ..grid.clone() };
    let ln_f = ln_power_integral(&unit, p);
    let num = numerator(&unit, k2, k0);
    Ok(num.signum() * (num.abs().ln() - 2.0 / (p + 1.0) * ln_f).exp())
}

/// Matrix `A` of the numerator, `vᵀAv = ∫v″² + K2v′² + K0v²`.
fn assemble(n: usize, h: f64, k2: f64, k0: f64) -> SymBanded {
    let mut a = SymBanded::zeros(n, 3);
    let grid_w = |i: usize| if i == 0 || i == n - 1 { 0.5 * h } else { h };
    for i in 0..n {
        let w = grid_w(i);
        for (row, scale) in [(d2_row(i, n, h), 1.0), (d1_row(i, n, h), k2)] {
            for &(ja, ca) in &row {
                for &(jb, cb) in &row {
                    // one stored entry per unordered pair covers both (a, b) and (b, a)
                    if ja >= jb {
                        a.add(ja, jb, w * scale * ca * cb);
                    }
                }
            }
        }
        a.add(i, i, w * k0);
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub phi: f64,
    pub grid: Grid1D,
    pub iterations: usize,
    pub boundary_warning: bool,
}

/// Preconditioned normalized descent: with `∫|v|^{p+1} = 1`,
/// `v ← (1−τ)v + τ N A⁻¹(W|v|^{p−1}v)`, `N = vᵀAv`, renormalized, with `τ`
/// halved whenever the quotient would rise.
pub fn minimize_rayleigh(params: &ProblemParams, half_length: f64, h: f64) -> Result<MinimizeResult> {
    minimize_rayleigh_raw(params.k2(), params.k0(), params.p, half_length, h)
}

pub fn minimize_rayleigh_raw(k2: f64, k0: f64, p: f64, half_length: f64, h: f64) -> Result<MinimizeResult> {
    if !(k2 > 0.0) || !(k0 > 0.0) {
        return Err(Error::Regime(format!("the quotient is minimized only for K2 > 0 and K0 > 0, got K2 = {k2}, K0 = {k0}")));
    }
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p = {p} must exceed 1")));
    }
    let seed_exp = 4.0 / (p - 1.0);
    let mut grid = Grid1D::from_fn(half_length, h, |t| (1.0 / t.cosh()).powf(seed_exp))?;
    let n = grid.len();
    let w = grid.trapezoid_weights();
    let a = assemble(n, h, k2, k0);
    let chol: BandedCholesky = a.cholesky()?;
    let normalize = |v: &mut Vec<f64>| {
        let f: f64 = v.iter().zip(&w).map(|(x, wi)| wi * x.abs().powf(p + 1.0)).sum();
        let s = f.powf(-1.0 / (p + 1.0));
        v.iter_mut().for_each(|x| *x *= s);
    };
    normalize(&mut grid.values);
    // vᵀAv through the stencils; the matrix form cancels entries of size h⁻⁴
    let quad = |v: &[f64]| -> f64 { numerator_of(v, h, k2, k0) };
    let mut q = quad(&grid.values);
    let mut tau: f64 = 1.0;
    for it in 1..=MAX_DESCENT_ITERS {
        let v = &grid.values;
        let rhs: Vec<f64> = v.iter().zip(&w).map(|(x, wi)| wi * x.abs().powf(p - 1.0) * x).collect();
        let z = chol.solve(&rhs);
        loop {
            let mut cand: Vec<f64> = v.iter().zip(&z).map(|(x, zi)| (1.0 - tau) * x + tau * q * zi).collect();
            normalize(&mut cand);
            let qc = quad(&cand);
            if qc <= q * (1.0 + 1e-14) {
                let rel = (q - qc).abs() / q;
                grid.values = cand;
                q = qc;
                if rel < DESCENT_TOL {
                    return finish(grid, k2, k0, p, it);
                }
                tau = (2.0 * tau).min(1.0);
                break;
            }
            tau *= 0.5;
            if tau < 1e-8 {
                return Err(Error::NonConvergence(format!("descent step collapsed at iteration {it}, Q = {q}")));
            }
        }
    }
    Err(Error::NonConvergence(format!("quotient still changing after {MAX_DESCENT_ITERS} iterations")))
}

fn finish(grid: Grid1D, k2: f64, k0: f64, p: f64, iterations: usize) -> Result<MinimizeResult> {
    let phi = rayleigh_quotient(&grid, k2, k0, p)?;
    let peak = grid.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let boundary_warning = grid.boundary_value() > BOUNDARY_DECAY * peak.max(1.0);
    Ok(MinimizeResult { phi, grid, iterations, boundary_warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstantSource {
    ClosedForm,
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestConstantResult {
    pub phi: f64,
    #[serde(rename = "S_rad")]
    pub s_rad: f64,
    pub source: ConstantSource,
    #[serde(rename = "L")]
    pub half_length: Option<f64>,
    pub h: Option<f64>,
    pub iterations: Option<usize>,
    /// Relative gap to the family-specific exponent form, when it applies.
    pub cross_check: Option<f64>,
}

fn bracket_term(m: f64) -> Result<f64> {
    Ok(4.0 * m * (m - 1.0) / ((2.0 * m - 1.0) * (2.0 * m - 3.0)) * beta_fn(-m, 0.5)?)
}

/// `φ = ν^{3+2/(p+1)} m(m−1)(m−2)(m−3) [4m(m−1)/((2m−1)(2m−3)) B(−m, ½)]^{(p−1)/(p+1)}`.
pub fn phi_closed_form(params: &ProblemParams) -> Result<BestConstantResult> {
    let sol = build_cosh_solution(params)?;
    let (m, nu, p) = (sol.m, sol.nu, params.p);
    let poly = m * (m - 1.0) * (m - 2.0) * (m - 3.0);
    let br = bracket_term(m)?;
    let phi = nu.powf(3.0 + 2.0 / (p + 1.0)) * poly * br.powf((p - 1.0) / (p + 1.0));
    let s_rad = sphere_measure(params.n)?.powf((p - 1.0) / (p + 1.0)) * phi;
    let n = params.nf();
    let a = params.alpha;
    // the family-specific exponents written in (n, α)
    let alt = match sol.case_tag {
        crate::closed_form::CaseTag::Case1 => Some(
            nu.powf(2.0 * (2.0 * n + a - 2.0) / (n + a)) * poly * br.powf(2.0 * (2.0 + a) / (n + a)),
        ),
        crate::closed_form::CaseTag::Case2 => Some(
            nu.powf(2.0 * (2.0 * n - a - 6.0) / (n - 4.0 - a)) * poly * br.powf(-2.0 * (2.0 + a) / (n - 4.0 - a)),
        ),
        crate::closed_form::CaseTag::Generic => None,
    };
    let cross_check = alt.map(|x| (x - phi).abs() / phi.abs());
    Ok(BestConstantResult {
        phi,
        s_rad,
        source: ConstantSource::ClosedForm,
        half_length: None,
        h: None,
        iterations: None,
        cross_check,
    })
}

/// Numerical counterpart of [`phi_closed_form`].
pub fn phi_numerical(params: &ProblemParams, half_length: f64, h: f64) -> Result<(BestConstantResult, MinimizeResult)> {
    let r = minimize_rayleigh(params, half_length, h)?;
    let p = params.p;
    let s_rad = sphere_measure(params.n)?.powf((p - 1.0) / (p + 1.0)) * r.phi;
    Ok((
        BestConstantResult {
            phi: r.phi,
            s_rad,
            source: ConstantSource::Numerical,
            half_length: Some(half_length),
            h: Some(h),
            iterations: Some(r.iterations),
            cross_check: None,
        },
        r,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b0() -> ProblemParams {
        ProblemParams::new(6, 0.0, 5.0, 0.0, 0.0).unwrap()
    }

    fn phi_b0() -> f64 {
        24.0 * (16.0f64 / 15.0).powf(2.0 / 3.0)
    }

    fn sech_grid(shift: f64, scale: f64) -> Grid1D {
        Grid1D::from_fn(40.0, 0.01, |t| scale / (t - shift).cosh()).unwrap()
    }

    #[test]
    fn quotient_of_sech() {
        let q = rayleigh_quotient(&sech_grid(0.0, 1.0), 10.0, 9.0, 5.0).unwrap();
        assert!((q / phi_b0() - 1.0).abs() < 5e-3, "{q}");
    }

    #[test]
    fn quotient_is_homogeneous_of_degree_zero() {
        let q1 = rayleigh_quotient(&sech_grid(0.0, 1.0), 10.0, 9.0, 5.0).unwrap();
        let q7 = rayleigh_quotient(&sech_grid(0.0, 7.0), 10.0, 9.0, 5.0).unwrap();
        assert!((q1 - q7).abs() <= 1e-12 * q1);
        let big = rayleigh_quotient(&sech_grid(0.0, 1e200), 10.0, 9.0, 5.0).unwrap();
        assert!((q1 - big).abs() <= 1e-10 * q1);
    }

    #[test]
    fn quotient_translation_invariant() {
        let q0 = rayleigh_quotient(&sech_grid(0.0, 1.0), 10.0, 9.0, 5.0).unwrap();
        let q3 = rayleigh_quotient(&sech_grid(3.0, 1.0), 10.0, 9.0, 5.0).unwrap();
        assert!((q0 - q3).abs() <= 1e-6 * q0);
    }

    #[test]
    fn zero_denominator() {
        let g = Grid1D::from_fn(1.0, 0.1, |_| 0.0).unwrap();
        assert_eq!(rayleigh_quotient(&g, 1.0, 1.0, 3.0), Err(Error::ZeroDenominator));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::from_fn(1.0, 0.3, |_| 1.0).is_err());
        assert_eq!(Grid1D::from_fn(1.0, 0.25, |_| 1.0).unwrap().len(), 9);
    }

    #[test]
    fn assembled_matrix_reproduces_numerator() {
        let g = Grid1D::from_fn(3.0, 0.1, |t| (-t * t).exp() + 0.1 * t).unwrap();
        let a = assemble(g.len(), g.h, 2.5, 0.7);
        let quad: f64 = g.values.iter().zip(a.matvec(&g.values)).map(|(x, y)| x * y).sum();
        let direct = numerator(&g, 2.5, 0.7);
        assert!((quad - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn closed_form_b0() {
        let r = phi_closed_form(&b0()).unwrap();
        assert!((r.phi - phi_b0()).abs() < 1e-12 * phi_b0());
        let pi = std::f64::consts::PI;
        assert!((r.s_rad - pi * pi * phi_b0()).abs() < 1e-11 * r.s_rad);
        assert!((r.s_rad - 247.3).abs() < 0.1);
        assert!(r.cross_check.unwrap() < 1e-10);
    }

    #[test]
    fn closed_form_case2_equals_b0() {
        let p = ProblemParams::with_beta(6, -4.0, 12.0, 5.0, 0.0, 0.0).unwrap();
        let r = phi_closed_form(&p).unwrap();
        assert!((r.phi - phi_b0()).abs() < 1e-12 * phi_b0());
        assert!(r.cross_check.unwrap() < 1e-10);
    }

    #[test]
    fn closed_form_lambda_80_9() {
        let p = ProblemParams::new(6, 0.0, 5.0, 80.0 / 9.0, 0.0).unwrap();
        let r = phi_closed_form(&p).unwrap();
        let expect = (1.0f64 / 3.0).powf(10.0 / 3.0) * phi_b0();
        assert!((r.phi - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn minimize_b0() {
        let r = minimize_rayleigh(&b0(), 40.0, 0.01).unwrap();
        assert!((r.phi / phi_b0() - 1.0).abs() < 0.01, "{}", r.phi);
        assert!(!r.boundary_warning);
        let q = rayleigh_quotient(&r.grid, 10.0, 9.0, 5.0).unwrap();
        assert!((q - r.phi).abs() <= 1e-12 * q);
        // even and positive
        let v = &r.grid.values;
        let n = v.len();
        assert!(v.iter().all(|x| *x > 0.0));
        assert!((0..n).all(|i| (v[i] - v[n - 1 - i]).abs() < 1e-9));
    }

    #[test]
    fn minimize_lambda_80_9() {
        let p = ProblemParams::new(6, 0.0, 5.0, 80.0 / 9.0, 0.0).unwrap();
        let r = minimize_rayleigh(&p, 40.0, 0.01).unwrap();
        let cf = phi_closed_form(&p).unwrap().phi;
        assert!((r.phi / cf - 1.0).abs() < 0.01, "{} vs {cf}", r.phi);
    }

    #[test]
    fn regression_p3() {
        // frozen from the first run at L = 40, h = 0.01
        let r = minimize_rayleigh_raw(10.0, 9.0, 3.0, 40.0, 0.01).unwrap();
        assert!((r.phi - 21.859_988_078_036_08).abs() < 1e-8 * r.phi, "{}", r.phi);
    }

    #[test]
    fn second_order_in_h() {
        let cf = phi_b0();
        let e1 = (minimize_rayleigh(&b0(), 40.0, 0.02).unwrap().phi - cf).abs();
        let e2 = (minimize_rayleigh(&b0(), 40.0, 0.01).unwrap().phi - cf).abs();
        assert!(e1 / e2 > 3.0, "{e1:e} {e2:e}");
    }

    #[test]
    fn refuses_nonpositive_k0() {
        assert!(matches!(minimize_rayleigh_raw(10.0, 0.0, 5.0, 10.0, 0.1), Err(Error::Regime(_))));
    }
}
