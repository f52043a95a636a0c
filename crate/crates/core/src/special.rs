//! Gamma and Beta functions, the integral `∫₀^∞ (cosh νt)^γ dt`, and the
//! measure of the unit sphere.

use crate::error::{Error, Result};
use crate::quadrature::QuadratureGrid;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

// Lanczos approximation, g = 7, nine terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_pole(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

fn lanczos_sum(z: f64) -> f64 {
    let mut a = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    a
}

/// Γ(x) for real x off the poles.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if is_pole(x) {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let s = (PI * x).sin();
        return Ok(PI / (s * gamma_fn(1.0 - x)?));
    }
    if x == x.floor() && x <= 171.0 {
        // exact factorials keep integer arguments bit-clean
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return Ok(acc);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z))
}

/// ln|Γ(x)| for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("ln_gamma needs x > 0, got {x}")));
    }
    if x < 0.5 {
        return Ok((PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

/// B(a, b) = Γ(a)Γ(b)/Γ(a+b).
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    if is_pole(a) {
        return Err(Error::Pole(a));
    }
    if is_pole(b) {
        return Err(Error::Pole(b));
    }
    if is_pole(a + b) {
        return Ok(0.0);
    }
    if a > 0.0 && b > 0.0 && a + b > 150.0 {
        return Ok((ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?).exp());
    }
    Ok(gamma_fn(a)? * (gamma_fn(b)? / gamma_fn(a + b)?))
}

/// `∫₀^∞ (cosh νt)^γ dt = ν⁻¹ · ½ · B(−γ/2, ½)` for γ < 0, ν > 0.
pub fn cosh_power_integral(gamma_exp: f64, nu: f64) -> Result<f64> {
    check_cosh_args(gamma_exp, nu)?;
    Ok(0.5 * beta_fn(-0.5 * gamma_exp, 0.5)? / nu)
}

/// The same integral by composite Gauss–Legendre, truncated where
/// `sech(νT)^{|γ|} < 1e−16`. Panels are doubled until two successive
/// estimates agree to `1e−13` relative.
pub fn cosh_power_integral_quadrature(gamma_exp: f64, nu: f64) -> Result<f64> {
    check_cosh_args(gamma_exp, nu)?;
    let g = gamma_exp.abs();
    // cosh x ≥ eˣ/2 ≥ 10^{16/|γ|}
    let x_end = 16.0 / g * std::f64::consts::LN_10 + std::f64::consts::LN_2;
    let t_end = x_end / nu;
    let f = |t: f64| {
        let x = nu * t;
        // ln cosh x without overflow
        let lc = x.abs() + (-2.0 * x.abs()).exp().ln_1p() - std::f64::consts::LN_2;
        (gamma_exp * lc).exp()
    };
    let mut panels = 16usize;
    let mut prev = QuadratureGrid::composite(0.0, t_end, panels, 16).integrate(f);
    for _ in 0..12 {
        panels *= 2;
        let cur = QuadratureGrid::composite(0.0, t_end, panels, 16).integrate(f);
        if (cur - prev).abs() <= 1e-13 * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence(format!(
        "cosh-power quadrature did not settle for gamma = {gamma_exp}, nu = {nu}"
    )))
}

fn check_cosh_args(gamma_exp: f64, nu: f64) -> Result<()> {
    if !(gamma_exp < 0.0) {
        return Err(Error::Divergence(format!(
            "integral of (cosh nu t)^gamma over (0, inf) diverges for gamma = {gamma_exp} >= 0"
        )));
    }
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("frequency nu = {nu} must be positive")));
    }
    Ok(())
}

/// Surface measure of the unit sphere `S^{n−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereMeasure {
    pub n: u32,
    pub omega_n: f64,
}

impl SphereMeasure {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("sphere measure needs n >= 1".into()));
        }
        let half = 0.5 * f64::from(n);
        let omega_n = 2.0 * PI.powf(half) / gamma_fn(half)?;
        Ok(Self { n, omega_n })
    }
}

pub fn sphere_measure(n: u32) -> Result<f64> {
    Ok(SphereMeasure::new(n)?.omega_n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_fn(3.0).unwrap(), 2.0);
        assert!(rel(gamma_fn(0.5).unwrap(), PI.sqrt()) < 1e-14);
        // recurrence from Γ(1/2)
        let g45 = 3.5 * 2.5 * 1.5 * 0.5 * PI.sqrt();
        assert!(rel(gamma_fn(4.5).unwrap(), g45) < 1e-14);
        assert!(rel(g45, 11.631_728_396_567_448) < 1e-15);
    }

    #[test]
    fn gamma_poles() {
        for x in [0.0, -1.0, -2.0, -7.0] {
            assert!(matches!(gamma_fn(x), Err(Error::Pole(_))));
        }
        assert!(gamma_fn(-0.5).is_ok());
    }

    #[test]
    fn gamma_accuracy_on_working_range() {
        // factorials
        let mut fact = 1.0f64;
        for k in 1..50u32 {
            fact *= f64::from(k);
            assert!(rel(gamma_fn(f64::from(k + 1)).unwrap(), fact) < 1e-13);
        }
        // half integers via recurrence from √π
        let mut h = PI.sqrt();
        let mut x = 0.5;
        while x < 50.0 {
            assert!(rel(gamma_fn(x).unwrap(), h) < 1e-13, "x = {x}");
            h *= x;
            x += 1.0;
        }
        // recurrence at non-lattice points
        let mut x = 0.1;
        while x < 49.0 {
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert!(rel(lhs, rhs) < 1e-13, "x = {x}");
            x += 0.377;
        }
        assert!(rel(gamma_fn(0.1).unwrap(), 9.513_507_698_668_732) < 1e-13);
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for x in [0.1, 0.7, 2.5, 10.25, 40.0] {
            assert!((ln_gamma(x).unwrap() - gamma_fn(x).unwrap().ln()).abs() < 1e-13 * 1f64.max(gamma_fn(x).unwrap().ln().abs()));
        }
    }

    #[test]
    fn beta_examples() {
        assert!(rel(beta_fn(1.0, 0.5).unwrap(), 2.0) < 1e-14);
        assert!(rel(beta_fn(1.0, 1.0).unwrap(), 1.0) < 1e-14);
        assert!(rel(beta_fn(2.0, 0.5).unwrap(), 4.0 / 3.0) < 1e-14);
        assert!(matches!(beta_fn(-1.0, 0.5), Err(Error::Pole(_))));
    }

    #[test]
    fn beta_symmetry() {
        for a in [0.1, 0.5, 1.3, 2.0, 7.7, 20.0] {
            for b in [0.2, 0.5, 3.1, 11.0] {
                assert!(rel(beta_fn(a, b).unwrap(), beta_fn(b, a).unwrap()) <= 1e-13);
            }
        }
    }

    #[test]
    fn cosh_power_examples() {
        assert!(rel(cosh_power_integral(-2.0, 1.0).unwrap(), 1.0) < 1e-14);
        assert!(rel(cosh_power_integral(-2.0, 2.0).unwrap(), 0.5) < 1e-14);
        assert!(rel(cosh_power_integral(-1.0, 1.0).unwrap(), PI / 2.0) < 1e-14);
        assert!(matches!(cosh_power_integral(0.0, 1.0), Err(Error::Divergence(_))));
        assert!(matches!(cosh_power_integral(1.5, 1.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn cosh_power_scaling() {
        for g in [-0.5, -1.0, -2.0, -3.3, -8.0] {
            let base = cosh_power_integral(g, 1.0).unwrap();
            for nu in [0.25, 1.0 / 3.0, 2.0, 7.5] {
                let scaled = cosh_power_integral(g, nu).unwrap() * nu;
                assert!(rel(scaled, base) <= 4.0 * f64::EPSILON, "g = {g} nu = {nu}");
            }
        }
    }

    #[test]
    fn cosh_power_closed_form_vs_quadrature() {
        for g in [-0.5, -1.0, -2.0, -4.0, -8.0] {
            for nu in [1.0, 1.0 / 3.0, 3.0] {
                let cf = cosh_power_integral(g, nu).unwrap();
                let q = cosh_power_integral_quadrature(g, nu).unwrap();
                assert!(rel(cf, q) < 1e-9, "g = {g}, nu = {nu}: {cf} vs {q}");
            }
        }
    }

    #[test]
    fn sphere_measure_values() {
        assert!(rel(sphere_measure(6).unwrap(), PI.powi(3)) < 1e-12);
        assert!(rel(sphere_measure(2).unwrap(), 2.0 * PI) < 1e-14);
        assert!(rel(sphere_measure(3).unwrap(), 4.0 * PI) < 1e-14);
        assert!(rel(sphere_measure(5).unwrap(), 8.0 * PI * PI / 3.0) < 1e-14);
    }
}
