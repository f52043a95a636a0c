use proptest::prelude::*;
use weighted_biharmonic::closed_form::{emden_fowler_roundtrip, EmdenFowlerMap};
use weighted_biharmonic::params::explicit_params;
use weighted_biharmonic::*;

fn residual_ok(params: &ProblemParams, sol: &CoshSolution) -> std::result::Result<(), String> {
    let (k2, k0, p) = (params.k2(), params.k0(), params.p);
    for i in 0..=2400 {
        let t = -12.0 + i as f64 * 0.01;
        let d = sol.derivatives(t);
        let res = ode_residual(|s| sol.derivatives(s), t, k2, k0, p);
        // the terms of the equation set the scale of cancellation
        let scale = 1f64.max(d[0].powf(p)).max(d[4].abs()).max((k2 * d[2]).abs()).max(k0 * d[0]);
        if !(res.abs() <= 1e-8 * scale) {
            return Err(format!("residual {res:e} at t = {t} (scale {scale:e})"));
        }
    }
    Ok(())
}

#[test]
fn three_reference_instances() {
    let list = [
        ProblemParams::new(6, 0.0, 5.0, 0.0, 0.0).unwrap(),
        ProblemParams::with_beta(6, -4.0, 12.0, 5.0, 0.0, 0.0).unwrap(),
        ProblemParams::new(6, 0.0, 5.0, 80.0 / 9.0, 0.0).unwrap(),
    ];
    for p in &list {
        let sol = build_cosh_solution(p).unwrap();
        residual_ok(p, &sol).unwrap();
    }
}

#[test]
fn lin_bubble_amplitude() {
    let p = ProblemParams::new(6, 0.0, 5.0, 0.0, 0.0).unwrap();
    let sol = build_cosh_solution(&p).unwrap();
    let expect = 384f64.powf(0.25);
    assert!((2.0 * sol.c - expect).abs() <= 1e-10 * expect);
    // u(0) is finite and equals C/2^m
    assert!((sol.eval_u(1e-12) - expect).abs() < 1e-9 * expect);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn case1_branches_give_solutions(n in 5u32..10, frac in 0.05f64..0.95, mu in 0.0f64..2.0) {
        let nf = n as f64;
        let alpha = -2.0 + frac * (nf - 2.0);
        let br = explicit_lambda_branches(ExplicitCase::Case1, n, alpha, mu).unwrap();
        for lambda in [br.plus, br.minus] {
            let params = explicit_params(ExplicitCase::Case1, n, alpha, mu, lambda).unwrap();
            match build_cosh_solution(&params) {
                Ok(sol) => {
                    prop_assert_eq!(sol.case_tag, CaseTag::Case1);
                    residual_ok(&params, &sol).map_err(TestCaseError::fail)?;
                    let phi = phi_closed_form(&params).unwrap();
                    prop_assert!(phi.cross_check.unwrap() < 1e-10);
                }
                // K2 ≤ 0 on one branch is a legitimate refusal; so is a
                // mismatch explained by cancellation in a tiny K2 or K0
                Err(Error::NoExplicitSolution(_)) => {
                    let mismatch = weighted_biharmonic::closed_form::solvability_mismatch(&params);
                    let k2_mag = ((nf - 2.0).powi(2) + (alpha + 2.0).powi(2)) / 2.0 + lambda.abs();
                    let k0_mag = (nf - 4.0 - alpha).powi(2) * (nf + alpha).powi(2) / 16.0
                        + lambda.abs() * ((nf - 4.0 - alpha) / 2.0).powi(2)
                        + mu;
                    let cond = 2.0 * k2_mag / params.k2().abs() + k0_mag / params.k0().abs();
                    prop_assert!(params.k2() <= 0.0 || mismatch <= 1e-9 * cond, "mismatch {mismatch:e}, cond {cond:e}");
                }
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn case2_branches_give_solutions(n in 5u32..10, frac in 0.05f64..0.95, mu in 0.0f64..2.0) {
        let nf = n as f64;
        let alpha = -nf + frac * (nf - 2.0);
        let br = explicit_lambda_branches(ExplicitCase::Case2, n, alpha, mu).unwrap();
        for lambda in [br.plus, br.minus] {
            let params = explicit_params(ExplicitCase::Case2, n, alpha, mu, lambda).unwrap();
            if let Ok(sol) = build_cosh_solution(&params) {
                prop_assert_eq!(sol.case_tag, CaseTag::Case2);
                residual_ok(&params, &sol).map_err(TestCaseError::fail)?;
                let phi = phi_closed_form(&params).unwrap();
                prop_assert!(phi.cross_check.unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn emden_fowler_roundtrip_is_identity(n in 5u32..12, frac in 0.01f64..0.99, r in 1e-3f64..1e3) {
        let nf = n as f64;
        let alpha = -nf + frac * (2.0 * nf - 4.0);
        let map = EmdenFowlerMap::new(n, alpha).unwrap();
        let u = |s: f64| (-s * s).exp() + 1.0 / (1.0 + s);
        let back = emden_fowler_roundtrip(&map, u, r);
        prop_assert!((back - u(r)).abs() <= 1e-12 * u(r));
    }

    #[test]
    fn solution_is_even_and_positive(t in 0.0f64..12.0) {
        let p = ProblemParams::new(6, 0.0, 5.0, 80.0 / 9.0, 0.0).unwrap();
        let sol = build_cosh_solution(&p).unwrap();
        let (a, b) = (sol.derivatives(t), sol.derivatives(-t));
        prop_assert!(a[0] > 0.0);
        prop_assert!((a[0] - b[0]).abs() <= 1e-14 * a[0]);
        prop_assert!((a[1] + b[1]).abs() <= 1e-13 * a[0]);
    }
}
