use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weighted_biharmonic::orbit::{find_periodic_from, linearized_frequency};
use weighted_biharmonic::*;

fn b0() -> ProblemParams {
    ProblemParams::new(6, 0.0, 5.0, 0.0, 0.0).unwrap()
}

/// Energy over `periods` periods, restarting every period from (a, 0, b, 0);
/// the orbit is linearly unstable, so one long run would leave it.
fn anchored_energy_drift(o: &PeriodicOrbit, sys: &ReducedOde, periods: usize, tol: f64) -> f64 {
    (0..periods)
        .map(|k| {
            let y0 = OdeState::new(k as f64 * o.period, [o.a, 0.0, o.b, 0.0]);
            let tr = integrate(sys, y0, (k + 1) as f64 * o.period, tol).unwrap();
            tr.energies.iter().map(|e| (e - o.energy).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[test]
fn energy_over_three_periods() {
    let p = b0();
    let sys = ReducedOde::from_params(&p);
    let o = find_periodic(1.0, &p, 1e-10).unwrap();
    assert!(anchored_energy_drift(&o, &sys, 3, 1e-10) <= 1e-8);
}

#[test]
fn small_oscillation_limit() {
    let p = b0();
    let sys = ReducedOde::from_params(&p);
    // ω² = (√(K2² + 4(p−1)K0) − K2)/2 = (√244 − 10)/2
    let omega = ((244f64.sqrt() - 10.0) / 2.0).sqrt();
    assert!((linearized_frequency(&sys) - omega).abs() < 1e-14);
    let o = find_periodic(3f64.sqrt() - 1e-3, &p, 1e-10).unwrap();
    assert!((o.period - 2.0 * std::f64::consts::PI / omega).abs() < 1e-2);
    assert!((o.period - 3.7480).abs() < 1e-2);
}

#[test]
fn period_decreases_toward_the_equilibrium() {
    let p = b0();
    let l = 3f64.sqrt();
    let mut prev = f64::INFINITY;
    let mut b = 0.0;
    for k in 0..12 {
        let a = 0.3 + k as f64 * (l - 0.31) / 11.0;
        let o = if b > 0.0 { find_periodic_from(a, &p, 1e-10, b) } else { find_periodic(a, &p, 1e-10) }.unwrap();
        assert!(o.period < prev, "period {} at a = {a} after {prev}", o.period);
        prev = o.period;
        b = o.b;
    }
}

#[test]
fn homoclinic_profiles() {
    let h = find_homoclinic(&b0()).unwrap();
    assert!((h.peak - 24f64.powf(0.25)).abs() < 1e-6);
    assert!((h.decay_rate - 1.0).abs() < 1e-3);
    let p = ProblemParams::new(6, 0.0, 5.0, 80.0 / 9.0, 0.0).unwrap();
    let h = find_homoclinic(&p).unwrap();
    assert!((h.peak - (24.0f64 / 81.0).powf(0.25)).abs() < 1e-6);
    assert!((h.decay_rate - 1.0 / 3.0).abs() < 1e-3);
}

#[test]
fn singularity_classification() {
    let ns = ProblemParams::with_beta(6, -4.0, 12.0, 5.0, 0.0, 0.0).unwrap();
    assert_eq!(classify_singularity(&ns).unwrap().verdict, Removability::NonRemovable);
    let bd = classify_singularity(&b0()).unwrap();
    assert_eq!(bd.verdict, Removability::Boundary);
    assert_eq!(bd.rate_gap, 0.0);
}

#[test]
fn eigenvalue_factorization_in_c1() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.gen_range(5..=10u32);
        let nf = n as f64;
        let alpha = rng.gen_range(-nf + 0.01..nf - 4.01);
        let mu = rng.gen_range(0.0..4.0);
        let p = rng.gen_range(1.5..6.0);
        let pivot = (nf - 2.0) * (alpha + 2.0);
        let lambda = pivot - 2.0 * f64::sqrt(mu) - rng.gen_range(0.0..20.0);
        let Ok(params) = ProblemParams::new(n, alpha, p, lambda, mu) else { continue };
        if !params.conditions().c1 {
            continue;
        }
        let d = params.derive();
        for e in [d.lam1, d.lam2, d.lam3, d.lam4] {
            let r = d.characteristic_residual(e);
            assert!(r <= 1e-10, "{r:e} at {params:?}");
        }
        checked += 1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn periodic_orbits_conserve_energy_and_are_even(frac in 0.1f64..0.97) {
        let p = b0();
        let sys = ReducedOde::from_params(&p);
        let a = frac * 3f64.sqrt();
        let o = find_periodic(a, &p, 1e-10).unwrap();
        prop_assert!(o.residual_sup < 1e-8);
        prop_assert!(o.max_value > a);
        let tr = integrate(&sys, o.initial_state(), o.period, 1e-12).unwrap();
        prop_assert!(tr.energy_drift() < 1e-8);
        // symmetric about t = P/2 and back at the start after one period
        for k in 1..20 {
            let t = o.period * k as f64 / 40.0;
            let (x, y) = (tr.eval(t).unwrap(), tr.eval(o.period - t).unwrap());
            prop_assert!((x[0] - y[0]).abs() < 1e-6, "v({t}) = {} vs {}", x[0], y[0]);
        }
        let end = tr.states.last().unwrap().y;
        prop_assert!((end[0] - a).abs() < 1e-6);
    }

    #[test]
    fn time_reversal(t0 in 0.1f64..2.0) {
        let p = b0();
        let sys = ReducedOde::from_params(&p);
        let o = find_periodic(1.0, &p, 1e-10).unwrap();
        let fwd = integrate(&sys, o.initial_state(), t0, 1e-12).unwrap();
        let s = *fwd.states.last().unwrap();
        let back = integrate(&sys, s, 0.0, 1e-12).unwrap();
        let y = back.states.last().unwrap().y;
        prop_assert!((y[0] - o.a).abs() < 1e-8 && (y[2] - o.b).abs() < 1e-7);
    }
}
