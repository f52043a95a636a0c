//! Shooting solvers for the periodic orbits with prescribed minimum and for
//! the even homoclinic profile, plus the decay-rate singularity classifier.

use crate::error::{Error, Result};
use crate::ode::{Dopri5, OdeState, ReducedOde, State, Trajectory};
use crate::params::ProblemParams;
use serde::{Deserialize, Serialize};

/// Integration tolerance used inside the shooting loops.
const SHOOT_TOL_MAX: f64 = 1e-10;
const SHOOT_TOL_MIN: f64 = 1e-13;
/// Grid points of the initial b-scan.
const SCAN_POINTS: usize = 64;
/// Expansions of the scan cap on bracket failure.
const SCAN_EXPANSIONS: usize = 8;
const MAX_ROOT_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub a: f64,
    pub b: f64,
    pub period: f64,
    pub max_value: f64,
    pub energy: f64,
    pub residual_sup: f64,
    /// False when the instance lies outside the regime where the periodic
    /// orbit is known to exist (e.g. `K2² < 4K0`).
    pub in_proven_regime: bool,
}

impl PeriodicOrbit {
    pub fn initial_state(&self) -> OdeState {
        OdeState::new(0.0, [self.a, 0.0, self.b, 0.0])
    }
}

/// Angular frequency of small oscillations about `l`:
/// `ω² = (√(K2² + 4(p−1)K0) − K2)/2`.
pub fn linearized_frequency(sys: &ReducedOde) -> f64 {
    let w2 = 0.5 * ((sys.k2 * sys.k2 + 4.0 * (sys.p - 1.0) * sys.k0).sqrt() - sys.k2);
    w2.sqrt()
}

// Outcome of one shot from (a, 0, b, 0).
#[derive(Debug, Clone, Copy)]
enum Shot {
    /// First return of v′ to zero at `t`, with the state there.
    Return { t: f64, y: State },
    /// No return: the trajectory escaped upward.
    Escape,
}

impl Shot {
    // Matching function; escape counts as +∞.
    fn g(&self) -> f64 {
        match self {
            Shot::Return { y, .. } => y[3],
            Shot::Escape => f64::INFINITY,
        }
    }
}

struct PeriodicShooter {
    sys: ReducedOde,
    a: f64,
    tol: f64,
    t_max: f64,
}

impl PeriodicShooter {
    fn shoot(&self, b: f64) -> Result<Shot> {
        let mut st = Dopri5::new(self.sys, OdeState::new(0.0, [self.a, 0.0, b, 0.0]), self.tol, 1.0)?;
        loop {
            let seg = match st.step(self.t_max) {
                Ok(seg) => seg,
                Err(Error::BlowUp { .. }) => return Ok(Shot::Escape),
                Err(e) => return Err(e),
            };
            if seg.y1[1] <= 0.0 && seg.y0[1] > 0.0 || (seg.y1[1] < 0.0 && seg.t0 == 0.0) {
                let t = polish_root(&seg, 1)?;
                let y = seg.eval_precise(t)?;
                return Ok(Shot::Return { t, y });
            }
            if st.state().t >= self.t_max {
                return Ok(Shot::Escape);
            }
        }
    }
}

/// Root of component `idx` inside a step: bisection on the dense output,
/// then Newton on fifth-order re-evaluations.
fn polish_root(seg: &crate::ode::DenseSegment, idx: usize) -> Result<f64> {
    let (mut lo, mut hi) = (seg.t0, seg.t1());
    let flo = seg.y0[idx];
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-12 * hi.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f = seg.eval(mid)[idx];
        if f == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if f.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..3 {
        let y = seg.eval_precise(t)?;
        let d = y[idx + 1];
        if d == 0.0 {
            break;
        }
        let tn = t - y[idx] / d;
        if !seg.contains(tn) {
            break;
        }
        t = tn;
    }
    Ok(t)
}

fn shooting_tol(tol: f64) -> f64 {
    (0.01 * tol).clamp(SHOOT_TOL_MIN, SHOOT_TOL_MAX)
}

fn periodic_setup(a: f64, params: &ProblemParams) -> Result<(ReducedOde, f64, bool)> {
    let sys = ReducedOde::from_params(params);
    if !(sys.k0 > 0.0) || !(sys.k2 > 0.0) {
        return Err(Error::Regime(format!(
            "periodic orbits need K0 > 0 and K2 > 0, got K2 = {}, K0 = {}",
            sys.k2, sys.k0
        )));
    }
    let l = sys.equilibrium().expect("K0 > 0");
    if !(a > 0.0 && a < l) {
        return Err(Error::Domain(format!("minimum a = {a} must lie in (0, l) with l = {l}")));
    }
    let c = params.conditions();
    let proven = c.periodicity_regime || c.periodicity_regime_strict || c.uniqueness_ok;
    Ok((sys, l, proven))
}

/// Periodic orbit with minimum `a`, found by shooting on `b = v″(0)`.
pub fn find_periodic(a: f64, params: &ProblemParams, tol: f64) -> Result<PeriodicOrbit> {
    let (sys, l, proven) = periodic_setup(a, params)?;
    let shooter = make_shooter(&sys, a, tol);
    let omega = linearized_frequency(&sys);
    let mut cap = (2.0 * omega * omega * (l - a)).max(1.0);
    for _ in 0..=SCAN_EXPANSIONS {
        if let Some(br) = scan_bracket(&shooter, 1e-6, cap)? {
            return refine(&shooter, br, tol, proven);
        }
        cap *= 2.0;
    }
    Err(Error::Bracket(format!(
        "no sign change of v'''(t*) in b = v''(0) in (1e-6, {cap}] for a = {a}"
    )))
}

/// As [`find_periodic`], bracketing outward from a previous solution `b_guess`.
pub fn find_periodic_from(a: f64, params: &ProblemParams, tol: f64, b_guess: f64) -> Result<PeriodicOrbit> {
    let (sys, _, proven) = periodic_setup(a, params)?;
    let shooter = make_shooter(&sys, a, tol);
    if b_guess > 0.0 {
        let mut lo = b_guess;
        let mut hi = b_guess;
        let mut glo = shooter.shoot(lo)?;
        let mut ghi = glo;
        for _ in 0..40 {
            if glo.g() < 0.0 && ghi.g() > 0.0 {
                return refine(&shooter, ((lo, glo), (hi, ghi)), tol, proven);
            }
            if !(glo.g() < 0.0) {
                lo *= 0.5;
                glo = shooter.shoot(lo)?;
            }
            if !(ghi.g() > 0.0) {
                hi *= 2.0;
                ghi = shooter.shoot(hi)?;
            }
        }
    }
    find_periodic(a, params, tol)
}

fn make_shooter(sys: &ReducedOde, a: f64, tol: f64) -> PeriodicShooter {
    let omega = linearized_frequency(sys);
    // many linear periods: a trajectory that has not returned by then escapes
    let t_max = 40.0 * std::f64::consts::TAU / omega;
    PeriodicShooter { sys: *sys, a, tol: shooting_tol(tol), t_max }
}

type Bracket = ((f64, Shot), (f64, Shot));

// Geometric scan; the first (negative, positive) neighbour pair is returned.
fn scan_bracket(sh: &PeriodicShooter, lo: f64, hi: f64) -> Result<Option<Bracket>> {
    let ratio = (hi / lo).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let mut prev: Option<(f64, Shot)> = None;
    for i in 0..SCAN_POINTS {
        let b = if i == SCAN_POINTS - 1 { hi } else { lo * ratio.powi(i as i32) };
        let s = sh.shoot(b)?;
        if let Some((pb, ps)) = prev {
            if ps.g() < 0.0 && s.g() > 0.0 {
                return Ok(Some(((pb, ps), (b, s))));
            }
        }
        prev = Some((b, s));
    }
    Ok(None)
}

fn refine(sh: &PeriodicShooter, br: Bracket, tol: f64, proven: bool) -> Result<PeriodicOrbit> {
    let ((mut lo, slo), (mut hi, shi)) = br;
    let (mut glo, mut ghi) = (slo.g(), shi.g());
    // Illinois false position once both ends returned, bisection while the
    // upper end still escapes
    let mut last = 0i8;
    for _ in 0..MAX_ROOT_ITERS {
        let b = if ghi.is_finite() {
            let x = (lo * ghi - hi * glo) / (ghi - glo);
            if x > lo && x < hi { x } else { 0.5 * (lo + hi) }
        } else {
            0.5 * (lo + hi)
        };
        let s = sh.shoot(b)?;
        if let Shot::Return { t, y } = s {
            if y[3].abs() < tol {
                return Ok(PeriodicOrbit {
                    a: sh.a,
                    b,
                    period: 2.0 * t,
                    max_value: y[0],
                    energy: sh.sys.energy(&[sh.a, 0.0, b, 0.0]),
                    residual_sup: y[3].abs(),
                    in_proven_regime: proven,
                });
            }
        }
        let g = s.g();
        if g < 0.0 {
            lo = b;
            glo = g;
            if last == -1 {
                ghi *= 0.5;
            }
            last = -1;
        } else {
            hi = b;
            ghi = g;
            if last == 1 {
                glo *= 0.5;
            }
            last = 1;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Err(Error::NonConvergence(format!(
        "periodic shooting at a = {} stalled with b in [{lo}, {hi}]",
        sh.a
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomoclinicProfile {
    pub peak: f64,
    pub decay_rate: f64,
    /// `v″(0)` fixed by the zero-energy constraint.
    pub curvature: f64,
    /// End of the trustworthy part of the profile.
    pub t_trusted: f64,
    pub samples: Trajectory,
}

// Fate of a zero-energy shot from the peak c.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    /// v crosses zero: peak too small.
    Overshoot,
    /// v′ turns positive at a positive minimum: peak too large.
    Undershoot,
    /// Neither happened within the horizon.
    Undecided,
}

fn zero_energy_curvature(sys: &ReducedOde, c: f64) -> f64 {
    let rad = sys.k0 * c * c - 2.0 * c.powf(sys.p + 1.0) / (sys.p + 1.0);
    -rad.max(0.0).sqrt()
}

fn homoclinic_fate(sys: &ReducedOde, c: f64, horizon: f64, tol: f64) -> Result<Fate> {
    let y0 = OdeState::new(0.0, [c, 0.0, zero_energy_curvature(sys, c), 0.0]);
    let mut st = Dopri5::new(*sys, y0, tol, 1.0)?;
    loop {
        match st.step(horizon) {
            Ok(seg) => {
                if seg.y1[1] > 0.0 && seg.t0 > 0.0 {
                    return Ok(Fate::Undershoot);
                }
                if seg.y1[0] <= 0.0 {
                    return Ok(Fate::Overshoot);
                }
            }
            Err(Error::NegativeState { .. }) => return Ok(Fate::Overshoot),
            Err(e) => return Err(e),
        }
        if st.state().t >= horizon {
            return Ok(Fate::Undecided);
        }
    }
}

/// Even homoclinic profile, by bisection on the peak `c = v(0)` with
/// `v″(0)` fixed by `E = 0`.
pub fn find_homoclinic(params: &ProblemParams) -> Result<HomoclinicProfile> {
    let sys = ReducedOde::from_params(params);
    find_homoclinic_ode(&sys)
}

pub fn find_homoclinic_ode(sys: &ReducedOde) -> Result<HomoclinicProfile> {
    let (k2, k0, p) = (sys.k2, sys.k0, sys.p);
    if !(k2 > 0.0 && k0 > 0.0) {
        return Err(Error::Regime(format!("homoclinic needs K2 > 0 and K0 > 0, got K2 = {k2}, K0 = {k0}")));
    }
    if k2 * k2 - 4.0 * k0 < 0.0 {
        return Err(Error::Regime(format!("homoclinic needs K2^2 - 4 K0 >= 0, got {}", k2 * k2 - 4.0 * k0)));
    }
    let slow = (0.5 * (k2 - (k2 * k2 - 4.0 * k0).sqrt())).sqrt();
    let slow = if slow > 0.0 { slow } else { (k0 / (0.5 * (k2 + (k2 * k2 - 4.0 * k0).sqrt()))).sqrt() };
    let horizon = 40.0 / slow;
    let tol = 1e-12;
    let l = sys.equilibrium().expect("K0 > 0");
    let c_max = ((p + 1.0) * k0 / 2.0).powf(1.0 / (p - 1.0));
    let (mut lo, mut hi) = (l, c_max);
    // the ends of the interval classify as overshoot / undershoot;
    // verify the interior points bracket before bisecting
    let probe_lo = l + 1e-3 * (c_max - l);
    let probe_hi = c_max - 1e-3 * (c_max - l);
    if homoclinic_fate(sys, probe_lo, horizon, tol)? != Fate::Overshoot
        || homoclinic_fate(sys, probe_hi, horizon, tol)? != Fate::Undershoot
    {
        return Err(Error::Bracket(format!("peak values in ({l}, {c_max}) do not bracket a homoclinic")));
    }
    lo = lo.max(probe_lo);
    hi = hi.min(probe_hi);
    for _ in 0..MAX_ROOT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match homoclinic_fate(sys, mid, horizon, tol)? {
            Fate::Overshoot => lo = mid,
            Fate::Undershoot => hi = mid,
            Fate::Undecided => {
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    if (hi - lo) > 1e-12 * hi {
        return Err(Error::NonConvergence(format!("homoclinic bisection stalled in [{lo}, {hi}]")));
    }
    // the two bracketing shots agree until the instability separates them
    let run = |c: f64| -> Result<Trajectory> {
        let y0 = OdeState::new(0.0, [c, 0.0, zero_energy_curvature(sys, c), 0.0]);
        integrate_until_failure(sys, y0, horizon, tol)
    };
    let tr_lo = run(lo)?;
    let tr_hi = run(hi)?;
    let t_common = tr_lo.t_end().min(tr_hi.t_end());
    let dt = 0.01;
    let mut t_trusted = 0.0;
    let mut t = 0.0;
    while t <= t_common {
        let (a, b) = (tr_lo.eval(t), tr_hi.eval(t));
        match (a, b) {
            (Some(a), Some(b)) if ((a[0] - b[0]).abs() <= 1e-6 * b[0].abs() && a[1] < 0.0) || t == 0.0 => {
                t_trusted = t;
            }
            _ => break,
        }
        t += dt;
    }
    let peak = 0.5 * (lo + hi);
    let mut samples = run(peak)?;
    if samples.t_end() < t_trusted {
        samples = tr_hi;
    }
    samples.truncate_at(t_trusted);
    let decay_rate = fit_decay_rate(&samples)?;
    Ok(HomoclinicProfile { peak, decay_rate, curvature: zero_energy_curvature(sys, peak), t_trusted, samples })
}

// Integrate forward, returning whatever was computed before a failure.
fn integrate_until_failure(sys: &ReducedOde, y0: OdeState, t_end: f64, tol: f64) -> Result<Trajectory> {
    let mut st = Dopri5::new(*sys, y0, tol, 1.0)?;
    let mut states = vec![y0];
    let mut energies = vec![sys.energy(&y0.y)];
    let mut segments = Vec::new();
    while st.state().t < t_end {
        match st.step(t_end) {
            Ok(seg) => {
                segments.push(seg);
                let s = st.state();
                energies.push(sys.energy(&s.y));
                states.push(s);
            }
            Err(Error::NegativeState { .. }) | Err(Error::BlowUp { .. }) | Err(Error::StepUnderflow { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(Trajectory { states, energies, step_stats: st.stats, segments, system: *sys })
}

/// Least-squares slope of `ln v` over the trailing 20% of the time span,
/// ignoring samples with `v < 1e−12`; returned as a positive rate.
pub fn fit_decay_rate(traj: &Trajectory) -> Result<f64> {
    let t0 = traj.t_start();
    let t1 = traj.t_end();
    let from = t1 - 0.2 * (t1 - t0);
    let pts: Vec<(f64, f64)> = (0..=400)
        .map(|i| from + (t1 - from) * f64::from(i) / 400.0)
        .filter_map(|t| traj.eval(t).map(|y| (t, y[0])))
        .filter(|&(_, v)| v >= 1e-12)
        .map(|(t, v)| (t, v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::NonConvergence("too few samples to fit a decay rate".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(-sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Removability {
    Removable,
    NonRemovable,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityVerdict {
    pub verdict: Removability,
    /// `(n−4−α)/2 − (−λ4)`: positive when `v` decays slower than `r^{(n−4−α)/2}`.
    pub rate_gap: f64,
    /// Whether `−n < α ≤ −2` and `λ > (n−2)(2+α) + 2√μ`, the classical
    /// sufficient condition for a singular solution.
    pub singular_hypothesis: bool,
}

/// Tolerance on `|rate_gap|` for the Boundary verdict.
pub const BOUNDARY_TOL: f64 = 1e-12;

pub fn classify_singularity(params: &ProblemParams) -> Result<SingularityVerdict> {
    let d = params.derive();
    let eig = d.real_eigenvalues_desc().ok_or_else(|| {
        Error::Regime("eigenvalues of r^4 - K2 r^2 + K0 are not all real; decay rates undefined".into())
    })?;
    let lam4 = eig[2];
    let rate_gap = params.ef_exponent() - (-lam4);
    let verdict = if rate_gap.abs() <= BOUNDARY_TOL {
        Removability::Boundary
    } else if rate_gap > 0.0 {
        Removability::NonRemovable
    } else {
        Removability::Removable
    };
    Ok(SingularityVerdict { verdict, rate_gap, singular_hypothesis: params.conditions().singular_regime })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{detect_extrema, integrate};

    fn b0() -> ProblemParams {
        ProblemParams::new(6, 0.0, 5.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn linear_frequency_oracle() {
        // ω² = (√(100 + 144) − 10)/2
        let w = linearized_frequency(&ReducedOde::new(10.0, 9.0, 5.0));
        assert!((w - ((244f64.sqrt() - 10.0) / 2.0).sqrt()).abs() < 1e-15);
        assert!((w - 1.67639).abs() < 2e-5);
    }

    #[test]
    fn periodic_near_equilibrium() {
        let l = 3f64.sqrt();
        let o = find_periodic(l - 1e-3, &b0(), 1e-10).unwrap();
        assert!((o.period - 3.7480).abs() < 1e-2, "period {}", o.period);
        assert!(o.in_proven_regime);
    }

    #[test]
    fn periodic_at_one() {
        let o = find_periodic(1.0, &b0(), 1e-10).unwrap();
        assert!((o.b - 0.783_665_492_891_520_8).abs() < 1e-8, "b = {}", o.b);
        assert!(o.residual_sup < 1e-10);
        assert!(o.max_value > 3f64.sqrt());
        assert!(o.period > 4.0 && o.period < 5.0);
    }

    #[test]
    fn periodic_rejects_a_at_l() {
        let l = 3f64.sqrt();
        assert!(find_periodic(l, &b0(), 1e-10).is_err());
        assert!(find_periodic(0.0, &b0(), 1e-10).is_err());
    }

    #[test]
    fn warm_start_continuation() {
        let l = 3f64.sqrt();
        let mut b = None;
        let mut last_period = f64::INFINITY;
        for a in [0.2, 0.5, 1.0, 1.5, l - 1e-3] {
            let o = match b {
                None => find_periodic(a, &b0(), 1e-10).unwrap(),
                Some(bg) => find_periodic_from(a, &b0(), 1e-10, bg).unwrap(),
            };
            assert!(o.a < l && l < o.max_value);
            assert!(o.period < last_period);
            last_period = o.period;
            b = Some(o.b);
        }
    }

    #[test]
    fn periodic_orbit_extrema_alternate() {
        let l = 3f64.sqrt();
        let o = find_periodic(l - 0.01, &b0(), 1e-12).unwrap();
        let sys = ReducedOde::from_params(&b0());
        let tr = integrate(&sys, o.initial_state(), 2.0 * o.period - o.period / 8.0, 1e-12).unwrap();
        let ex = detect_extrema(&tr).unwrap();
        let kinds: Vec<_> = ex.events.iter().map(|e| e.kind).collect();
        use crate::ode::ExtremumKind::*;
        assert_eq!(kinds, vec![Min, Max, Min, Max]);
    }

    #[test]
    fn homoclinic_b0() {
        let h = find_homoclinic(&b0()).unwrap();
        assert!((h.peak - 24f64.powf(0.25)).abs() < 1e-6, "peak {}", h.peak);
        assert!((h.decay_rate - 1.0).abs() < 1e-3, "rate {}", h.decay_rate);
        let e_max = h.samples.energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        assert!(e_max <= 1e-7);
        assert!(h.samples.states.windows(2).skip(1).all(|w| w[1].y[0] < w[0].y[0]));
    }

    #[test]
    fn homoclinic_lambda_80_9() {
        let p = ProblemParams::new(6, 0.0, 5.0, 80.0 / 9.0, 0.0).unwrap();
        let h = find_homoclinic(&p).unwrap();
        assert!((h.peak - (24.0f64 / 81.0).powf(0.25)).abs() < 1e-6, "peak {}", h.peak);
        assert!((h.decay_rate - 1.0 / 3.0).abs() < 1e-3, "rate {}", h.decay_rate);
    }

    #[test]
    fn homoclinic_regime_error() {
        let sys = ReducedOde::new(1.0, 9.0, 5.0);
        assert!(matches!(find_homoclinic_ode(&sys), Err(Error::Regime(_))));
    }

    #[test]
    fn singularity_examples() {
        let p = ProblemParams::with_beta(6, -4.0, 12.0, 5.0, 0.0, 0.0).unwrap();
        let v = classify_singularity(&p).unwrap();
        assert_eq!(v.verdict, Removability::NonRemovable);
        assert!((v.rate_gap - 2.0).abs() < 1e-12);
        assert!(v.singular_hypothesis);
        let v = classify_singularity(&b0()).unwrap();
        assert_eq!(v.verdict, Removability::Boundary);
        // with μ = 0 and λ below (n−2)(α+2) the slow rate equals (n−4−α)/2
        let p = ProblemParams::new(6, 0.0, 5.0, -100.0, 0.0).unwrap();
        let v = classify_singularity(&p).unwrap();
        assert_eq!(v.verdict, Removability::Boundary);
        // μ > 0 shrinks √(K2² − 4K0) and pushes the slow rate above it
        let p = ProblemParams::new(6, 0.0, 5.0, 0.0, 1.0).unwrap();
        assert_eq!(classify_singularity(&p).unwrap().verdict, Removability::Removable);
        let p = ProblemParams::new(6, 0.0, 5.0, 0.0, -1.0).unwrap();
        assert_eq!(classify_singularity(&p).unwrap().verdict, Removability::NonRemovable);
    }

    #[test]
    fn singularity_complex_error() {
        // K2² < 4K0: λ far above the pivot with μ large
        let p = ProblemParams::new(6, 0.0, 5.0, 8.0, 10.0).unwrap();
        assert!(classify_singularity(&p).is_err());
    }
}
