//! The reduced equation `v⁗ − K2v″ + K0v = v^p` as a first-order system,
//! its energy, an adaptive Dormand–Prince 5(4) integrator with dense output,
//! and extremum detection.

use crate::error::{Error, Result};
use crate::params::ProblemParams;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Trajectories with `max |yᵢ|` above this are reported as escaping.
pub const BLOWUP_THRESHOLD: f64 = 1e12;
/// Smallest step the integrator will attempt.
pub const MIN_STEP: f64 = 1e-14;
/// Accepted-step budget per integration.
pub const MAX_STEPS: usize = 2_000_000;
/// `|v″|` below this at a root of `v′` flags the extremum as degenerate.
pub const DEGENERATE_CURVATURE: f64 = 1e-9;

pub type State = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeState {
    pub t: f64,
    /// `(v, v′, v″, v‴)`
    pub y: State,
}

impl OdeState {
    pub fn new(t: f64, y: State) -> Self {
        Self { t, y }
    }

    /// The state of `s ↦ v(−s)`: odd derivatives flip sign.
    pub fn reflected(&self) -> Self {
        Self { t: -self.t, y: [self.y[0], -self.y[1], self.y[2], -self.y[3]] }
    }
}

/// Coefficients of the reduced equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedOde {
    #[serde(rename = "K2")]
    pub k2: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    pub p: f64,
}

impl ReducedOde {
    pub fn new(k2: f64, k0: f64, p: f64) -> Self {
        Self { k2, k0, p }
    }

    pub fn from_params(params: &ProblemParams) -> Self {
        Self::new(params.k2(), params.k0(), params.p)
    }

    /// Positive equilibrium `K0^{1/(p−1)}`.
    pub fn equilibrium(&self) -> Option<f64> {
        (self.k0 > 0.0).then(|| self.k0.powf(1.0 / (self.p - 1.0)))
    }

    pub fn rhs(&self, y: &State) -> Result<State> {
        if y[0] < 0.0 {
            return Err(Error::Domain(format!("v = {} < 0: v^p undefined", y[0])));
        }
        Ok(self.rhs_unchecked(y))
    }

    fn rhs_unchecked(&self, y: &State) -> State {
        // v^p − K0 v = v(v^{p−1} − K0). A bracket below rounding level is
        // snapped to zero so that the equilibrium is an exact fixed point;
        // its linearization grows like e^{3.6t} at B0 and would otherwise
        // amplify a 1e−15 residual to O(1) within ten time units.
        let mut g = y[0].powf(self.p - 1.0) - self.k0;
        if g.abs() <= 8.0 * f64::EPSILON * self.k0.abs() {
            g = 0.0;
        }
        [y[1], y[2], y[3], y[0] * g + self.k2 * y[2]]
    }

    /// `E = −v′v‴ + ½v″² + (K2/2)v′² − (K0/2)v² + v^{p+1}/(p+1)`.
    pub fn energy(&self, y: &State) -> f64 {
        let [v, v1, v2, v3] = *y;
        -v1 * v3 + 0.5 * v2 * v2 + 0.5 * self.k2 * v1 * v1 - 0.5 * self.k0 * v * v
            + v.abs().powf(self.p + 1.0) / (self.p + 1.0)
    }
}

pub fn rhs(state: &OdeState, k2: f64, k0: f64, p: f64) -> Result<State> {
    ReducedOde::new(k2, k0, p).rhs(&state.y)
}

pub fn energy(state: &OdeState, k2: f64, k0: f64, p: f64) -> f64 {
    ReducedOde::new(k2, k0, p).energy(&state.y)
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy(y: &State, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..4 {
            out[i] += c * k[i];
        }
    }
    out
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    pub y0: State,
    pub y1: State,
    rcont: [State; 5],
    sys: ReducedOde,
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Whether `t` lies in the closed step interval.
    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = if self.h > 0.0 { (self.t0, self.t1()) } else { (self.t1(), self.t0) };
        a <= t && t <= b
    }

    /// Fourth-order continuous extension.
    pub fn eval(&self, t: f64) -> State {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut y = [0.0; 4];
        for i in 0..4 {
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }

    /// State at `t` from a fresh fifth-order step out of `t0`; more accurate
    /// than [`eval`](Self::eval), at the price of six right-hand sides.
    pub fn eval_precise(&self, t: f64) -> Result<State> {
        let h = t - self.t0;
        if h == 0.0 {
            return Ok(self.y0);
        }
        let k1 = self.sys.rhs(&self.y0)?;
        Ok(dopri_stages(&self.sys, &self.y0, &k1, h)?.y5)
    }
}

struct Stages {
    y5: State,
    k: [State; 7],
}

fn dopri_stages(sys: &ReducedOde, y: &State, k1: &State, h: f64) -> Result<Stages> {
    let k2 = sys.rhs(&axpy(y, &[(h * A21, k1)]))?;
    let k3 = sys.rhs(&axpy(y, &[(h * A31, k1), (h * A32, &k2)]))?;
    let k4 = sys.rhs(&axpy(y, &[(h * A41, k1), (h * A42, &k2), (h * A43, &k3)]))?;
    let k5 = sys.rhs(&axpy(y, &[(h * A51, k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]))?;
    let k6 = sys.rhs(&axpy(
        y,
        &[(h * A61, k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
    ))?;
    let y5 = axpy(y, &[(h * A71, k1), (h * A73, &k3), (h * A74, &k4), (h * A75, &k5), (h * A76, &k6)]);
    let k7 = sys.rhs(&y5)?;
    Ok(Stages { y5, k: [*k1, k2, k3, k4, k5, k6, k7] })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Adaptive Dormand–Prince 5(4) stepper with PI step-size control.
/// Mixed error test with `atol = rtol = tol`.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    sys: ReducedOde,
    t: f64,
    y: State,
    k1: State,
    h: f64,
    dir: f64,
    tol: f64,
    err_old: f64,
    pub stats: StepStats,
}

const SAFETY: f64 = 0.9;
const PI_BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

impl Dopri5 {
    /// `direction` is `+1` or `−1`.
    pub fn new(sys: ReducedOde, y0: OdeState, tol: f64, direction: f64) -> Result<Self> {
        if !(1e-13..=1e-6).contains(&tol) {
            return Err(Error::Domain(format!("tolerance {tol:e} outside [1e-13, 1e-6]")));
        }
        if y0.y.iter().any(|x| !x.is_finite()) || !y0.t.is_finite() {
            return Err(Error::Domain("initial state is not finite".into()));
        }
        let dir = if direction < 0.0 { -1.0 } else { 1.0 };
        let k1 = sys.rhs(&y0.y).map_err(|_| Error::NegativeState { t: y0.t })?;
        let mut s = Self { sys, t: y0.t, y: y0.y, k1, h: 0.0, dir, tol, err_old: 1e-4, stats: StepStats::default() };
        s.h = s.initial_step();
        Ok(s)
    }

    pub fn state(&self) -> OdeState {
        OdeState::new(self.t, self.y)
    }

    fn sc(&self, a: f64, b: f64) -> f64 {
        self.tol + self.tol * a.abs().max(b.abs())
    }

    fn norm(&self, v: &State, y: &State) -> f64 {
        (v.iter().zip(y).map(|(x, yi)| (x / self.sc(*yi, *yi)).powi(2)).sum::<f64>() / 4.0).sqrt()
    }

    // Hairer's starting-step heuristic.
    fn initial_step(&self) -> f64 {
        let d0 = self.norm(&self.y, &self.y);
        let d1 = self.norm(&self.k1, &self.y);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(1.0);
        let y1 = axpy(&self.y, &[(self.dir * h0, &self.k1)]);
        let d2 = match self.sys.rhs(&y1) {
            Ok(f1) => {
                let diff: State = std::array::from_fn(|i| f1[i] - self.k1[i]);
                self.norm(&diff, &self.y) / h0
            }
            Err(_) => return h0 * 0.01,
        };
        let m = d1.max(d2);
        let h1 = if m <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / m).powf(0.2) };
        (100.0 * h0).min(h1).min(1.0)
    }

    /// Advances by one accepted step, never past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<DenseSegment> {
        let remaining = (t_limit - self.t) * self.dir;
        if remaining <= 0.0 {
            return Err(Error::Domain("stepper already at its limit".into()));
        }
        let mut h = self.h.min(remaining);
        let mut last_reject = false;
        loop {
            if self.stats.accepted >= MAX_STEPS {
                return Err(Error::NonConvergence(format!("step budget {MAX_STEPS} exhausted at t = {}", self.t)));
            }
            if h < remaining && h < MIN_STEP.max(f64::EPSILON * self.t.abs()) {
                return Err(Error::StepUnderflow { t: self.t, h });
            }
            let hs = self.dir * h;
            let stages = match dopri_stages(&self.sys, &self.y, &self.k1, hs) {
                Ok(s) => s,
                Err(_) => {
                    // a stage left v ≥ 0; shrink unless the step is already tiny
                    if h <= 1e-9 * self.t.abs().max(1.0) {
                        return Err(Error::NegativeState { t: self.t });
                    }
                    self.stats.rejected += 1;
                    h *= 0.25;
                    last_reject = true;
                    continue;
                }
            };
            let k = &stages.k;
            let y1 = stages.y5;
            let mut err = 0.0;
            for i in 0..4 {
                let e = hs * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                err += (e / self.sc(self.y[i], y1[i])).powi(2);
            }
            let err = (err / 4.0).sqrt();
            if !err.is_finite() {
                self.stats.rejected += 1;
                h *= FAC_MIN;
                last_reject = true;
                continue;
            }
            if err <= 1.0 {
                let err = err.max(1e-10);
                let mut fac = SAFETY * err.powf(-(0.2 - 0.75 * PI_BETA)) * self.err_old.powf(PI_BETA);
                fac = fac.clamp(FAC_MIN, FAC_MAX);
                if last_reject {
                    fac = fac.min(1.0);
                }
                self.err_old = err;
                let mut rcont = [[0.0; 4]; 5];
                for i in 0..4 {
                    let dy = y1[i] - self.y[i];
                    let bspl = hs * k[0][i] - dy;
                    rcont[0][i] = self.y[i];
                    rcont[1][i] = dy;
                    rcont[2][i] = bspl;
                    rcont[3][i] = dy - hs * k[6][i] - bspl;
                    rcont[4][i] = hs
                        * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
                }
                let t0 = self.t;
                let reached_limit = h >= remaining;
                let seg = DenseSegment { t0, h: hs, y0: self.y, y1, rcont, sys: self.sys };
                self.t = if reached_limit { t_limit } else { t0 + hs };
                self.y = y1;
                self.k1 = k[6];
                self.stats.accepted += 1;
                // keep the controller's proposal even when the step was clipped
                self.h = if reached_limit && h < self.h { self.h } else { h * fac };
                if y1.iter().any(|x| x.abs() > BLOWUP_THRESHOLD) {
                    return Err(Error::BlowUp { t: self.t, threshold: BLOWUP_THRESHOLD });
                }
                return Ok(seg);
            }
            self.stats.rejected += 1;
            last_reject = true;
            h *= (SAFETY * err.powf(-0.2)).max(FAC_MIN);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<OdeState>,
    pub energies: Vec<f64>,
    pub step_stats: StepStats,
    #[serde(skip)]
    pub segments: Vec<DenseSegment>,
    pub system: ReducedOde,
}

impl Trajectory {
    /// Keeps only the part of the trajectory up to `t` (forward runs).
    pub fn truncate_at(&mut self, t: f64) {
        let keep = self.states.partition_point(|s| s.t <= t);
        self.states.truncate(keep.max(1));
        self.energies.truncate(keep.max(1));
        self.segments.truncate(keep.saturating_sub(1));
    }

    pub fn t_start(&self) -> f64 {
        self.states[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.states[self.states.len() - 1].t
    }

    /// Dense-output state at `t` inside the span.
    pub fn eval(&self, t: f64) -> Option<State> {
        self.segment_at(t).map(|s| s.eval(t))
    }

    pub fn eval_precise(&self, t: f64) -> Option<Result<State>> {
        self.segment_at(t).map(|s| s.eval_precise(t))
    }

    fn segment_at(&self, t: f64) -> Option<&DenseSegment> {
        let forward = self.segments.first().map_or(true, |s| s.h > 0.0);
        let idx = self.segments.partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
        self.segments.get(idx).filter(|s| s.contains(t))
    }

    /// `max |E(t) − E(0)|` over the stored states.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    /// CSV with columns `t, v, dv, d2v, d3v, E`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let io = |e: csv::Error| Error::Domain(format!("csv output failed: {e}"));
        wr.write_record(["t", "v", "dv", "d2v", "d3v", "E"]).map_err(io)?;
        for (s, e) in self.states.iter().zip(&self.energies) {
            wr.write_record([s.t, s.y[0], s.y[1], s.y[2], s.y[3], *e].map(|x| format!("{x:.16e}")))
                .map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Domain(format!("csv output failed: {e}")))
    }

    pub fn summary(&self) -> Result<TrajectorySummary> {
        let extrema = detect_extrema(self)?;
        Ok(TrajectorySummary {
            t_start: self.t_start(),
            t_end: self.t_end(),
            n_states: self.states.len(),
            step_stats: self.step_stats,
            energy_initial: self.energies[0],
            energy_drift: self.energy_drift(),
            events: extrema.events,
            degenerate_warning: extrema.degenerate_warning,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub t_start: f64,
    pub t_end: f64,
    pub n_states: usize,
    pub step_stats: StepStats,
    pub energy_initial: f64,
    pub energy_drift: f64,
    pub events: Vec<Extremum>,
    pub degenerate_warning: bool,
}

/// Integrates from `y0` to `t_end` (either direction). `t` is strictly
/// monotone along the returned states.
pub fn integrate(sys: &ReducedOde, y0: OdeState, t_end: f64, tol: f64) -> Result<Trajectory> {
    if t_end == y0.t {
        return Err(Error::Domain("empty integration span".into()));
    }
    let dir = (t_end - y0.t).signum();
    let mut st = Dopri5::new(*sys, y0, tol, dir)?;
    let mut states = vec![y0];
    let mut energies = vec![sys.energy(&y0.y)];
    let mut segments = Vec::new();
    while (t_end - st.state().t) * dir > 0.0 {
        let seg = st.step(t_end)?;
        segments.push(seg);
        let s = st.state();
        energies.push(sys.energy(&s.y));
        states.push(s);
    }
    Ok(Trajectory { states, energies, step_stats: st.stats, segments, system: *sys })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub t: f64,
    pub kind: ExtremumKind,
    pub value: f64,
    pub curvature: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaReport {
    pub events: Vec<Extremum>,
    pub degenerate_warning: bool,
}

/// Bisection tolerance on event times.
pub const EVENT_TOL: f64 = 1e-10;
// sub-intervals per step scanned for sign changes of v′
const EVENT_SCAN: usize = 4;

fn bisect_root(seg: &DenseSegment, mut a: f64, mut b: f64, idx: usize) -> f64 {
    let mut fa = seg.eval(a)[idx];
    while (b - a).abs() > EVENT_TOL {
        let m = 0.5 * (a + b);
        let fm = seg.eval(m)[idx];
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Zeros of component `idx` on the half-open span `[t_start, t_end)`, in
/// order of integration.
pub(crate) fn component_roots(traj: &Trajectory, idx: usize) -> Vec<(f64, State)> {
    let mut roots: Vec<(f64, State)> = Vec::new();
    if let Some(first) = traj.states.first() {
        if first.y[idx] == 0.0 {
            roots.push((first.t, first.y));
        }
    }
    for seg in &traj.segments {
        let mut a = seg.t0;
        let mut ya = seg.y0;
        for j in 1..=EVENT_SCAN {
            let b = if j == EVENT_SCAN { seg.t1() } else { seg.t0 + seg.h * j as f64 / EVENT_SCAN as f64 };
            let yb = if j == EVENT_SCAN { seg.y1 } else { seg.eval(b) };
            let fa = ya[idx];
            let fb = yb[idx];
            if fb == 0.0 && j == EVENT_SCAN {
                // exact zero at a step end: record once, as the next step's start
                if b != traj.t_end() {
                    roots.push((b, yb));
                }
            } else if fa != 0.0 && fb != 0.0 && fa.signum() != fb.signum() {
                let t = bisect_root(seg, a, b, idx);
                roots.push((t, seg.eval(t)));
            } else if fa != 0.0 && fb == 0.0 {
                roots.push((b, yb));
            }
            a = b;
            ya = yb;
        }
    }
    roots.dedup_by(|x, y| (x.0 - y.0).abs() <= EVENT_TOL);
    roots
}

/// All roots of `v′` on `[t_start, t_end)`, classified by the sign of `v″`.
pub fn detect_extrema(traj: &Trajectory) -> Result<ExtremaReport> {
    if traj.segments.is_empty() {
        return Err(Error::Domain("trajectory has no dense output".into()));
    }
    let y0 = traj.states[0].y;
    if traj.states.iter().all(|s| s.y == y0) {
        return Ok(ExtremaReport { events: Vec::new(), degenerate_warning: false });
    }
    let mut degenerate_warning = false;
    let events = component_roots(traj, 1)
        .into_iter()
        .map(|(t, y)| {
            let degenerate = y[2].abs() < DEGENERATE_CURVATURE;
            degenerate_warning |= degenerate;
            let kind = if y[2] > 0.0 { ExtremumKind::Min } else { ExtremumKind::Max };
            Extremum { t, kind, value: y[0], curvature: y[2], degenerate }
        })
        .collect();
    Ok(ExtremaReport { events, degenerate_warning })
}
