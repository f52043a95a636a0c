//! One function per subcommand. Each yields the JSON document and the CSV
//! table for the same result.

use crate::args::{Settings, Wrapped};
use crate::output::{cell, document, fmt_f64, to_value, Table};
use crate::CliError;
use serde_json::{json, Value};
use weighted_biharmonic::closed_form::write_v_csv;
use weighted_biharmonic::identities::{
    builtin_suite_cases, run_case, IdentityId, SuiteEntry, SUITE_LAMBDA, SUITE_MU,
};
use weighted_biharmonic::{
    build_cosh_solution, classify_singularity, find_homoclinic, find_periodic, integrate, phi_closed_form, phi_numerical,
    Error, ProblemParams, ReducedOde,
};

pub struct Payload {
    pub json: Value,
    pub table: Table,
    /// Overall verdict for checking commands; `false` maps to a failed exit.
    pub ok: bool,
}

impl Payload {
    fn new(json: Value, table: Table) -> Self {
        Self { json, table, ok: true }
    }
}

fn csv_table(bytes: Vec<u8>) -> Table {
    let mut rd = csv::ReaderBuilder::new().from_reader(bytes.as_slice());
    let header = rd.headers().expect("own csv").iter().map(String::from).collect();
    let rows = rd.records().map(|r| r.expect("own csv").iter().map(String::from).collect()).collect();
    Table { header, rows }
}

/// Named scalars of a command, in column order.
pub type Scalars = Vec<(&'static str, Value)>;

fn table_of(scalars: &Scalars) -> Table {
    let mut t = Table::new(scalars.iter().map(|(k, _)| *k));
    t.rows.push(scalars.iter().map(|(_, v)| cell(v)).collect());
    t
}

pub fn scalar_columns(w: Wrapped) -> &'static [&'static str] {
    match w {
        Wrapped::Info => &[
            "K2",
            "K0",
            "l",
            "c1",
            "c2",
            "c3",
            "norm_ok",
            "uniqueness_ok",
            "periodicity_regime",
            "singular_regime",
        ],
        Wrapped::Explicit => &["m", "nu", "C", "case_tag", "gamma_decay", "phi", "S_rad"],
        Wrapped::Orbit => &["a", "b", "period", "max_value", "energy", "residual_sup", "in_proven_regime"],
        Wrapped::Homoclinic => &["peak", "decay_rate", "curvature", "t_trusted"],
        Wrapped::BestConstant => &["phi", "S_rad", "iterations", "boundary_warning"],
    }
}

fn eigenvalues_value(params: &ProblemParams) -> Value {
    let d = params.derive();
    match d.real_eigenvalues_desc() {
        Some(r) => json!(r),
        None => to_value(&d.eigenvalues()),
    }
}

pub fn info_scalars(params: &ProblemParams) -> Scalars {
    let c = params.conditions();
    vec![
        ("K2", json!(params.k2())),
        ("K0", json!(params.k0())),
        ("l", json!(params.equilibrium())),
        ("c1", json!(c.c1)),
        ("c2", json!(c.c2)),
        ("c3", json!(c.c3)),
        ("norm_ok", json!(c.norm_ok)),
        ("uniqueness_ok", json!(c.uniqueness_ok)),
        ("periodicity_regime", json!(c.periodicity_regime)),
        ("singular_regime", json!(c.singular_regime)),
    ]
}

pub fn info(s: &Settings) -> Result<Payload, CliError> {
    let params = s.params()?;
    let derived = params.derive();
    let doc = document(
        "info",
        vec![
            ("params", to_value(&params)),
            ("K2", json!(derived.k2)),
            ("K0", json!(derived.k0)),
            ("l", json!(derived.l)),
            ("eigenvalues", eigenvalues_value(&params)),
            ("derived", to_value(&derived)),
            ("conditions", to_value(&params.conditions())),
        ],
    );
    Ok(Payload::new(doc, table_of(&info_scalars(&params))))
}

pub fn explicit_scalars(params: &ProblemParams) -> Result<Scalars, CliError> {
    let sol = build_cosh_solution(params)?;
    let phi = phi_closed_form(params)?;
    Ok(vec![
        ("m", json!(sol.m)),
        ("nu", json!(sol.nu)),
        ("C", json!(sol.c)),
        ("case_tag", to_value(&sol.case_tag)),
        ("gamma_decay", json!(sol.gamma_decay)),
        ("phi", json!(phi.phi)),
        ("S_rad", json!(phi.s_rad)),
    ])
}

/// Sample points of the explicit profile in `t`.
const EXPLICIT_T_SPAN: f64 = 12.0;
const EXPLICIT_SAMPLES: usize = 481;

pub fn explicit(s: &Settings) -> Result<Payload, CliError> {
    let params = s.params()?;
    let sol = build_cosh_solution(&params)?;
    let phi = phi_closed_form(&params)?;
    // u(0) = lim r^{−γ}(C/2^m)(1 + r^{2ν})^m: finite only when γ ≤ 0
    let u0 = if sol.gamma_decay.abs() <= 1e-12 {
        json!(sol.c * 2f64.powf(-sol.m))
    } else if sol.gamma_decay < 0.0 {
        json!(0.0)
    } else {
        Value::Null
    };
    let verdict = classify_singularity(&params).ok();
    let doc = document(
        "explicit",
        vec![
            ("params", to_value(&params)),
            ("solution", to_value(&sol)),
            ("u0", u0),
            ("best_constant", to_value(&phi)),
            ("singularity", to_value(&verdict)),
        ],
    );
    let ts: Vec<f64> = (0..EXPLICIT_SAMPLES)
        .map(|i| -EXPLICIT_T_SPAN + 2.0 * EXPLICIT_T_SPAN * i as f64 / (EXPLICIT_SAMPLES - 1) as f64)
        .collect();
    let mut buf = Vec::new();
    write_v_csv(&sol, &params, &ts, &mut buf)?;
    Ok(Payload::new(doc, csv_table(buf)))
}

pub fn orbit_scalars(s: &Settings) -> Result<Scalars, CliError> {
    let params = s.params()?;
    let o = find_periodic(s.a()?, &params, s.tol)?;
    Ok(vec![
        ("a", json!(o.a)),
        ("b", json!(o.b)),
        ("period", json!(o.period)),
        ("max_value", json!(o.max_value)),
        ("energy", json!(o.energy)),
        ("residual_sup", json!(o.residual_sup)),
        ("in_proven_regime", json!(o.in_proven_regime)),
    ])
}

pub fn orbit(s: &Settings) -> Result<Payload, CliError> {
    let params = s.params()?;
    let o = find_periodic(s.a()?, &params, s.tol)?;
    let doc = document("orbit", vec![("params", to_value(&params)), ("orbit", to_value(&o))]);
    // one period of the profile
    let tr = integrate(&ReducedOde::from_params(&params), o.initial_state(), o.period, s.tol)?;
    let mut buf = Vec::new();
    tr.write_csv(&mut buf)?;
    Ok(Payload::new(doc, csv_table(buf)))
}

pub fn homoclinic_scalars(params: &ProblemParams) -> Result<Scalars, CliError> {
    let h = find_homoclinic(params)?;
    Ok(vec![
        ("peak", json!(h.peak)),
        ("decay_rate", json!(h.decay_rate)),
        ("curvature", json!(h.curvature)),
        ("t_trusted", json!(h.t_trusted)),
    ])
}

pub fn homoclinic(s: &Settings) -> Result<Payload, CliError> {
    let params = s.params()?;
    let h = find_homoclinic(&params)?;
    let mut fields = vec![("params", to_value(&params))];
    fields.push((
        "homoclinic",
        json!({
            "peak": h.peak,
            "decay_rate": h.decay_rate,
            "curvature": h.curvature,
            "t_trusted": h.t_trusted,
            "samples": h.samples.states.len(),
        }),
    ));
    let mut buf = Vec::new();
    h.samples.write_csv(&mut buf)?;
    Ok(Payload::new(document("homoclinic", fields), csv_table(buf)))
}

pub fn best_constant_scalars(s: &Settings) -> Result<Scalars, CliError> {
    let params = s.params()?;
    let (r, m) = phi_numerical(&params, s.grid_l, s.grid_h)?;
    Ok(vec![
        ("phi", json!(r.phi)),
        ("S_rad", json!(r.s_rad)),
        ("iterations", json!(r.iterations)),
        ("boundary_warning", json!(m.boundary_warning)),
    ])
}

pub fn best_constant(s: &Settings) -> Result<Payload, CliError> {
    let params = s.params()?;
    let (num, m) = phi_numerical(&params, s.grid_l, s.grid_h)?;
    let closed = phi_closed_form(&params);
    let (closed_v, closed_err, rel_diff) = match &closed {
        Ok(c) => (to_value(c), Value::Null, json!((num.phi - c.phi).abs() / c.phi)),
        Err(e) => (Value::Null, json!(e.to_string()), Value::Null),
    };
    let doc = document(
        "best-constant",
        vec![
            ("params", to_value(&params)),
            ("numerical", to_value(&num)),
            ("boundary_warning", json!(m.boundary_warning)),
            ("closed_form", closed_v),
            ("closed_form_unavailable", closed_err),
            ("rel_diff", rel_diff),
        ],
    );
    let mut buf = Vec::new();
    m.grid.write_csv(&mut buf)?;
    Ok(Payload::new(doc, csv_table(buf)))
}

#[derive(serde::Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub identity: IdentityId,
    pub function: String,
    pub n: u32,
    pub alpha: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub mu: f64,
}

pub fn verify(manifest: Option<&std::path::Path>) -> Result<Payload, CliError> {
    use rayon::prelude::*;
    let (source, cases): (&str, Vec<ManifestEntry>) = match manifest {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read manifest {}: {e}", path.display())))?;
            let cases = serde_json::from_str(&text)
                .map_err(|e| CliError::usage(format!("malformed manifest {}: {e}", path.display())))?;
            ("manifest", cases)
        }
        None => (
            "builtin",
            builtin_suite_cases()
                .into_iter()
                .map(|(identity, function, n, alpha)| ManifestEntry {
                    identity,
                    function,
                    n,
                    alpha,
                    lambda: SUITE_LAMBDA,
                    mu: SUITE_MU,
                })
                .collect(),
        ),
    };
    let results: Vec<Result<SuiteEntry, Error>> = cases
        .par_iter()
        .map(|c| run_case(c.identity, &c.function, c.n, c.alpha, c.lambda, c.mu))
        .collect();
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    let mut errors = Vec::new();
    let mut table = Table::new([
        "identity", "function", "n", "alpha", "lambda", "mu", "lhs", "rhs", "rel_err", "ratio", "constant", "passed",
        "status",
    ]);
    for (c, r) in cases.iter().zip(results) {
        let head = |status: String, rep: Option<&weighted_biharmonic::IdentityReport>| {
            let f = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
            vec![
                cell(&to_value(&c.identity)),
                c.function.clone(),
                c.n.to_string(),
                fmt_f64(c.alpha),
                fmt_f64(c.lambda),
                fmt_f64(c.mu),
                f(rep.map(|r| r.lhs)),
                f(rep.map(|r| r.rhs)),
                f(rep.map(|r| r.rel_err)),
                f(rep.and_then(|r| r.ratio)),
                f(rep.and_then(|r| r.constant)),
                rep.map(|r| r.passed.to_string()).unwrap_or_default(),
                status,
            ]
        };
        match r {
            Ok(SuiteEntry { report: Some(rep), .. }) => {
                table.rows.push(head("ok".into(), Some(&rep)));
                reports.push(rep);
            }
            Ok(SuiteEntry { skipped: reason, .. }) => {
                let reason = reason.unwrap_or_default();
                table.rows.push(head("skipped".into(), None));
                skipped.push(json!({
                    "identity_id": c.identity, "function": c.function, "n": c.n, "alpha": c.alpha, "reason": reason,
                }));
            }
            Err(e) => {
                table.rows.push(head(e.kind().into(), None));
                errors.push(json!({
                    "identity_id": c.identity, "function": c.function, "n": c.n, "alpha": c.alpha,
                    "kind": e.kind(), "message": e.to_string(),
                }));
            }
        }
    }
    let all_passed = errors.is_empty() && reports.iter().all(|r| r.passed);
    // skips of an explicit manifest entry are not silent passes
    let ok = all_passed && (source == "builtin" || skipped.is_empty());
    let doc = document(
        "verify",
        vec![
            ("source", json!(source)),
            ("all_passed", json!(ok)),
            ("reports", to_value(&reports)),
            ("skipped", Value::Array(skipped)),
            ("errors", Value::Array(errors)),
        ],
    );
    Ok(Payload { json: doc, table, ok })
}
