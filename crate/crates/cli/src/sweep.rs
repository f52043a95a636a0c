//! Grids over one or two parameters. Failed points become rows carrying
//! their error; rows come out in grid order whatever the completion order.

use crate::args::{Settings, SweepArgs, Wrapped};
use crate::commands::{
    best_constant_scalars, explicit_scalars, homoclinic_scalars, info_scalars, orbit_scalars, scalar_columns, Scalars,
};
use crate::output::{cell, document, Table};
use crate::{CliError, Payload};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

// `12`, `l`, `l-0.001`, `l+2`
fn endpoint(s: &str, l: Option<f64>) -> Result<f64, CliError> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix('l') {
        let l = l.ok_or_else(|| CliError::usage("endpoint 'l' needs K0 > 0 at the base parameters"))?;
        if rest.is_empty() {
            return Ok(l);
        }
        let off: f64 = rest
            .strip_prefix('+')
            .unwrap_or(rest)
            .parse()
            .map_err(|_| CliError::usage(format!("malformed endpoint '{s}'")))?;
        return Ok(l + off);
    }
    s.parse().map_err(|_| CliError::usage(format!("malformed endpoint '{s}'")))
}

/// Parses `NAME=START:END:COUNT`.
pub fn parse_axis(spec: &str, l: Option<f64>) -> Result<Axis, CliError> {
    let bad = || CliError::usage(format!("grid '{spec}' is not NAME=START:END:COUNT"));
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    let [a, b, k] = parts.as_slice() else { return Err(bad()) };
    let count: usize = k.trim().parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(CliError::usage(format!("grid '{spec}' is empty")));
    }
    let (a, b) = (endpoint(a, l)?, endpoint(b, l)?);
    let values = if count == 1 {
        vec![a]
    } else {
        (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect()
    };
    Ok(Axis { name: name.trim().to_string(), values })
}

fn evaluate(w: Wrapped, s: &Settings) -> Result<Scalars, CliError> {
    match w {
        Wrapped::Info => Ok(info_scalars(&s.params()?)),
        Wrapped::Explicit => explicit_scalars(&s.params()?),
        Wrapped::Orbit => orbit_scalars(s),
        Wrapped::Homoclinic => homoclinic_scalars(&s.params()?),
        Wrapped::BestConstant => best_constant_scalars(s),
    }
}

pub fn sweep(base: &Settings, args: &SweepArgs) -> Result<Payload, CliError> {
    if args.over.len() > 2 {
        return Err(CliError::usage("sweep takes one or two --over grids"));
    }
    // `l` in endpoints refers to the base instance
    let l = base.params().ok().and_then(|p| p.equilibrium());
    let axes = args.over.iter().map(|s| parse_axis(s, l)).collect::<Result<Vec<_>, _>>()?;
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(CliError::usage(format!("parameter '{}' swept twice", axes[0].name)));
    }
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    if total > args.cap {
        return Err(CliError::usage(format!("grid has {total} points, above the cap of {}", args.cap)));
    }
    let points: Vec<Vec<f64>> = match axes.as_slice() {
        [x] => x.values.iter().map(|v| vec![*v]).collect(),
        [x, y] => x.values.iter().flat_map(|u| y.values.iter().map(move |v| vec![*u, *v])).collect(),
        _ => unreachable!("one or two axes"),
    };
    let results: Vec<Result<Scalars, CliError>> = points
        .par_iter()
        .map(|pt| {
            let mut s = base.clone();
            for (ax, v) in axes.iter().zip(pt) {
                s.set(&ax.name, *v)?;
            }
            evaluate(args.wrapped, &s)
        })
        .collect();

    // a swept parameter that is also an output (orbit's `a`) appears once
    let cols: Vec<&str> =
        scalar_columns(args.wrapped).iter().copied().filter(|c| axes.iter().all(|a| a.name != *c)).collect();
    let mut header: Vec<String> = vec!["index".into()];
    header.extend(axes.iter().map(|a| a.name.clone()));
    header.extend(["status", "exit_code", "error"].map(String::from));
    header.extend(cols.iter().map(|c| c.to_string()));
    let mut table = Table::new(header.clone());
    let mut rows = Vec::with_capacity(points.len());
    for (i, (pt, r)) in points.iter().zip(results).enumerate() {
        let mut m = Map::new();
        m.insert("index".into(), json!(i));
        for (ax, v) in axes.iter().zip(pt) {
            m.insert(ax.name.clone(), json!(v));
        }
        match r {
            Ok(sc) => {
                m.insert("status".into(), json!("ok"));
                m.insert("exit_code".into(), json!(0));
                m.insert("error".into(), Value::Null);
                for (k, v) in sc {
                    if cols.contains(&k) {
                        m.insert(k.into(), v);
                    }
                }
            }
            Err(e) => {
                m.insert("status".into(), json!(e.kind));
                m.insert("exit_code".into(), json!(e.code));
                m.insert("error".into(), json!(e.message));
                for c in &cols {
                    m.insert((*c).into(), Value::Null);
                }
            }
        }
        table.rows.push(header.iter().map(|h| cell(&m[h])).collect());
        rows.push(Value::Object(m));
    }
    let wrapped = crate::output::to_value(&format!("{:?}", args.wrapped).to_lowercase());
    let doc = document(
        "sweep",
        vec![
            ("wrapped", wrapped),
            ("axes", json!(axes.iter().map(|a| json!({"name": a.name, "values": a.values})).collect::<Vec<_>>())),
            ("columns", json!(header)),
            ("rows", Value::Array(rows)),
        ],
    );
    Ok(Payload { json: doc, table, ok: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_with_equilibrium_endpoint() {
        let ax = parse_axis("a=0.1:l-0.001:20", Some(3f64.sqrt())).unwrap();
        assert_eq!(ax.values.len(), 20);
        assert_eq!(ax.values[0], 0.1);
        assert!((ax.values[19] - (3f64.sqrt() - 0.001)).abs() < 1e-15);
    }

    #[test]
    fn malformed_and_empty_grids() {
        assert_eq!(parse_axis("a=0:1:0", None).unwrap_err().code, crate::EXIT_USAGE);
        assert!(parse_axis("a=0:1", None).is_err());
        assert!(parse_axis("a0:1:3", None).is_err());
        assert!(parse_axis("a=l:1:3", None).is_err());
        assert_eq!(parse_axis("lambda=-20:20:41", None).unwrap().values[20], 0.0);
    }
}
