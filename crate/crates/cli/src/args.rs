//! Flags, the JSON config file, and their merge into resolved settings.

use crate::CliError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::path::PathBuf;
use weighted_biharmonic::ProblemParams;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_GRID_L: f64 = 40.0;
pub const DEFAULT_GRID_H: f64 = 0.01;
pub const DEFAULT_SWEEP_CAP: usize = 10_000;

#[derive(Parser, Debug)]
#[command(name = "wbh", version, about = "Radial solutions, best constants and identity checks for the weighted biharmonic problem")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// K2, K0, eigenvalues and condition flags.
    Info,
    /// Explicit cosh-power solution and its closed-form constant.
    Explicit,
    /// Periodic orbit with minimum --a.
    Orbit,
    /// Even homoclinic profile.
    Homoclinic,
    /// Numerical and (when available) closed-form best constant.
    BestConstant,
    /// Identity checks from a manifest, or the builtin suite.
    Verify {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Run a command over a grid of one or two parameters.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Wrapped command.
    #[arg(long = "command", value_enum)]
    pub wrapped: Wrapped,
    /// `NAME=START:END:COUNT`; endpoints may be `l`, `l-0.001`, `l+0.5`.
    #[arg(long = "over", required = true, allow_hyphen_values = true)]
    pub over: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_SWEEP_CAP)]
    pub cap: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrapped {
    Info,
    Explicit,
    Orbit,
    Homoclinic,
    BestConstant,
}

#[derive(ValueEnum, Deserialize, Debug, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Opts {
    #[arg(long, global = true)]
    pub n: Option<u32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Minimum of the periodic orbit.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long = "grid-L", global = true)]
    pub grid_l: Option<f64>,
    #[arg(long = "grid-h", global = true)]
    pub grid_h: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// JSON file with any of the parameter keys; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    n: Option<u32>,
    alpha: Option<f64>,
    beta: Option<f64>,
    p: Option<f64>,
    lambda: Option<f64>,
    mu: Option<f64>,
    a: Option<f64>,
    tol: Option<f64>,
    #[serde(rename = "grid_L", alias = "grid-L")]
    grid_l: Option<f64>,
    #[serde(alias = "grid-h")]
    grid_h: Option<f64>,
    format: Option<Format>,
}

/// Everything a command needs, after merging config and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub n: Option<u32>,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub p: Option<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub a: Option<f64>,
    pub tol: f64,
    pub grid_l: f64,
    pub grid_h: f64,
    pub format: Format,
}

impl Settings {
    pub fn resolve(opts: &Opts) -> Result<Self, CliError> {
        let cfg = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str::<ConfigFile>(&text)
                    .map_err(|e| CliError::usage(format!("malformed config {}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        Ok(Self {
            n: opts.n.or(cfg.n),
            alpha: opts.alpha.or(cfg.alpha).unwrap_or(0.0),
            beta: opts.beta.or(cfg.beta),
            p: opts.p.or(cfg.p),
            lambda: opts.lambda.or(cfg.lambda).unwrap_or(0.0),
            mu: opts.mu.or(cfg.mu).unwrap_or(0.0),
            a: opts.a.or(cfg.a),
            tol: opts.tol.or(cfg.tol).unwrap_or(DEFAULT_TOL),
            grid_l: opts.grid_l.or(cfg.grid_l).unwrap_or(DEFAULT_GRID_L),
            grid_h: opts.grid_h.or(cfg.grid_h).unwrap_or(DEFAULT_GRID_H),
            format: opts.format.or(cfg.format).unwrap_or_default(),
        })
    }

    pub fn params(&self) -> Result<ProblemParams, CliError> {
        let n = self.n.ok_or_else(|| CliError::usage("--n is required"))?;
        let made = match (self.p, self.beta) {
            (Some(p), None) => ProblemParams::new(n, self.alpha, p, self.lambda, self.mu),
            (None, Some(b)) => ProblemParams::from_beta(n, self.alpha, b, self.lambda, self.mu),
            (Some(p), Some(b)) => ProblemParams::with_beta(n, self.alpha, b, p, self.lambda, self.mu),
            (None, None) => return Err(CliError::usage("one of --p or --beta is required")),
        };
        made.map_err(CliError::from)
    }

    pub fn a(&self) -> Result<f64, CliError> {
        self.a.ok_or_else(|| CliError::usage("--a (minimum of the periodic orbit) is required"))
    }

    /// Sets a sweepable field by name.
    pub fn set(&mut self, name: &str, v: f64) -> Result<(), CliError> {
        match name {
            "n" => {
                if !(v >= 1.0 && v.fract() == 0.0) {
                    return Err(CliError::usage(format!("n = {v} is not a positive integer")));
                }
                self.n = Some(v as u32)
            }
            "alpha" => self.alpha = v,
            "beta" => self.beta = Some(v),
            "p" => self.p = Some(v),
            "lambda" => self.lambda = v,
            "mu" => self.mu = v,
            "a" => self.a = Some(v),
            "tol" => self.tol = v,
            "grid-L" | "grid_L" => self.grid_l = v,
            "grid-h" | "grid_h" => self.grid_h = v,
            _ => return Err(CliError::usage(format!("cannot sweep over unknown parameter '{name}'"))),
        }
        Ok(())
    }
}
