//! Command-line front end: argument handling, dispatch, exit codes.
//!
//! Exit codes: 0 success, 1 usage, 2 bracket failure, 3 non-convergence,
//! 4 regime error, 5 validation error, 6 a verification check failed.

pub mod args;
pub mod commands;
pub mod output;
pub mod sweep;

use args::{Cli, Command, Format, Settings};
use clap::Parser;
use std::ffi::OsString;
use std::io::Write;
use weighted_biharmonic::Error;

pub use commands::Payload;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BRACKET: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_REGIME: i32 = 4;
pub const EXIT_VALIDATION: i32 = 5;
pub const EXIT_CHECK_FAILED: i32 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, kind: "usage".into(), message: msg.into() }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Bracket(_) => EXIT_BRACKET,
        Error::NonConvergence(_)
        | Error::StepUnderflow { .. }
        | Error::BlowUp { .. }
        | Error::NegativeState { .. }
        | Error::TailNonconvergence(_) => EXIT_NONCONVERGENCE,
        Error::Regime(_) | Error::NoExplicitSolution(_) | Error::Amplitude(_) => EXIT_REGIME,
        Error::Validation(_)
        | Error::Domain(_)
        | Error::Pole(_)
        | Error::Divergence(_)
        | Error::CaseMismatch(_)
        | Error::ZeroDenominator => EXIT_VALIDATION,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self { code: exit_code(&e), kind: e.kind().into(), message: e.to_string() }
    }
}

fn dispatch(cli: &Cli) -> Result<(Payload, Settings), CliError> {
    let s = Settings::resolve(&cli.opts)?;
    let payload = match &cli.command {
        Command::Info => commands::info(&s)?,
        Command::Explicit => commands::explicit(&s)?,
        Command::Orbit => commands::orbit(&s)?,
        Command::Homoclinic => commands::homoclinic(&s)?,
        Command::BestConstant => commands::best_constant(&s)?,
        Command::Verify { manifest } => commands::verify(manifest.as_deref())?,
        Command::Sweep(a) => sweep::sweep(&s, a)?,
    };
    Ok((payload, s))
}

/// Parses `argv`, runs the command, writes the document to `--output` or
/// `stdout`, and returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (payload, s) = match dispatch(&cli) {
        Ok(x) => x,
        Err(e) => {
            let _ = writeln!(stderr, "error ({}): {}", e.kind, e.message);
            return e.code;
        }
    };
    let bytes = match s.format {
        Format::Json => output::to_json_bytes(&payload.json).expect("documents are plain data"),
        Format::Csv => payload.table.to_csv_bytes(),
    };
    let written = match &cli.opts.output {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(&bytes).map_err(|e| format!("cannot write output: {e}")),
    };
    if let Err(msg) = written {
        let _ = writeln!(stderr, "error (io): {msg}");
        return EXIT_USAGE;
    }
    if payload.ok {
        EXIT_OK
    } else {
        let _ = writeln!(stderr, "verification failed: see the report");
        EXIT_CHECK_FAILED
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("wbh").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn exit_code_mapping() {
        assert_eq!(exit_code(&Error::Bracket("x".into())), 2);
        assert_eq!(exit_code(&Error::NonConvergence("x".into())), 3);
        assert_eq!(exit_code(&Error::Regime("x".into())), 4);
        assert_eq!(exit_code(&Error::Validation("x".into())), 5);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_str(&["info", "--p", "5"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["bogus"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["orbit", "--n", "6", "--p", "5"]).0, EXIT_USAGE);
    }

    #[test]
    fn validation_error() {
        let (code, _, err) = run_str(&["info", "--n", "6", "--alpha", "3", "--p", "5"]);
        assert_eq!(code, EXIT_VALIDATION);
        assert!(err.contains("alpha"));
    }

    #[test]
    fn negative_values_parse() {
        let (code, out, _) = run_str(&["info", "--n", "6", "--alpha", "-4", "--beta", "12", "--lambda", "-1.5"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("\"lambda\":-1.5"));
    }
}
