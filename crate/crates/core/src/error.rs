use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode of the library. The CLI maps these onto exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("Gamma function pole at x = {0}")]
    Pole(f64),

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("case mismatch: {0}")]
    CaseMismatch(String),

    #[error("no explicit cosh-power solution: {0}")]
    NoExplicitSolution(String),

    #[error("amplitude equation has no positive root: C^(p-1) = {0}")]
    Amplitude(f64),

    #[error("solution escaped past |y| = {threshold:e} at t = {t}")]
    BlowUp { t: f64, threshold: f64 },

    #[error("v became negative at t = {t} (v^p undefined for positive-solution dynamics)")]
    NegativeState { t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("outside the admissible regime: {0}")]
    Regime(String),

    #[error("quadrature tail not negligible: {0}")]
    TailNonconvergence(String),

    #[error("zero denominator in Rayleigh quotient")]
    ZeroDenominator,
}

impl Error {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Domain(_) => "domain",
            Error::Pole(_) => "pole",
            Error::Divergence(_) => "divergence",
            Error::CaseMismatch(_) => "case_mismatch",
            Error::NoExplicitSolution(_) => "no_explicit_solution",
            Error::Amplitude(_) => "amplitude",
            Error::BlowUp { .. } => "blow_up",
            Error::NegativeState { .. } => "negative_state",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::Bracket(_) => "bracket",
            Error::NonConvergence(_) => "non_convergence",
            Error::Regime(_) => "regime",
            Error::TailNonconvergence(_) => "tail_nonconvergence",
            Error::ZeroDenominator => "zero_denominator",
        }
    }
}
