//! Radial analysis of the weighted fourth-order equation
//! `Δ(|x|^{−α}Δu) + λ div(|x|^{−α−2}∇u) + μ|x|^{−α−4}u = |x|^{β}u^{p}` on the
//! critical hyperbola.
//!
//! The Emden–Fowler substitution `v(t) = r^{(n−4−α)/2} u(r)`, `t = −ln r`,
//! turns radial solutions into solutions of the autonomous ODE
//! `v⁗ − K₂v″ + K₀v = v^p`. The modules build on that reduction.

pub mod banded;
pub mod closed_form;
pub mod error;
pub mod identities;
pub mod ode;
pub mod orbit;
pub mod params;
pub mod quadrature;
pub mod special;
pub mod variational;

pub use error::{Error, Result};
pub use params::{
    beta_from_hyperbola, check_conditions, derive_coefficients, explicit_lambda_branches, ConditionReport,
    DerivedCoefficients, Eigenvalue, ExplicitCase, LambdaBranches, ProblemParams,
};
pub use quadrature::{gauss_legendre, QuadratureGrid};
pub use special::{beta_fn, cosh_power_integral, gamma_fn, sphere_measure, SphereMeasure};
pub use closed_form::{build_cosh_solution, ode_residual, CaseTag, CoshSolution, EmdenFowlerMap};
pub use ode::{detect_extrema, integrate, Dopri5, OdeState, ReducedOde, Trajectory};
pub use orbit::{classify_singularity, find_homoclinic, find_periodic, HomoclinicProfile, PeriodicOrbit, Removability, SingularityVerdict};
pub use variational::{
    minimize_rayleigh, phi_closed_form, phi_numerical, rayleigh_quotient, BestConstantResult, ConstantSource, Grid1D,
    MinimizeResult,
};
pub use identities::{
    norm_alpha, t_operator, verify_identity, weighted_integral, IdentityId, IdentityReport, RadialTestFunction,
};
