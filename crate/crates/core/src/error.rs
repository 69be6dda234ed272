//! Error type shared across the crate.

use core::fmt;

/// Errors from domain construction, fits and solves.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Domain radius below the smallest ball that contains any site.
    RadiusTooSmall(f64),
    /// Fit window is malformed or outside the admissible range.
    BadWindow { lo: f64, hi: f64 },
    /// Fewer than the minimum number of populated shells in the fit window.
    TooFewShells(usize),
    /// A required site is not inside the domain.
    SiteOutsideDomain { a: i32, b: i32 },
    /// An evaluation was requested at the coordinate origin where the
    /// half-power fields are singular.
    OriginSingular,
    /// An iterative or direct linear solve did not reach its tolerance.
    SolveFailed(&'static str),
    /// A nonlinear minimization did not converge within the iteration budget.
    NoConvergence { iterations: usize, grad_inf: f64 },
    /// Bisection could not bracket a sign change.
    NoBracket(&'static str),
    /// Input list validation (radii, sources, coefficients).
    BadInput(&'static str),
    /// Scaling diagnostic preconditions violated (probe ball too small).
    ProbeBallTooSmall { source_norm: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::RadiusTooSmall(r) => write!(f, "domain radius {r} contains no sites"),
            Error::BadWindow { lo, hi } => write!(f, "bad fit window [{lo}, {hi}]"),
            Error::TooFewShells(n) => {
                write!(f, "only {n} populated shells in window, need at least 3")
            }
            Error::SiteOutsideDomain { a, b } => {
                write!(f, "site ({a}, {b}) is outside the domain")
            }
            Error::OriginSingular => write!(f, "evaluation at the origin is singular"),
            Error::SolveFailed(what) => write!(f, "linear solve failed: {what}"),
            Error::NoConvergence {
                iterations,
                grad_inf,
            } => write!(
                f,
                "minimization stopped after {iterations} iterations with |g|_inf = {grad_inf:e}"
            ),
            Error::NoBracket(what) => write!(f, "bisection found no sign change: {what}"),
            Error::BadInput(what) => write!(f, "invalid input: {what}"),
            Error::ProbeBallTooSmall { source_norm } => write!(
                f,
                "source norm {source_norm} gives a probe ball of radius < 8"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
