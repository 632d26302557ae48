use core::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Point outside the domain of a chart or formula.
    Domain(&'static str),
    /// Configuration on the degeneracy locus of a chart.
    Degenerate(&'static str),
    /// Matrix that should be invertible is not; carries a condition estimate.
    Singular { what: &'static str, cond: f64 },
    /// Contraction of a function (0-form) with a vector field.
    ZeroFormContraction,
    /// Newton iteration did not converge.
    NoConvergence { iterations: usize, residual: f64 },
    /// A quantity that should be independent of the fiber coordinate is not.
    NotEquivariant { deviation: f64 },
    /// Quadrature contour passes too close to a singularity.
    PoleCollision,
    /// A structural requirement on the input failed.
    Invalid(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(s) => write!(f, "domain error: {s}"),
            Error::Degenerate(s) => write!(f, "degenerate configuration: {s}"),
            Error::Singular { what, cond } => {
                write!(f, "singular matrix ({what}), condition estimate {cond:.3e}")
            }
            Error::ZeroFormContraction => write!(f, "cannot contract a 0-form"),
            Error::NoConvergence { iterations, residual } => {
                write!(f, "no convergence after {iterations} iterations, residual {residual:.3e}")
            }
            Error::NotEquivariant { deviation } => {
                write!(f, "fiber dependence {deviation:.3e} above tolerance")
            }
            Error::PoleCollision => write!(f, "contour too close to a pole"),
            Error::Invalid(s) => write!(f, "invalid input: {s}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
