use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The coefficient violates the Legendre condition with the declared constant.
    EllipticityViolation {
        min: f64,
        max: f64,
        mu: f64,
    },
    NoConvergence {
        residual: f64,
        iterations: usize,
    },
    SingularSystem,
    GridMismatch,
    /// Input to a flux-corrector construction is not mean-zero.
    NonZeroMean {
        mean: f64,
        scale: f64,
    },
    /// A discrepancy tensor that should cancel on average does not.
    MeanNotZero {
        mean: f64,
        scale: f64,
    },
    EpsilonTooSmall {
        eps: f64,
        spacing: f64,
    },
    RTooSmall {
        r: f64,
        spacing: f64,
    },
    ResolutionInsufficient {
        eps: f64,
        spacing: f64,
    },
    DegenerateData,
    InvalidInput(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EllipticityViolation { min, max, mu } => {
                write!(f, "ellipticity violated: quotient range [{min:e}, {max:e}] outside [{mu}, {}]", 1.0 / mu)
            }
            Error::NoConvergence { residual, iterations } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
            Error::SingularSystem => f.write_str("coefficient is not positive definite"),
            Error::GridMismatch => f.write_str("inputs live on incompatible grids"),
            Error::NonZeroMean { mean, scale } => {
                write!(f, "input average {mean:e} exceeds tolerance (scale {scale:e})")
            }
            Error::MeanNotZero { mean, scale } => {
                write!(f, "discrepancy average {mean:e} does not cancel (scale {scale:e})")
            }
            Error::EpsilonTooSmall { eps, spacing } => {
                write!(f, "eps = {eps} is below twice the grid spacing {spacing}")
            }
            Error::RTooSmall { r, spacing } => {
                write!(f, "cutoff radius {r} is below twice the grid spacing {spacing}")
            }
            Error::ResolutionInsufficient { eps, spacing } => {
                write!(f, "grid spacing {spacing} does not resolve eps^2/8 for eps = {eps}")
            }
            Error::DegenerateData => f.write_str("degenerate data for rate fit"),
            Error::InvalidInput(what) => write!(f, "invalid input: {what}"),
        }
    }
}

impl core::error::Error for Error {}
