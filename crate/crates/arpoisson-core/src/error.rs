use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    DimensionMismatch { expected: usize, found: usize },
    NotAntisymmetric(f64),
    NonFinite,
    /// A trajectory or closed form left its chart before reaching the requested time.
    OutOfChart(String),
    Degenerate(String),
    NotComposable(f64),
    FactorizationResidual(f64),
    NonCommutingFrame(f64),
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotAntisymmetric(d) => write!(f, "matrix not antisymmetric (defect {d:e})"),
            Error::NonFinite => write!(f, "non-finite coordinate"),
            Error::OutOfChart(m) => write!(f, "out of chart: {m}"),
            Error::Degenerate(m) => write!(f, "degenerate: {m}"),
            Error::NotComposable(d) => write!(f, "arrows not composable (gap {d:e})"),
            Error::FactorizationResidual(r) => {
                write!(f, "anchor factorization residual {r:e} too large")
            }
            Error::NonCommutingFrame(b) => write!(f, "frame does not commute (bracket {b:e})"),
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
