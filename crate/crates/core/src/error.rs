use alloc::boxed::Box;
use core::fmt;

use crate::field::PeriodicField;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone)]
pub enum Error {
    InvalidGrid(&'static str),
    InvalidParameter(&'static str),
    GridMismatch,
    ComplexReconstruction { max_imag: f64 },
    InvalidPartition { defect: f64 },
    OffGrid,
    SymbolAtOrigin,
    OutsideResolventSet,
    BreaksPeriodicity,
    BandOverflow,
    /// The last finite state before the run diverged.
    BlowUp { time: f64, last: Box<PeriodicField> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(why) => write!(f, "invalid grid: {why}"),
            Error::InvalidParameter(why) => write!(f, "invalid parameter: {why}"),
            Error::GridMismatch => f.write_str("fields live on different grids"),
            Error::ComplexReconstruction { max_imag } => {
                write!(f, "complex-valued reconstruction (max |Im| = {max_imag:e})")
            }
            Error::InvalidPartition { defect } => {
                write!(f, "invalid dyadic partition (defect {defect:e})")
            }
            Error::OffGrid => f.write_str("off-grid evaluation unsupported"),
            Error::SymbolAtOrigin => f.write_str("symbol undefined at origin"),
            Error::OutsideResolventSet => f.write_str("outside guaranteed resolvent set (Re λ < 1)"),
            Error::BreaksPeriodicity => f.write_str("rescaling factor breaks periodicity"),
            Error::BandOverflow => f.write_str("rescaled spectrum does not fit the grid band"),
            Error::BlowUp { time, .. } => write!(f, "blow-up detected at t = {time}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
