use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A mass vector must hold at least one block.
    EmptyMasses,
    /// Masses must be finite and strictly positive.
    InvalidMass {
        index: usize,
        value: f64,
    },
    /// Masses must be stored in non-increasing order.
    UnsortedMasses {
        index: usize,
    },
    /// An exponential clock cannot be drawn with this rate.
    DegenerateRate {
        index: usize,
        value: f64,
    },
    ClockCountMismatch {
        expected: usize,
        found: usize,
    },
    InvalidClock {
        index: usize,
        value: f64,
    },
    /// Two clocks rang at exactly the same time.
    TiedClocks {
        first: usize,
        second: usize,
    },
    /// The walk parameter `q` must be strictly positive.
    NonPositiveQ(f64),
    NegativeTime(f64),
    /// Two intersection events of Uribe's diagram coincide.
    TieInStopTimes {
        line: usize,
        other: usize,
    },
    InvalidBlocks,
    InvalidParameter(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyMasses => write!(f, "mass vector is empty"),
            Error::InvalidMass { index, value } => {
                write!(f, "mass #{} is {value}, expected a finite positive value", index + 1)
            }
            Error::UnsortedMasses { index } => {
                write!(f, "masses must be non-increasing (violated at #{})", index + 1)
            }
            Error::DegenerateRate { index, value } => {
                write!(f, "degenerate exponential rate {value} for block #{}", index + 1)
            }
            Error::ClockCountMismatch { expected, found } => {
                write!(f, "expected {expected} clocks, found {found}")
            }
            Error::InvalidClock { index, value } => {
                write!(f, "clock #{} is {value}, expected a finite positive value", index + 1)
            }
            Error::TiedClocks { first, second } => {
                write!(f, "clocks #{} and #{} are tied", first + 1, second + 1)
            }
            Error::NonPositiveQ(q) => write!(f, "walk parameter q must be positive, got {q}"),
            Error::NegativeTime(s) => write!(f, "time must be nonnegative, got {s}"),
            Error::TieInStopTimes { line, other } => {
                write!(f, "tie between intersection events of lines {} and {}", line + 1, other + 1)
            }
            Error::InvalidBlocks => write!(f, "blocks do not form a partition"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
