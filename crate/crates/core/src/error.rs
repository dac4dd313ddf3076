use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("multiindex coordinate must be >= 1 (got {0})")]
    ZeroCoordinate(u32),

    #[error("collection is not a lower set: parent {missing} of {member} is absent")]
    NotLower { member: String, missing: String },

    #[error("sequence undefined at j={0}")]
    SequenceUndefined(u64),

    #[error("sequence is not admissible: {0}")]
    NotAdmissible(String),

    #[error("cannot certify divergence: rho_j stays <= {threshold} up to the probe budget j={budget}")]
    CannotCertifyDivergence { threshold: f64, budget: u64 },

    #[error("index set would exceed the memory cap of {cap} indices (estimate {estimate})")]
    MemoryCap { cap: usize, estimate: f64 },

    #[error("tail diverges: {0}")]
    TailDiverges(String),

    #[error("not in l_q: {0}")]
    NotInLq(String),

    #[error("series diverges: {0}")]
    SeriesDiverges(String),

    #[error("below validity threshold: n={n} < 2^16")]
    BelowValidityThreshold { n: u64 },

    #[error("point outside Y=[-1,1]^N: y_{coord}={value}")]
    OutsideY { coord: usize, value: f64 },

    #[error("could not certify convergence within {terms} terms")]
    NotCertified { terms: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
