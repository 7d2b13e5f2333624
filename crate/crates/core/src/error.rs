use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series order {available} is insufficient, {required} required")]
    InsufficientOrder { required: u32, available: u32 },

    #[error("inner series has a nonzero constant term; composition must fix the expansion point")]
    NonzeroConstantTerm,

    #[error("denominator {denominator} below floor at point {point:?}")]
    PoleProximity {
        point: Vec<Complex64>,
        denominator: Complex64,
    },

    #[error("resonance in component {component} at multi-index {index:?} (divisor {divisor:e})")]
    Resonance {
        component: usize,
        index: Vec<u32>,
        divisor: f64,
    },

    #[error("linear part is defective or numerically non-diagonalizable (eigenvector conditioning {0:e})")]
    Defective(f64),

    #[error("spectral gap condition violated: {0}")]
    SpectralGap(String),

    #[error("constraints infeasible with b0 = 1 (certificate norm {certificate_norm:e})")]
    Infeasible {
        certificate: Vec<f64>,
        certificate_norm: f64,
    },

    #[error("rank deficient system: {0}")]
    RankDeficient(String),

    #[error("samples are not uniformly spaced in time")]
    NonUniformSampling,

    #[error("series too short: need {required} samples, have {available}")]
    TooShort { required: usize, available: usize },

    #[error("separation saturated within the first renormalization window; shorten the horizon")]
    HorizonTooLong,

    #[error("unknown system id '{0}'")]
    UnknownSystem(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numerical failures (resonances, poles, rank loss, ...) as opposed to
    /// malformed input. The CLI maps these onto distinct exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::PoleProximity { .. }
                | Error::Resonance { .. }
                | Error::Defective(_)
                | Error::SpectralGap(_)
                | Error::Infeasible { .. }
                | Error::RankDeficient(_)
                | Error::HorizonTooLong
        )
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
