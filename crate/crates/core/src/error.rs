use thiserror::Error;

use crate::gauss::GaussRat;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("twist vectors differ; the sum leaves the twisted-rational class")]
    TwistMismatch,
    #[error("operands live over different branch loci")]
    LocusMismatch,
    #[error("operation undefined for the zero function")]
    ZeroFunction,
    #[error("evaluation at a singular point {0}")]
    EvalAtSingularity(String),
    #[error("curve is degenerate (the Wronskian vanishes identically)")]
    DegenerateCurve,
    #[error("root {approx} lies within {distance:e} of locus point {locus}")]
    IllConditionedRoot {
        approx: String,
        locus: GaussRat,
        distance: f64,
    },
    #[error("numeric root finding failed: {0}")]
    RootFinding(String),
    #[error("canonical exponents are not strictly increasing at {0}")]
    NonIncreasingExponents(String),
    #[error("component {0} is not of the form z^beta * polynomial")]
    NotPurePowerForm(usize),
    #[error("gamma[{index}] = {value} must be greater than -1")]
    GammaOutOfRange { index: usize, value: String },
    #[error("basepoint {0} is a pole of the ensemble")]
    BasepointIsPole(GaussRat),
    #[error("{0} is not a pole of any form")]
    NotAPole(String),
    #[error("scale factors must be distinct (lambda {0} repeated)")]
    DuplicateLambda(String),
    #[error("scale factors must be nonzero")]
    ZeroLambda,
    #[error("reference component f_0 vanishes identically")]
    ZeroReference,
    #[error("Gram determinant is not positive at level {level}")]
    NonPositiveGram { level: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Process exit status: 1 for invalid input, 2 for degenerate curves or
    /// ensembles, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateCurve | Error::ZeroReference => 2,
            Error::EvalAtSingularity(_)
            | Error::IllConditionedRoot { .. }
            | Error::RootFinding(_)
            | Error::NonPositiveGram { .. } => 3,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
