// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the kernel laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate in input point")]
    NonFinite,

    #[error("{0} is not supported for this domain")]
    UnsupportedDomain(String),

    #[error("point lies outside the domain (defect {defect:.3e})")]
    OutsideDomain { defect: f64 },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("weight is not positive at the evaluation point (value {value:.3e})")]
    NonPositiveWeight { value: f64 },

    #[error("no closed-form moments for this (domain, weight) pair; use quadrature")]
    NoClosedForm,

    #[error("quadrature scheme incompatible: {0}")]
    IncompatibleScheme(String),

    #[error("weight not integrable against the scheme: {0}")]
    NotIntegrable(String),

    #[error("gram matrix is not positive semidefinite (scaled minimum eigenvalue {lambda_min:.3e})")]
    NotPositiveSemidefinite { lambda_min: f64 },

    #[error("rank deficiency too large: dropped {dropped} of {size} directions")]
    RankDeficient { dropped: usize, size: usize },

    #[error("branch cut reached in complex power (factor {re:.3e}{im:+.3e}i)")]
    BranchCut { re: f64, im: f64 },

    #[error("non-positive kernel diagonal {0:.3e}")]
    NonPositiveDiagonal(f64),

    #[error("ill-conditioned moment system (condition {condition:.3e}); try a positive ridge")]
    IllConditioned { condition: f64 },

    #[error("map does not preserve the zero section")]
    ZeroSectionViolated,

    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("finite-difference step too large for the domain margin")]
    StepTooLarge,

    #[error("map is not holomorphic at the sample point (Cauchy-Riemann defect {0:.3e})")]
    NotHolomorphic(f64),

    #[error("integer overflow")]
    Overflow,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
