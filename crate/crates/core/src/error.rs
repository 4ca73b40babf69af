use thiserror::Error;

use crate::vi_solver::DiscreteSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("NegativeHomogeneityAtOrigin: u_{{{m}+1/2}} is singular at the origin")]
    NegativeHomogeneityAtOrigin { m: i32 },

    #[error("OriginSingularity: gradient is undefined at the origin")]
    OriginSingularity,

    #[error("LeadMismatch: index {lead} is absent or not the largest index of the expansion")]
    LeadMismatch { lead: i32 },

    #[error("CoefficientOutOfRange: |a_{index}| = {value} exceeds 1")]
    CoefficientOutOfRange { index: usize, value: f64 },

    #[error("LengthMismatch: expected {expected} coefficients, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("InvalidDatum: {0}")]
    InvalidDatum(String),

    #[error("ProfileNotAdmissible: translated profile at tau = {tau} is not a global solution")]
    ProfileNotAdmissible { tau: f64 },

    #[error("BarrierNotDominant: Q - p has no nonnegative far field at tau = {tau}")]
    BarrierNotDominant { tau: f64 },

    #[error("NoAdmissibleTau: no admissible barrier found for tau <= {cap}")]
    NoAdmissibleTau { cap: f64 },

    #[error("InvalidMesh: {0}")]
    InvalidMesh(String),

    #[error("InvalidOmega: relaxation factor {0} outside [1, 2)")]
    InvalidOmega(f64),

    #[error("MaxIterExceeded: {iterations} sweeps, residual {residual:e}")]
    MaxIterExceeded {
        iterations: usize,
        residual: f64,
        best: Box<DiscreteSolution>,
    },

    #[error("NotConverged: solution did not meet its convergence tolerance")]
    NotConverged,

    #[error("CircleOutsideMesh: circle of radius {radius} centred at x1 = {center} leaves the mesh")]
    CircleOutsideMesh { radius: f64, center: f64 },

    #[error("RadiusBelowContactClosure: radius {radius} is inside the contact closure M_emp = {m_emp}")]
    RadiusBelowContactClosure { radius: f64, m_emp: f64 },

    #[error("OriginNotInvertible: the origin has no Kelvin image")]
    OriginNotInvertible,

    #[error("IllConditionedFit: normal-system condition estimate {condition:e} exceeds 1e12")]
    IllConditionedFit { condition: f64 },

    #[error("WindowMismatch: fit windows [{0}, {1}] and [{2}, {3}] are not mirror images")]
    WindowMismatch(f64, f64, f64, f64),

    #[error("LeadingCoefficientOffUnity: leading mode coefficient {value} is not 1")]
    LeadingCoefficientOffUnity { value: f64 },

    #[error("InsufficientSamples: {0}")]
    InsufficientSamples(String),

    #[error("Format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
