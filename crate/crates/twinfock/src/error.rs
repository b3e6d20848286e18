use thiserror::Error;

/// Errors produced by state construction and the analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("photon number {0} is out of range (need 1 ..= {1})")]
    PhotonNumberOutOfRange(u64, u64),

    #[error("phase must be finite, got {0}")]
    NonFinitePhase(f64),

    #[error("total photon numbers differ: {0} vs {1}")]
    PhotonNumberMismatch(usize, usize),

    #[error("amplitude vector has length {got}, expected {expected}")]
    BadAmplitudeLength { got: usize, expected: usize },

    #[error("state is not normalized: |norm^2 - 1| = {0:e}")]
    NotNormalized(f64),

    #[error("parameter {name} = {value} outside its allowed range {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("phase grid is empty")]
    EmptyGrid,

    #[error("cannot fit: {0}")]
    DegenerateFit(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
