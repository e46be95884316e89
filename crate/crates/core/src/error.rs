use thiserror::Error;

use crate::expr::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: ParseError,
    },
    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("metric not positive definite at {point:?} (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64, point: Vec<f64> },
    #[error("singular metric at {point:?} (condition number {condition:e})")]
    SingularMetric { condition: f64, point: Vec<f64> },
    #[error("specification is not K-contact: |d_n g| = {residual:e} at {witness:?}")]
    NotKContact { residual: f64, witness: Vec<f64> },
    #[error("curve leaves the domain box at t = {t} (point {point:?})")]
    CurveExitsDomain { t: f64, point: Vec<f64> },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("transport matrix is degenerate (det = {det:e})")]
    DegenerateTransport { det: f64 },
    #[error("loop scale too large: loop {loop_index} in plane ({}, {}) reaches {vertex:?} outside the domain box", plane.0, plane.1)]
    ScaleTooLarge {
        loop_index: usize,
        plane: (usize, usize),
        vertex: Vec<f64>,
    },
    #[error("holonomy sample is empty")]
    EmptySample,
    #[error("no usable samples remain after excluding {excluded} near the logarithm branch cut")]
    EmptyAfterExclusion { excluded: usize },
    #[error("eigenvalue gap {gap:e} is within a factor 10 of the clustering threshold {threshold:e}; change the seed or tolerance")]
    ClusteringAmbiguity { gap: f64, threshold: f64 },
    #[error("projector matching is ambiguous: distances {first:e} and {second:e} tie")]
    ProjectorTie { first: f64, second: f64 },
    #[error("invalid block partition: {0}")]
    Partition(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Eval { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::SingularMetric { .. }
                | Error::DegenerateTransport { .. }
                | Error::EmptyAfterExclusion { .. }
                | Error::ClusteringAmbiguity { .. }
                | Error::ProjectorTie { .. }
        )
    }
}
