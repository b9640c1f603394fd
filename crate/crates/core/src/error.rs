use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A pivot fell below the relative singularity threshold during LU.
    #[error("singular matrix: pivot {pivot:e} in column {column}")]
    SingularMatrix { column: usize, pivot: f64 },

    /// Neither the fixed-point phase nor the residual descent reached the
    /// tolerance. `layer` is filled in when the failure happens inside a model.
    #[error("nonlinear solve did not converge (residual {residual:e}, {iterations} iterations{})",
        .layer.map(|l| format!(", layer {l}")).unwrap_or_default())]
    SolverDiverged {
        residual: f64,
        iterations: usize,
        layer: Option<usize>,
    },

    #[error("loss is not finite")]
    NonFiniteLoss,

    #[error("invalid count: {0}")]
    InvalidCount(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn at_layer(self, index: usize) -> Self {
        match self {
            Error::SolverDiverged {
                residual,
                iterations,
                ..
            } => Error::SolverDiverged {
                residual,
                iterations,
                layer: Some(index),
            },
            other => other,
        }
    }
}
