use thiserror::Error;

/// Errors produced by simulation, inference and the study harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A simulated path left the configured magnitude envelope. Explosive
    /// modes grow like e^{a t}; once |u| crosses the threshold the path is
    /// aborted instead of silently producing infinities.
    #[error("mode {mode_index}: |u| exceeded {threshold:e} at step {step}")]
    PathOverflow {
        mode_index: usize,
        step: usize,
        threshold: f64,
    },

    /// The normal equations are (near-)singular. Happens exactly for
    /// single-mode data, where I1*I2 == I3^2.
    #[error("near-singular normal equations: det = {det:e} (I1*I2 = {scale:e})")]
    Singular { det: f64, scale: f64 },

    #[error("degenerate data: every mode path is identically zero")]
    DegenerateData,

    #[error("replication {rep_id}: {source}")]
    Replication {
        rep_id: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors arising from the numerics themselves (overflow,
    /// singular normal equations, degenerate data) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::PathOverflow { .. } | Error::Singular { .. } | Error::DegenerateData => true,
            Error::Replication { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
