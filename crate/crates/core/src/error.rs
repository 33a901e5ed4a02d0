use thiserror::Error;

/// Errors raised by the models, the controller guard and the simulator.
///
/// Quantities are reported as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("model singularity: {0}")]
    Singularity(String),

    #[error("steering guard exceeded: delta_f = {delta_f} rad is beyond ±{limit} rad")]
    SteeringGuard { delta_f: f64, limit: f64 },

    #[error("ambiguous projection: point ({x}, {y}) is equidistant from the path")]
    AmbiguousProjection { x: f64, y: f64 },

    #[error("arclength {s} outside path range [0, {length}]")]
    OutOfRange { s: f64, length: f64 },

    #[error("unplaceable double pole: {0}")]
    Unplaceable(String),

    #[error("degenerate pole placement: {0}")]
    Degenerate(String),

    #[error("simulation aborted at t = {t} s: {source}")]
    Aborted { t: f64, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Root cause, skipping the simulation timestamp wrapper.
    pub fn root(&self) -> &Error {
        match self {
            Error::Aborted { source, .. } => source.root(),
            e => e,
        }
    }
}
