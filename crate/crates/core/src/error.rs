use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("mesh file, line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported derivative order {order} (at most {max} is available)")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver error: {msg} (relative residual {residual:e})")]
    Solver { msg: String, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
