use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("division by an identically zero expression")]
    DivisionByZero,

    #[error("division by an expression involving momenta is not supported")]
    NotPolynomialInP,

    #[error("dimension {0} is outside the supported range 1..=6")]
    Dimension(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{what} fails its symmetry at indices {indices:?}")]
    Symmetry { what: String, indices: Vec<usize> },

    #[error("{0} is not invertible")]
    NonInvertible(String),

    #[error("frame or space mismatch: {0}")]
    FrameMismatch(String),

    #[error("manifest lacks the `{0}` block")]
    MissingBlock(String),

    #[error("degree error: {0}")]
    Degree(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: String, name: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Manifest(String),
}

pub type Result<T> = std::result::Result<T, Error>;
