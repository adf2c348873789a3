use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite coordinate at index {index}")]
    NonFiniteInput { index: usize },

    #[error("field evaluation returned a non-finite value ({context})")]
    NonFiniteValue { context: String },

    #[error("finite differencing failed along coordinate {coordinate}")]
    Differentiation { coordinate: usize },

    #[error("{context} is not antisymmetric (residual {residual:e})")]
    NotAntisymmetric { context: String, residual: f64 },

    #[error("invalid structure constants: {0}")]
    InvalidStructureConstants(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown expanded-system kind `{0}`")]
    UnknownKind(String),

    #[error("state became non-finite at step {step}")]
    BlowUp { step: usize },
}

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}
