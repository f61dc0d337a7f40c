use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown feature(s): {}", .0.join(", "))]
    UnknownFeatures(Vec<String>),
    #[error("missing feature(s): {}", .0.join(", "))]
    MissingFeatures(Vec<String>),
    #[error("class {class} has {count} instances, fewer than k = {k}")]
    ClassTooSmall { class: u8, count: usize, k: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("hyperparameter `{name}` is outside its domain: {message}")]
    Hyperparameter { name: String, message: String },
    #[error("dataset contains missing values in feature `{0}`")]
    MissingValues(String),
    #[error("generator failed: {0}")]
    Generator(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
