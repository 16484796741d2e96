use thiserror::Error;

/// Errors raised anywhere in the training stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("backward pass requested without a matching forward cache")]
    MissingCache,

    #[error("non-finite value encountered in network `{network}`")]
    NonFinite { network: String },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("invalid gaussian: {0}")]
    InvalidGaussian(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("index {index} out of range for {what} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("task `{0}` has no adversary")]
    NoAdversary(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(context: &str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension {
            context: context.to_owned(),
            expected,
            actual,
        });
    }
    Ok(())
}
