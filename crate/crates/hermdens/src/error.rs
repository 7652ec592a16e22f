use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("singular system: column {0} is linearly dependent on earlier columns")]
    Singular(usize),
    #[error("geometric series does not contract: ratio {0}")]
    Divergent(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("consistency failure: {0}")]
    Consistency(String),
    #[error("rational function has a pole at q = {0}")]
    Pole(i64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
