use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input: overlapping blocks, mismatched sizes, bad parameters.
    #[error("validation error: {0}")]
    Validation(String),
    /// Argument outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Request exceeds a configured size cap.
    #[error("resource error: {0}")]
    Resource(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code for the CLI: 1 for caller mistakes, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Domain(_) => 1,
            Error::Resource(_) | Error::Numerical(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $kind:ident, $($arg:tt)+) => {
        {
            let ok: bool = $cond;
            if !ok {
                return Err($crate::error::Error::$kind(format!($($arg)+)));
            }
        }
    };
}
pub(crate) use ensure;
