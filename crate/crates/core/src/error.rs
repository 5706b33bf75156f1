use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The quantum state does not have the structure the protocol step needs.
    #[error("protocol state error: {0}")]
    ProtocolState(String),
    /// Text could not be parsed into a domain value.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}

macro_rules! protocol_err {
    ($($arg:tt)*) => {
        $crate::error::Error::ProtocolState(alloc::format!($($arg)*))
    };
}

pub(crate) use invalid;
pub(crate) use protocol_err;
