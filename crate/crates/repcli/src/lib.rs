//! File formats, parallel drivers and the acceptance table behind the
//! `repcli` binary.

pub mod checks;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;
pub mod parallel;
pub mod sweep;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] rydrep_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}
