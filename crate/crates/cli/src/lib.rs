//! Command-line driver: kernel inspection, thresholds, dispersion, lab-frame
//! simulation, moving-frame wave relaxation, parameter sweeps and energy audits.

pub mod commands;
pub mod config;

use thiserror::Error;

pub use commands::{run, Cli};

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    BlowUp(String),
    #[error("{0}")]
    Io(String),
}

impl Failure {
    /// 2 for invalid input, 3 for a blow-up, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::BlowUp(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}
