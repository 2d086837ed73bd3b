//! Library behind the `oamlat` command: recipe handling and the four
//! pipeline commands. `main.rs` only parses arguments and maps errors to exit
//! codes.

pub mod bundled;
pub mod commands;
pub mod recipe;

pub use commands::{holo, identify, interfere, synth, FieldPath, Output};
pub use recipe::Recipe;

/// Exit codes of the `oamlat` binary.
pub mod exit {
    pub const OK: i32 = 0;
    /// I/O and other runtime failures.
    pub const FAILURE: i32 = 1;
    /// Malformed recipe, image or arguments.
    pub const PARSE: i32 = 2;
    /// Valid input that the pipeline cannot honor (clipping grid, undersampling, ...).
    pub const PRECONDITION: i32 = 3;
    /// The image holds no detectable ring.
    pub const NO_RINGS: i32 = 4;
    /// Rings were found but none matches the assumed helicity factor.
    pub const INCONSISTENT_N_FOLD: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] oam_lattice::Error),
    #[error("no rings detected in {0}")]
    NoRings(String),
    #[error("inconsistent n-fold: {0}")]
    InconsistentNFold(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use oam_lattice::Error as E;
        match self {
            CliError::Parse(_) => exit::PARSE,
            CliError::NoRings(_) => exit::NO_RINGS,
            CliError::InconsistentNFold(_) => exit::INCONSISTENT_N_FOLD,
            CliError::Core(E::Image(_)) => exit::PARSE,
            CliError::Core(E::Io(_) | E::Csv(_)) => exit::FAILURE,
            CliError::Core(_) => exit::PRECONDITION,
            CliError::Other(_) => exit::FAILURE,
        }
    }
}
