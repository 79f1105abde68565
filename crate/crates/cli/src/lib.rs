//! Library side of the `adlab` binary: configuration, scenario runs, sweeps,
//! output writers and the invariant suite behind `adlab verify`.

pub mod config;
pub mod output;
pub mod random;
pub mod scenario;
pub mod sweep;
pub mod verify;

pub use config::{Analysis, ConfigFile, InitialState, ModelSpec, ScenarioConfig};
pub use scenario::{run_scenario, ScenarioOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(#[from] adiabatic_duality::Error),

    #[error("numerical failure: invariant {invariant} violated (measured {value:e}, bound {bound:e})")]
    Invariant { invariant: String, value: f64, bound: f64 },

    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 1 for failed verification, 2 for configuration and I/O problems, 3
    /// for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) | CliError::Invariant { .. } => 3,
        }
    }
}
