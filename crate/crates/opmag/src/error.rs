use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong across the library.
///
/// The CLI maps these onto process exit codes via [`Error::exit_code`]:
/// configuration problems exit 2, solver failures 3, I/O failures 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("nuclear spin must be a half-integer ≥ 1/2, got {0}")]
    InvalidNuclearSpin(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("unknown preset `{0}` (run the `presets` subcommand for the list)")]
    UnknownPreset(String),

    #[error(
        "pump detuning is exactly resonant with the ground-{ground} -> excited-{excited} \
         transition while the pressure broadening is zero; the eliminated rates are \
         singular there"
    )]
    SingularDetuning { ground: char, excited: char },

    #[error(
        "mean-field iteration stalled after {iterations} iterations \
         (last step {last_step:.3e}, relative residual {residual:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        last_step: f64,
        residual: f64,
        /// The ⟨S_z⟩ iterates, for post-mortem inspection.
        history: Vec<f64>,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error(
        "Re⟨Sx+⟩ does not change sign inside the scan window [{lo_hz:.6e}, {hi_hz:.6e}] Hz; \
         widen the window or re-center it"
    )]
    WindowTooSmall {
        lo_hz: f64,
        hi_hz: f64,
        /// The coarse scan that failed, as (omega_hz, Re⟨Sx+⟩) pairs.
        scan: Vec<(f64, f64)>,
    },

    #[error("adaptive step size underflowed at t = {t:.6e} s (remaining span {remaining:.3e} s)")]
    StepSizeUnderflow { t: f64, remaining: f64 },

    #[error("i/o on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code the CLI uses for this error class.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidNuclearSpin(_)
            | Error::InvalidParameter { .. }
            | Error::Config(_)
            | Error::UnknownPreset(_)
            | Error::Json(_) => 2,
            Error::SingularDetuning { .. }
            | Error::NonConvergence { .. }
            | Error::LinearSolve(_)
            | Error::WindowTooSmall { .. }
            | Error::StepSizeUnderflow { .. } => 3,
            Error::Io { .. } => 4,
        }
    }

    /// Short machine-readable tag, used for the `status` column of sweep CSVs.
    pub fn status_tag(&self) -> &'static str {
        match self {
            Error::InvalidNuclearSpin(_) => "invalid_nuclear_spin",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Config(_) => "config_error",
            Error::UnknownPreset(_) => "unknown_preset",
            Error::SingularDetuning { .. } => "singular_detuning",
            Error::NonConvergence { .. } => "non_convergence",
            Error::LinearSolve(_) => "linear_solve_failed",
            Error::WindowTooSmall { .. } => "window_too_small",
            Error::StepSizeUnderflow { .. } => "step_underflow",
            Error::Io { .. } => "io_error",
            Error::Json(_) => "json_error",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
