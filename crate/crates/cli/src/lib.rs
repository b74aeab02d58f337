//! Experiment runner: parse a flat `key = value` configuration, build the
//! requested problem, and write solution/table artifacts to disk.

pub mod config;
pub mod runner;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_GEOMETRY: i32 = 4;
pub const EXIT_OTHER: i32 = 1;

/// Map an error to the documented exit code.
pub fn exit_code(err: &RunError) -> i32 {
    match err {
        RunError::Config(_) => EXIT_CONFIG,
        RunError::Core(curvectrl::Error::NonConvergence { .. }) => EXIT_NONCONVERGENCE,
        RunError::Core(
            curvectrl::Error::Covering(_)
            | curvectrl::Error::AmbiguousProjection(_)
            | curvectrl::Error::Locate(_),
        ) => EXIT_GEOMETRY,
        RunError::Core(_) => EXIT_OTHER,
    }
}

/// Errors surfaced by the runner: configuration problems keep their own
/// variant so the exit-code mapping stays trivial.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Core(curvectrl::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(msg) => write!(f, "configuration error: {msg}"),
            RunError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<curvectrl::Error> for RunError {
    fn from(err: curvectrl::Error) -> Self {
        RunError::Core(err)
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;
