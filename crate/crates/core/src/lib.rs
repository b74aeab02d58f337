//! Finite element machinery for elliptic optimal control problems whose
//! objective tracks prescribed data along a curve inside the unit square.
//!
//! The crate is organised around the pipeline of such a solve:
//!
//! * [`mesh`] — conforming triangulations of the unit square (structured or
//!   imported in Triangle's `.node`/`.ele` format) and point location.
//! * [`geometry`] — smooth parametric curves, interpolating polygonal
//!   curves, the normal-line lift between them, and the geometric
//!   quantities controlling the approximation quality.
//! * [`fem`] — P1 operator/mass assembly, state solves, norms and
//!   experimental orders of convergence.
//! * [`fidelity`] — assembly of the curve fidelity term (surface mass
//!   matrix and data vector) by either exact curve integration or
//!   polygonal approximation, and its reduction to weighted point control.
//! * [`optimizer`] — the semismooth Newton solver for the coupled
//!   state/adjoint optimality system with box control constraints.
//! * [`io`] — VTK and CSV export.

pub mod fem;
pub mod fidelity;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod optimizer;
pub mod quad;

/// Errors shared across the crate. Variants mirror the failure modes of the
/// individual subsystems so callers can map them to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("covering condition violated: {0}")]
    Covering(String),
    #[error("ambiguous closest-point projection: {0}")]
    AmbiguousProjection(String),
    #[error("point location failed: {0}")]
    Locate(String),
    #[error("linear solver failed: {0}")]
    Solver(String),
    #[error("Newton did not converge within {iterations} iterations (last residual {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        residual_history: Vec<f64>,
    },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
