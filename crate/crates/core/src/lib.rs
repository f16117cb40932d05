//! Degenerate Pucci extremal operators of order `p` and the numerical
//! experiments built on them.
//!
//! * [`linalg`]: packed symmetric matrices, a deterministic Jacobi eigensolver
//!   and orthonormal frames.
//! * [`pucci`]: the order-`p` and subspace-restricted extremal operators, the
//!   linear functionals they are suprema of, and sampling oracles.
//! * [`properties`]: randomized sweeps over the algebraic properties of the
//!   operators.
//! * [`radial`]: closed-form radial profiles (fundamental solutions, the
//!   maximum-principle counterexample, quadratic barriers) and their residuals.
//! * [`capacity`]: Riesz kernels, discrete potentials, Frank–Wolfe
//!   equilibrium measures and the blow-up supersolution bound.
//! * [`fd`]: a monotone wide-stencil finite-difference solver in two
//!   dimensions plus the maximum-principle and removability experiments.
//! * [`io`]: JSON/CSV/config plumbing shared with the command-line front end.

pub mod capacity;
pub mod fd;
pub mod io;
pub mod linalg;
pub mod properties;
pub mod pucci;
pub mod radial;

pub use linalg::{eigen_sorted, Frame, Mat, Spectrum, SymMat};
pub use pucci::Ellipticity;
pub use radial::ModelParams;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("singular evaluation: {0}")]
    Singular(String),
    #[error("did not converge: {0}")]
    NotConverged(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
