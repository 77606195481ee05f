//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad caller input: non-finite entries, non-square matrices, malformed
    /// files, out-of-domain parameters.
    #[error("input error: {0}")]
    Input(String),

    /// An eigenvalue kernel failed to converge.
    #[error("eigensolver kernel failed: {0}")]
    Kernel(String),

    /// Two supporting lines are (near-)parallel and have no usable
    /// intersection.
    #[error("degenerate intersection: |sin(dtheta)| = {sin_dtheta:.3e}")]
    DegenerateIntersection { sin_dtheta: f64 },

    /// The largest eigenvalue of H(theta) is not simple, so the boundary
    /// curvature there is not defined by the Fiedler formula.
    #[error("curvature undefined at theta = {theta}: lambda_max gap {gap:.3e} below threshold")]
    CurvatureUndefined { theta: f64, gap: f64 },

    /// The attaining eigenvalue is not simple, so rho'(theta) is not defined.
    #[error("derivative undefined at theta = {theta}: eigenvalue gap {gap:.3e} below threshold")]
    DerivativeUndefined { theta: f64, gap: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
