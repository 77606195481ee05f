//! Numerical radius of a complex square matrix.
//!
//! Three interoperating solvers compute `r(A) = max { |z| : z in W(A) }`,
//! the largest modulus over the field of values:
//!
//! - [`levelset::algorithm1`]: a level-set iteration on `rho(H(theta))`
//!   driven by the unimodular eigenvalues of an order-`2n` pencil, boosted by
//!   local optimization;
//! - [`cutting::algorithm2`]: a cutting-plane iteration refining an outer
//!   polygon of the field of values, with curvature-aware optimal cuts;
//! - [`hybrid::hybrid_solve`]: runs the cutting method while predicting its
//!   remaining cost from curvature estimates, and switches to the
//!   warm-started level-set method when cutting is the slower path.
//!
//! [`theory`] holds the closed-form cost/rate results the solvers and tests
//! lean on, plus a brute-force grid oracle; [`gallery`] generates the test
//! families.

pub mod cutting;
pub mod error;
pub mod fov;
pub mod gallery;
pub mod hybrid;
pub mod kernel;
pub mod levelset;
pub mod localopt;
pub mod matrix;
pub mod par;
pub mod report;
pub mod theory;

pub use error::{Error, Result};
pub use matrix::{read_matrix_market, write_matrix_market, C64, CMatrix};
pub use report::SolveReport;
