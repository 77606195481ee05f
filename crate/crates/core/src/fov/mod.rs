//! Field-of-values primitives: the Hermitian family `H(theta)`, support
//! values and boundary points, supporting hyperplanes, and the objective
//! `rho(H(theta))` shared by all solvers.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::kernel::{self, EigMode, HermitianEigen, PencilEigenvalues, SolveCounters};
use crate::matrix::{C64, CMatrix};

mod curvature;
mod polygon;

pub use curvature::{fiedler_curvature, CurvatureResult};
pub use polygon::{polygon_init, BoundaryPolygon};

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Lines closer to parallel than this (in `|sin(dtheta)|`) have no usable
/// intersection.
pub const TOL_PARALLEL: f64 = 1e-12;

/// Angles within this distance are treated as the same supporting hyperplane.
pub const TOL_ANGLE: f64 = 1e-10;

/// Relative eigenvalue gap below which an extreme eigenvalue is treated as
/// non-simple.
pub const TOL_GAP: f64 = 1e-8;

/// Maps any angle into `[0, 2 pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % TAU;
    if t < 0.0 {
        t += TAU;
    }
    if t >= TAU {
        t = 0.0;
    }
    t
}

/// One supporting hyperplane of the field of values: the support angle, the
/// support value `lambda = lambda_max(H(theta))`, and a boundary point on the
/// supporting line.
#[derive(Clone, Debug)]
pub struct SupportPoint {
    pub theta: f64,
    pub lambda: f64,
    pub z: C64,
    pub eigvec: Option<Vec<C64>>,
}

impl SupportPoint {
    /// Signed distance of `z` to this half plane; positive values violate
    /// containment.
    pub fn violation(&self, z: C64) -> f64 {
        (Complex::from_polar(1.0, self.theta) * z).re - self.lambda
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Max,
    Min,
}

/// Evaluation of `H(theta)` at one angle, carrying the eigen data every
/// consumer (support points, rho, derivatives) extracts from.
#[derive(Clone, Debug)]
pub struct AngleEval {
    pub theta: f64,
    pub eig: HermitianEigen,
    pub full: bool,
}

impl AngleEval {
    pub fn lambda_max(&self) -> f64 {
        self.eig.lambda_max()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eig.lambda_min()
    }

    /// `rho(H(theta)) = max(lambda_max, -lambda_min)` and the sign of the
    /// attaining eigenvalue. Ties resolve to `+1`.
    pub fn rho(&self) -> (f64, i8) {
        let lmax = self.lambda_max();
        let lmin = self.lambda_min();
        if lmax >= -lmin {
            (lmax, 1)
        } else {
            (-lmin, -1)
        }
    }

    pub fn rho_value(&self) -> f64 {
        self.rho().0
    }

    /// Eigenvalue gap isolating the attaining extreme.
    pub fn attaining_gap(&self) -> f64 {
        match self.rho().1 {
            1 => self.eig.gap_top(),
            _ => self.eig.gap_bottom(),
        }
    }

    /// Unit eigenvector attaining `rho`.
    pub fn attaining_vector(&self) -> Vec<C64> {
        match self.rho().1 {
            1 => self.eig.vector(0),
            _ => self.eig.vector(self.eig.values.len() - 1),
        }
    }

    /// Support point at `theta` from the `lambda_max` eigenvector.
    pub fn support_max(&self, a: &CMatrix) -> SupportPoint {
        let x = self.eig.vector(0);
        SupportPoint {
            theta: self.theta,
            lambda: self.lambda_max(),
            z: a.quad_form(&x),
            eigvec: Some(x),
        }
    }

    /// Dual support point at `theta + pi` from the `lambda_min` eigenvector,
    /// using `H(theta + pi) = -H(theta)`.
    pub fn support_min_dual(&self, a: &CMatrix) -> SupportPoint {
        let x = self.eig.vector(self.eig.values.len() - 1);
        SupportPoint {
            theta: normalize_angle(self.theta + std::f64::consts::PI),
            lambda: -self.lambda_min(),
            z: a.quad_form(&x),
            eigvec: Some(x),
        }
    }
}

/// Result of the `rho(H(theta))` objective at one angle.
#[derive(Clone, Debug)]
pub struct RhoEval {
    pub value: f64,
    pub sign: i8,
    pub eigenvalue: f64,
    pub eigvec: Vec<C64>,
}

/// Ties a matrix to the solve counters so every expensive kernel call made on
/// its behalf is tallied exactly once.
pub struct Evaluator<'a> {
    a: &'a CMatrix,
    pub counters: SolveCounters,
}

impl<'a> Evaluator<'a> {
    pub fn new(a: &'a CMatrix) -> Self {
        Evaluator {
            a,
            counters: SolveCounters::new(),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        self.a
    }

    pub fn n(&self) -> usize {
        self.a.n()
    }

    /// One Hermitian eigen-solve of `H(theta)`.
    pub fn angle(&self, theta: f64, mode: EigMode) -> Result<AngleEval> {
        let h = self.a.h_theta(theta);
        let eig = kernel::hermitian_eig(&h, mode)?;
        self.counters.bump_eig_h();
        Ok(AngleEval {
            theta: normalize_angle(theta),
            eig,
            full: mode == EigMode::Full,
        })
    }

    /// `rho(H(theta))` through one extreme eigen-solve.
    pub fn rho(&self, theta: f64) -> Result<f64> {
        Ok(self.angle(theta, EigMode::Extremes)?.rho_value())
    }

    /// One generalized eigen-solve of the level-set pencil at `gamma`.
    pub fn pencil(&self, gamma: f64) -> Result<PencilEigenvalues> {
        let (r, s) = crate::levelset::build_pencil(self.a, gamma);
        let out = kernel::pencil_eig(&r, &s)?;
        self.counters.bump_pencil();
        Ok(out)
    }
}

/// `H(theta)` as a standalone operation.
pub fn build_h(a: &CMatrix, theta: f64) -> CMatrix {
    a.h_theta(theta)
}

/// Supporting hyperplane data at `theta`. `Which::Min` returns the dual
/// support point at `theta + pi` obtained from the same eigen-solve.
pub fn support_point(a: &CMatrix, theta: f64, which: Which) -> Result<SupportPoint> {
    let ev = Evaluator::new(a);
    let ae = ev.angle(theta, EigMode::Extremes)?;
    Ok(match which {
        Which::Max => ae.support_max(a),
        Which::Min => ae.support_min_dual(a),
    })
}

/// The objective `rho(H(theta))` with the attaining eigenpair.
pub fn rho_h(a: &CMatrix, theta: f64) -> Result<RhoEval> {
    let ev = Evaluator::new(a);
    let ae = ev.angle(theta, EigMode::Extremes)?;
    let (value, sign) = ae.rho();
    let eigenvalue = if sign == 1 {
        ae.lambda_max()
    } else {
        ae.lambda_min()
    };
    Ok(RhoEval {
        value,
        sign,
        eigenvalue,
        eigvec: ae.attaining_vector(),
    })
}

/// Intersection of the supporting lines of `p` and `q`: the unique point `c`
/// with `Re(e^{i theta_p} c) = lambda_p` and `Re(e^{i theta_q} c) = lambda_q`.
///
/// Solved in the local frame of `p`'s line, `c = e^{-i theta_p} (lambda_p +
/// i t)`: for nearly parallel cuts the roundoff then lands in the tangential
/// coordinate `t` only, so the corner modulus (never below `lambda_p`) stays
/// trustworthy, which a plain 2x2 Cramer solve does not provide.
pub fn corner_intersection(p: &SupportPoint, q: &SupportPoint) -> Result<C64> {
    let d = q.theta - p.theta;
    let (sin_d, cos_d) = (d.sin(), d.cos());
    if sin_d.abs() <= TOL_PARALLEL {
        return Err(Error::DegenerateIntersection {
            sin_dtheta: sin_d.abs(),
        });
    }
    // Re(e^{i theta_q} c) = lambda_p cos(d) - t sin(d) = lambda_q.
    let t = (p.lambda * cos_d - q.lambda) / sin_d;
    Ok(Complex::from_polar(1.0, -p.theta) * C64::new(p.lambda, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn support_of_crabb_at_zero() {
        let a = gallery::crabb(2).unwrap();
        let sp = support_point(&a, 0.0, Which::Max).unwrap();
        assert_relative_eq!(sp.lambda, 1.0, max_relative = 1e-14);
        assert_relative_eq!(sp.z.re, 1.0, max_relative = 1e-13);
        assert!(sp.z.im.abs() < 1e-14);
    }

    #[test]
    fn support_of_normal_diagonal() {
        let a = CMatrix::from_fn(2, |i, j| {
            if i == j {
                C64::new([-3.0, 2.0][i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let sp = support_point(&a, 0.0, Which::Max).unwrap();
        assert_relative_eq!(sp.lambda, 2.0, max_relative = 1e-14);
        assert_relative_eq!(sp.z.re, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn min_support_equals_dual_max() {
        let a = gallery::random_complex(9, 42).unwrap();
        for &theta in &[0.0, 0.7, 2.1] {
            let lo = support_point(&a, theta, Which::Min).unwrap();
            let hi = support_point(&a, theta + PI, Which::Max).unwrap();
            assert_relative_eq!(lo.lambda, hi.lambda, max_relative = 1e-12);
            assert!((lo.z - hi.z).norm() < 1e-10 * (1.0 + hi.z.norm()));
        }
    }

    #[test]
    fn boundary_point_lies_on_supporting_line() {
        let a = gallery::random_complex(14, 7).unwrap();
        for k in 0..12 {
            let theta = k as f64 * PI / 6.0;
            let sp = support_point(&a, theta, Which::Max).unwrap();
            let resid = sp.violation(sp.z).abs();
            assert!(resid <= 1e-10 * (1.0 + sp.lambda.abs()));
        }
    }

    #[test]
    fn rho_of_disk_matrix_is_constant_one() {
        let a = gallery::crabb(5).unwrap();
        for k in 0..8 {
            let r = rho_h(&a, k as f64 * 0.4).unwrap();
            assert_relative_eq!(r.value, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn rho_dominates_lambda_max() {
        let a = gallery::random_complex(11, 5).unwrap();
        let ev = Evaluator::new(&a);
        for k in 0..24 {
            let ae = ev.angle(k as f64 * 0.26, EigMode::Extremes).unwrap();
            assert!(ae.rho_value() >= ae.lambda_max() - 1e-14);
        }
    }

    #[test]
    fn rho_sign_on_diagonal() {
        let a = CMatrix::from_fn(2, |i, j| {
            if i == j {
                C64::new([-3.0, 2.0][i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let r = rho_h(&a, 0.0).unwrap();
        assert_relative_eq!(r.value, 3.0, max_relative = 1e-14);
        assert_eq!(r.sign, -1);
    }

    #[test]
    fn corner_of_axis_aligned_box() {
        let p = SupportPoint {
            theta: 0.0,
            lambda: 1.0,
            z: C64::new(1.0, 0.0),
            eigvec: None,
        };
        let q = SupportPoint {
            theta: 3.0 * FRAC_PI_2,
            lambda: 1.0,
            z: C64::new(0.0, 1.0),
            eigvec: None,
        };
        let c = corner_intersection(&p, &q).unwrap();
        assert_relative_eq!(c.re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.im, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn corner_of_antiparallel_lines_fails() {
        let p = SupportPoint {
            theta: 0.0,
            lambda: 1.0,
            z: C64::new(1.0, 0.0),
            eigvec: None,
        };
        let q = SupportPoint {
            theta: PI,
            lambda: 1.0,
            z: C64::new(-1.0, 0.0),
            eigvec: None,
        };
        assert!(matches!(
            corner_intersection(&p, &q),
            Err(Error::DegenerateIntersection { .. })
        ));
    }

    #[test]
    fn corner_of_unit_disk_supports() {
        // Supports at theta = 0 and theta = 7 pi / 4, both lambda = 1:
        // c = 1 + i tan(pi / 8).
        let p = SupportPoint {
            theta: 0.0,
            lambda: 1.0,
            z: C64::new(1.0, 0.0),
            eigvec: None,
        };
        let q = SupportPoint {
            theta: 7.0 * PI / 4.0,
            lambda: 1.0,
            z: C64::new(0.0, 0.0),
            eigvec: None,
        };
        let c = corner_intersection(&p, &q).unwrap();
        assert_relative_eq!(c.re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.im, (PI / 8.0).tan(), epsilon = 1e-12);
    }
}
