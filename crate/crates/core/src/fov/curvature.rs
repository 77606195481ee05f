//! Radius of curvature of the field-of-values boundary at a support point,
//! computed by Fiedler's pseudoinverse formula.

use crate::error::{Error, Result};
use crate::kernel::{hermitian_eig, EigMode};
use crate::matrix::{C64, CMatrix};

use super::TOL_GAP;

/// Radius of curvature of the boundary at the support point of `theta`,
/// possibly infinite on flat boundary pieces.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureResult {
    pub radius: f64,
    /// `radius / r` when the numerical radius was supplied.
    pub mu: Option<f64>,
}

/// Fiedler's formula at `z_theta`: shift and rotate so the largest eigenvalue
/// of the Hermitian part is zero and the boundary point sits at the origin,
/// then evaluate `r = -2 (H2 x)* H1^+ (H2 x)` with the pseudoinverse deflating
/// the eigenvector of `lambda_max` exactly.
///
/// Requires `lambda_max(H(theta))` to be simple; at corners the formula
/// returns zero, and a degenerate `H(theta)` (a multiple of the identity,
/// i.e. a flat boundary through every direction) reports an infinite radius.
pub fn fiedler_curvature(a: &CMatrix, theta: f64, r: Option<f64>) -> Result<CurvatureResult> {
    let n = a.n();
    let h = a.h_theta(theta);
    let eig = hermitian_eig(&h, EigMode::Full)?;
    let lambda = eig.values[0];

    // H(theta) ~ lambda I: the supporting line contains a degenerate flat
    // field of values, so the boundary is a line segment here.
    let mut collapse = 0.0f64;
    for (k, &v) in eig.values.iter().enumerate() {
        let _ = k;
        collapse = collapse.max((v - lambda).abs());
    }
    let scale = a.norm_fro().max(f64::MIN_POSITIVE);
    if collapse <= 1e-12 * scale {
        return Ok(CurvatureResult {
            radius: f64::INFINITY,
            mu: r.map(|_| f64::INFINITY),
        });
    }

    let gap = eig.gap_top();
    if gap <= TOL_GAP * eig.spectral_norm() {
        return Err(Error::CurvatureUndefined { theta, gap });
    }

    let x = eig.vector(0);
    // In the rotated frame A~ = e^{i theta} A, the boundary point is
    // z~ = x* A~ x and the shifted matrix A^ = A~ - z~ I satisfies
    // lambda_max(H1(A^)) = 0 with boundary point 0. H1's eigenvectors are
    // those of H(theta) with eigenvalues shifted by -lambda.
    let w = C64::from_polar(1.0, theta);
    let ax = a.matvec(&x);
    let ahx = a.matvec_adjoint(&x);
    let mut z_rot = C64::new(0.0, 0.0);
    for i in 0..n {
        z_rot += x[i].conj() * ax[i];
    }
    z_rot *= w;

    // H2 x = (1/(2i)) (A^ x - A^* x) with A^ = w A - z~ I.
    let half_over_i = C64::new(0.0, -0.5);
    let mut h2x = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let ahat_x = w * ax[i] - z_rot * x[i];
        let ahat_adj_x = w.conj() * ahx[i] - z_rot.conj() * x[i];
        h2x[i] = half_over_i * (ahat_x - ahat_adj_x);
    }

    // Quadratic form (H2 x)* H1^+ (H2 x) over the deflated eigenbasis.
    let h1_norm = eig
        .values
        .iter()
        .map(|v| (v - lambda).abs())
        .fold(0.0f64, f64::max);
    let pinv_tol = 1e-12 * h1_norm;
    let mut q = 0.0f64;
    for k in 1..n {
        let d = eig.values[k] - lambda;
        if d.abs() <= pinv_tol {
            continue;
        }
        let vk = eig.vector(k);
        let mut dot = C64::new(0.0, 0.0);
        for i in 0..n {
            dot += vk[i].conj() * h2x[i];
        }
        q += dot.norm_sqr() / d;
    }

    let radius = (-2.0 * q).max(0.0);
    Ok(CurvatureResult {
        radius,
        mu: r.map(|r| radius / r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fov::{Evaluator, Which};
    use crate::gallery;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn disk_model_curvature_is_rtilde() {
        let a = gallery::disk_model(6, 0.3, 0.7).unwrap();
        let c = fiedler_curvature(&a, 0.0, Some(1.0)).unwrap();
        assert_relative_eq!(c.radius, 0.7, epsilon = 1e-8);
        assert_relative_eq!(c.mu.unwrap(), 0.7, epsilon = 1e-8);
    }

    #[test]
    fn unit_disk_curvature_is_one() {
        let a = gallery::crabb(4).unwrap();
        let c = fiedler_curvature(&a, 0.9, None).unwrap();
        assert_relative_eq!(c.radius, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn hermitian_flat_side_reports_infinite_radius() {
        let a = crate::matrix::CMatrix::from_fn(2, |i, j| {
            if i == j {
                C64::new([-3.0, 2.0][i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let c = fiedler_curvature(&a, FRAC_PI_2, None).unwrap();
        assert!(c.radius.is_infinite());
    }

    #[test]
    fn normal_vertex_has_zero_radius() {
        // Normal matrix with a well-separated extreme eigenvalue: the
        // boundary has a corner there.
        let a = crate::matrix::CMatrix::from_fn(3, |i, j| {
            if i == j {
                [C64::new(2.0, 0.1), C64::new(-0.4, 0.8), C64::new(0.0, -1.0)][i]
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let c = fiedler_curvature(&a, 0.0, Some(2.1)).unwrap();
        assert!(c.radius < 1e-10, "corner radius {}", c.radius);
    }

    #[test]
    fn matches_finite_differences_of_boundary_curve() {
        let mut checked = 0;
        let mut seed = 0u64;
        while checked < 20 {
            seed += 1;
            let a = gallery::random_complex(8, 1000 + seed).unwrap();
            let theta = 0.37 * seed as f64 % std::f64::consts::PI;
            let got = match fiedler_curvature(&a, theta, None) {
                Ok(c) if c.radius.is_finite() && c.radius > 1e-6 => c.radius,
                _ => continue,
            };
            let h = 1e-4;
            let z = |t: f64| {
                support_z(&a, t)
            };
            let (zm, z0, zp) = (z(theta - h), z(theta), z(theta + h));
            let d1 = (zp - zm) / C64::new(2.0 * h, 0.0);
            let d2 = (zp - 2.0 * z0 + zm) / C64::new(h * h, 0.0);
            let cross = (d1.conj() * d2).im;
            if cross.abs() < 1e-12 {
                continue;
            }
            let fd = d1.norm().powi(3) / cross.abs();
            assert_relative_eq!(got, fd, max_relative = 1e-4);
            checked += 1;
        }
    }

    fn support_z(a: &crate::matrix::CMatrix, theta: f64) -> C64 {
        let ev = Evaluator::new(a);
        let _ = Which::Max;
        ev.angle(theta, crate::kernel::EigMode::Extremes)
            .unwrap()
            .support_max(a)
            .z
    }
}
