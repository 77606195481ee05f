//! Outer polygonal approximation of the field of values with certified lower
//! and upper bounds on the numerical radius.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::kernel::EigMode;
use crate::matrix::C64;

use super::{corner_intersection, normalize_angle, Evaluator, SupportPoint, TOL_ANGLE};

/// Convex outer polygon `G` (one supporting half plane per stored cut) plus
/// the known boundary points `Z` certifying the lower bound.
///
/// `corners[k]` is the intersection of the supporting lines of `points[k]`
/// and `points[k + 1]` (cyclically).
#[derive(Clone, Debug)]
pub struct BoundaryPolygon {
    points: Vec<SupportPoint>,
    corners: Vec<C64>,
    lower: f64,
    upper: f64,
}

impl BoundaryPolygon {
    /// Builds a polygon from at least three well-spread supporting
    /// hyperplanes. Duplicate angles are merged keeping the larger support
    /// value.
    pub fn from_supports(mut supports: Vec<SupportPoint>) -> Result<Self> {
        for sp in &mut supports {
            sp.theta = normalize_angle(sp.theta);
        }
        supports.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());
        let mut points: Vec<SupportPoint> = Vec::with_capacity(supports.len());
        for sp in supports {
            match points.last_mut() {
                Some(last) if (sp.theta - last.theta).abs() <= TOL_ANGLE => {
                    if sp.lambda > last.lambda {
                        *last = sp;
                    }
                }
                _ => points.push(sp),
            }
        }
        if points.len() < 3 {
            return Err(Error::input(
                "polygon needs at least 3 distinct supporting hyperplanes",
            ));
        }
        // Bounded iff no angular gap reaches pi.
        for k in 0..points.len() {
            let next = points[(k + 1) % points.len()].theta
                + if k + 1 == points.len() { super::TAU } else { 0.0 };
            if next - points[k].theta >= std::f64::consts::PI - 1e-9 {
                return Err(Error::input("polygon unbounded: angular gap >= pi"));
            }
        }
        let corners = full_corners(&points)?;
        let lower = points
            .iter()
            .map(|p| p.z.norm())
            .fold(f64::NEG_INFINITY, f64::max);
        let upper = corners
            .iter()
            .map(|c| c.norm())
            .fold(f64::NEG_INFINITY, f64::max)
            .max(lower);
        Ok(BoundaryPolygon {
            points,
            corners,
            lower,
            upper,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SupportPoint] {
        &self.points
    }

    pub fn corners(&self) -> &[C64] {
        &self.corners
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Relative error estimate `(u - l) / l`.
    pub fn eps(&self) -> f64 {
        (self.upper - self.lower) / self.lower
    }

    /// Inserts a supporting hyperplane, keeping angle order and recomputing
    /// the two adjacent corners. Duplicate angles merge, keeping the larger
    /// (valid under roundoff) support value; the new boundary point still
    /// tightens the lower bound.
    pub fn insert(&mut self, sp: SupportPoint) -> Result<()> {
        let mut sp = sp;
        sp.theta = normalize_angle(sp.theta);
        self.lower = self.lower.max(sp.z.norm());

        let j = self.points.len();
        let pos = self
            .points
            .partition_point(|p| p.theta < sp.theta);
        let before = (pos + j - 1) % j;
        let after = pos % j;

        let dup_at = if (self.points[after].theta - sp.theta).abs() <= TOL_ANGLE
            || (sp.theta - self.points[after].theta).abs() >= super::TAU - TOL_ANGLE
        {
            Some(after)
        } else if (sp.theta - self.points[before].theta).abs() <= TOL_ANGLE
            || (sp.theta - self.points[before].theta).abs() >= super::TAU - TOL_ANGLE
        {
            Some(before)
        } else {
            None
        };

        if let Some(k) = dup_at {
            if sp.lambda > self.points[k].lambda {
                let theta = self.points[k].theta;
                self.points[k] = sp;
                self.points[k].theta = theta;
                self.refresh_corners_around(k)?;
            }
        } else {
            self.points.insert(pos, sp);
            // Corner between (pos-1) and old pos is replaced by two.
            let j = self.points.len();
            let prev = (pos + j - 1) % j;
            let c_prev = corner_intersection(&self.points[prev], &self.points[pos])?;
            let c_new = corner_intersection(&self.points[pos], &self.points[(pos + 1) % j])?;
            if pos == 0 {
                // New first point: previous wrap corner sits at the end.
                let last = self.corners.len() - 1;
                self.corners[last] = c_prev;
                self.corners.insert(0, c_new);
            } else {
                self.corners[pos - 1] = c_prev;
                self.corners.insert(pos, c_new);
            }
        }

        let max_corner = self
            .corners
            .iter()
            .map(|c| c.norm())
            .fold(f64::NEG_INFINITY, f64::max);
        self.upper = self.upper.min(max_corner).max(self.lower);
        Ok(())
    }

    fn refresh_corners_around(&mut self, k: usize) -> Result<()> {
        let j = self.points.len();
        let prev = (k + j - 1) % j;
        self.corners[prev] = corner_intersection(&self.points[prev], &self.points[k])?;
        self.corners[k] = corner_intersection(&self.points[k], &self.points[(k + 1) % j])?;
        Ok(())
    }

    /// Index of the corner attaining the largest modulus; ties go to the
    /// smallest left-support angle, i.e. the first in storage order.
    pub fn outermost_corner_idx(&self) -> usize {
        let mut best = 0usize;
        let mut best_mod = f64::NEG_INFINITY;
        for (k, c) in self.corners.iter().enumerate() {
            let m = c.norm();
            if m > best_mod {
                best_mod = m;
                best = k;
            }
        }
        best
    }

    /// The outermost corner with the two supporting hyperplanes defining it.
    pub fn outermost_corner(&self) -> (C64, &SupportPoint, &SupportPoint) {
        let k = self.outermost_corner_idx();
        (
            self.corners[k],
            &self.points[k],
            &self.points[(k + 1) % self.points.len()],
        )
    }

    /// Index of the boundary point attaining the lower bound; ties go to the
    /// smallest angle.
    pub fn lower_attainer_idx(&self) -> usize {
        let mut best = 0usize;
        let mut best_mod = f64::NEG_INFINITY;
        for (k, p) in self.points.iter().enumerate() {
            let m = p.z.norm();
            if m > best_mod {
                best_mod = m;
                best = k;
            }
        }
        best
    }

    pub fn lower_attainer(&self) -> &SupportPoint {
        &self.points[self.lower_attainer_idx()]
    }

    /// Corners adjacent to the cut at index `k`: left is the corner shared
    /// with the previous cut, right the one shared with the next.
    pub fn corners_adjacent_to(&self, k: usize) -> (C64, C64) {
        let j = self.points.len();
        (self.corners[(k + j - 1) % j], self.corners[k])
    }

    /// Cyclic angular distance from `theta` to the nearest stored cut.
    pub fn nearest_angle_gap(&self, theta: f64) -> f64 {
        let theta = normalize_angle(theta);
        self.points
            .iter()
            .map(|p| {
                let d = (p.theta - theta).rem_euclid(super::TAU);
                d.min(super::TAU - d)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Records a known boundary point without adding a supporting
    /// hyperplane: the lower bound tightens, the polygon stays as is.
    pub fn note_boundary_point(&mut self, z: C64) {
        self.lower = self.lower.max(z.norm());
        self.upper = self.upper.max(self.lower);
    }

    /// True when `z` satisfies every stored half-plane constraint up to
    /// `tol`.
    pub fn contains(&self, z: C64, tol: f64) -> bool {
        self.points.iter().all(|p| p.violation(z) <= tol)
    }

    /// Recomputes every corner from scratch; for validation against the
    /// incrementally maintained cache.
    pub fn full_corner_recompute(&self) -> Result<Vec<C64>> {
        full_corners(&self.points)
    }

    /// CSV export: one row per cut, pairing cut `k` with the corner shared
    /// with cut `k + 1` (cyclically).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,lambda,z_re,z_im,corner_re,corner_im\n");
        for (p, c) in self.points.iter().zip(self.corners.iter()) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                p.theta, p.lambda, p.z.re, p.z.im, c.re, c.im
            );
        }
        out
    }
}

fn full_corners(points: &[SupportPoint]) -> Result<Vec<C64>> {
    let j = points.len();
    (0..j)
        .map(|k| corner_intersection(&points[k], &points[(k + 1) % j]))
        .collect()
}

/// The initial rotated bounding box: four supporting hyperplanes at angles
/// `(l - 1) pi / 2 - psi` for `l = 1..4`. With `dual` set this costs two
/// Hermitian eigen-solves, each yielding a support pair.
pub fn polygon_init(ev: &Evaluator, psi: f64, dual: bool) -> Result<BoundaryPolygon> {
    let a = ev.matrix();
    let mut supports = Vec::with_capacity(4);
    if dual {
        for l in 0..2 {
            let theta = l as f64 * std::f64::consts::FRAC_PI_2 - psi;
            let ae = ev.angle(theta, EigMode::Extremes)?;
            supports.push(ae.support_max(a));
            supports.push(ae.support_min_dual(a));
        }
    } else {
        for l in 0..4 {
            let theta = l as f64 * std::f64::consts::FRAC_PI_2 - psi;
            let ae = ev.angle(theta, EigMode::Extremes)?;
            supports.push(ae.support_max(a));
        }
    }
    BoundaryPolygon::from_supports(supports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::matrix::CMatrix;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn disk_support(theta: f64) -> SupportPoint {
        SupportPoint {
            theta,
            lambda: 1.0,
            z: C64::from_polar(1.0, -theta),
            eigvec: None,
        }
    }

    #[test]
    fn crabb_box_bounds() {
        let a = gallery::crabb(2).unwrap();
        let ev = Evaluator::new(&a);
        let poly = polygon_init(&ev, 0.0, true).unwrap();
        assert_eq!(poly.len(), 4);
        assert_eq!(ev.counters.eig_h_count(), 2);
        assert_relative_eq!(poly.lower(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(poly.upper(), 2f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(poly.eps(), 2f64.sqrt() - 1.0, max_relative = 1e-10);
        for c in poly.corners() {
            assert_relative_eq!(c.re.abs(), 1.0, epsilon = 1e-12);
            assert_relative_eq!(c.im.abs(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn flat_box_of_hermitian_matrix() {
        let a = CMatrix::from_fn(2, |i, j| {
            if i == j {
                C64::new([-3.0, 2.0][i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let ev = Evaluator::new(&a);
        let poly = polygon_init(&ev, 0.0, true).unwrap();
        // Degenerate flat box: lower = upper = 3 up to roundoff.
        assert_relative_eq!(poly.lower(), 3.0, max_relative = 1e-12);
        assert!(poly.eps() < 1e-12);
    }

    #[test]
    fn insert_tightens_disk_box() {
        let mut poly = BoundaryPolygon::from_supports(
            (0..4).map(|l| disk_support(l as f64 * PI / 2.0)).collect(),
        )
        .unwrap();
        let u0 = poly.upper();
        assert_relative_eq!(u0, 2f64.sqrt(), epsilon = 1e-12);
        poly.insert(disk_support(PI / 4.0)).unwrap();
        assert_eq!(poly.len(), 5);
        // Cutting one box corner leaves the other three; u is still sqrt(2).
        assert_relative_eq!(poly.upper(), 2f64.sqrt(), epsilon = 1e-12);
        // The two new corners around theta = pi/4 have modulus sec(pi/8).
        for k in [0usize, 1] {
            let c = poly.corners()[k];
            assert_relative_eq!(c.norm(), 1.0 / (PI / 8.0).cos(), epsilon = 1e-12);
        }
        // Cutting the remaining three box corners drops u to the octagon
        // value.
        for &t in &[3.0 * PI / 4.0, 5.0 * PI / 4.0, 7.0 * PI / 4.0] {
            poly.insert(disk_support(t)).unwrap();
        }
        assert_relative_eq!(poly.upper(), 1.0 / (PI / 8.0).cos(), epsilon = 1e-12);
        assert!(poly.upper() < u0);
    }

    #[test]
    fn duplicate_angle_insert_is_idempotent() {
        let mut poly = BoundaryPolygon::from_supports(
            (0..4).map(|l| disk_support(l as f64 * PI / 2.0)).collect(),
        )
        .unwrap();
        let (l0, u0, j0) = (poly.lower(), poly.upper(), poly.len());
        poly.insert(disk_support(0.0)).unwrap();
        assert_eq!(poly.len(), j0);
        assert_eq!(poly.lower(), l0);
        assert_eq!(poly.upper(), u0);
    }

    #[test]
    fn duplicate_angle_keeps_larger_lambda() {
        let mut poly = BoundaryPolygon::from_supports(
            (0..4).map(|l| disk_support(l as f64 * PI / 2.0)).collect(),
        )
        .unwrap();
        let mut loose = disk_support(0.0);
        loose.lambda = 1.0 + 1e-13;
        poly.insert(loose).unwrap();
        assert_eq!(poly.len(), 4);
        assert!((poly.points()[0].lambda - (1.0 + 1e-13)).abs() < 1e-16);
    }

    #[test]
    fn incremental_corners_match_full_recompute() {
        let mut poly = BoundaryPolygon::from_supports(
            (0..4).map(|l| disk_support(l as f64 * PI / 2.0)).collect(),
        )
        .unwrap();
        for &t in &[5.5, 0.9, 2.4, 4.0, 1.7, 3.3] {
            poly.insert(disk_support(t)).unwrap();
            let full = poly.full_corner_recompute().unwrap();
            for (a, b) in poly.corners().iter().zip(full.iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eps_never_increases_under_insert() {
        let mut poly = BoundaryPolygon::from_supports(
            (0..4).map(|l| disk_support(l as f64 * PI / 2.0)).collect(),
        )
        .unwrap();
        let mut eps = poly.eps();
        let mut t = 0.37f64;
        for _ in 0..40 {
            t = normalize_angle(t + 2.399963);
            poly.insert(disk_support(t)).unwrap();
            let e = poly.eps();
            assert!(e <= eps + 1e-15);
            eps = e;
        }
        assert!(poly.contains(C64::new(0.3, -0.4), 1e-12));
        assert!(!poly.contains(C64::new(1.2, 0.0), 1e-12));
    }

    #[test]
    fn outermost_corner_tie_is_deterministic() {
        let poly = BoundaryPolygon::from_supports(
            (0..4).map(|l| disk_support(l as f64 * PI / 2.0)).collect(),
        )
        .unwrap();
        // All four corners tie at sqrt(2) up to trig roundoff; the pick is
        // deterministic across runs.
        let again = BoundaryPolygon::from_supports(
            (0..4).map(|l| disk_support(l as f64 * PI / 2.0)).collect(),
        )
        .unwrap();
        assert_eq!(poly.outermost_corner_idx(), again.outermost_corner_idx());
        let (c, left, _right) = poly.outermost_corner();
        assert!((0..4).any(|l| (left.theta - l as f64 * PI / 2.0).abs() < 1e-15));
        assert_relative_eq!(c.norm(), 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn unbounded_support_set_rejected() {
        let sps: Vec<SupportPoint> = (0..3)
            .map(|l| disk_support(l as f64 * 0.3))
            .collect();
        assert!(BoundaryPolygon::from_supports(sps).is_err());
    }

    #[test]
    fn csv_export_shape() {
        let poly = BoundaryPolygon::from_supports(
            (0..4).map(|l| disk_support(l as f64 * PI / 2.0)).collect(),
        )
        .unwrap();
        let csv = poly.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "theta,lambda,z_re,z_im,corner_re,corner_im");
        assert_eq!(lines[1].split(',').count(), 6);
    }
}
