//! The improved cutting-plane method: Uhlig corner cuts, the optimal-cut
//! construction with quadratic fit checking and curvature estimation, and the
//! outer refinement loop over the boundary polygon.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fov::{
    corner_intersection, normalize_angle, polygon_init, BoundaryPolygon, Evaluator, SupportPoint,
    TOL_ANGLE,
};
use crate::kernel::{self, EigMode};
use crate::localopt::{maximize_rho, OptOpts};
use crate::matrix::{C64, CMatrix};

/// Above this curvature estimate the optimal cut stops paying for itself and
/// Uhlig's cut is used instead.
pub const CROSSOVER_MU: f64 = 0.999961;

/// Relative tangency tolerance for accepting the quadratic boundary model.
pub const FIT_ETA: f64 = 0.1;

/// Default nudge of the modulus-`gamma` point toward the known boundary
/// point, guarding the cut against roundoff.
pub const DEFAULT_DELTA: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackReason {
    /// The neighbor's in-frame support angle is not in `(-pi/2, 0)`.
    FrameAngle,
    /// The neighbor sits (numerically) on the outermost ray.
    DegenerateHeight,
    /// The quadratic is not tangent to the boundary at the neighbor.
    FitRejected,
    /// Estimated curvature is past the Uhlig/optimal crossover.
    Crossover,
    /// No point of modulus `gamma` on the neighbor's supporting line.
    NoModulusPoint,
    /// The tangent-line system has no usable solution.
    ModelInvalid,
    /// The computed cut does not lie strictly between the two supports.
    AngleOutOfRange,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CutKind {
    Uhlig,
    Optimal,
    /// An optimal cut was attempted but rejected; the plan carries Uhlig's
    /// angle and the rejection reason.
    Fallback(FallbackReason),
}

impl CutKind {
    pub fn label(&self) -> String {
        match self {
            CutKind::Uhlig => "uhlig".into(),
            CutKind::Optimal => "optimal".into(),
            CutKind::Fallback(r) => format!("fallback:{}", format!("{r:?}").to_lowercase()),
        }
    }
}

impl Serialize for CutKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// A planned cut: the supporting-hyperplane angle to solve at, plus the
/// model diagnostics when an optimal cut was attempted.
#[derive(Clone, Debug)]
pub struct CutPlan {
    pub kind: CutKind,
    pub theta_cut: f64,
    pub mu_est: Option<f64>,
    pub fit_residual: Option<f64>,
}

/// Uhlig's cut of an outermost corner: the supporting hyperplane at
/// `theta = -Arg(c)`.
pub fn uhlig_cut(c: C64) -> Result<f64> {
    if c.norm() == 0.0 {
        return Err(Error::input("cannot cut a corner at the origin"));
    }
    Ok(normalize_angle(-c.arg()))
}

/// Rigid transform (rotation, then optional conjugation) taking `b_star`
/// onto the positive real axis with the neighbor in the upper half plane.
#[derive(Clone, Copy, Debug)]
pub struct FrameTransform {
    pub rotation: f64,
    pub reflect: bool,
}

impl FrameTransform {
    pub fn forward(&self, z: C64) -> C64 {
        let w = z * C64::from_polar(1.0, self.rotation);
        if self.reflect {
            w.conj()
        } else {
            w
        }
    }

    pub fn inverse(&self, z: C64) -> C64 {
        let w = if self.reflect { z.conj() } else { z };
        w * C64::from_polar(1.0, -self.rotation)
    }

    /// How supporting-hyperplane angles transform under the point map.
    pub fn forward_angle(&self, theta: f64) -> f64 {
        if self.reflect {
            self.rotation - theta
        } else {
            theta - self.rotation
        }
    }

    pub fn inverse_angle(&self, theta: f64) -> f64 {
        if self.reflect {
            self.rotation - theta
        } else {
            theta + self.rotation
        }
    }
}

pub fn normalize_frame(b_star: C64, b_j: C64) -> FrameTransform {
    let rotation = -b_star.arg();
    let rotated = b_j * C64::from_polar(1.0, rotation);
    FrameTransform {
        rotation,
        reflect: rotated.arg() < 0.0,
    }
}

/// Point on the supporting line of `sp` with modulus `gamma`, in the
/// normalized frame (the outermost point on the positive real axis): of the
/// two candidates `e^{-i theta} (lambda +- i sqrt(gamma^2 - lambda^2))`, the
/// one whose argument is closest to zero. `None` when the whole line is
/// farther than `gamma` from the origin.
pub fn point_on_line_with_modulus(sp: &SupportPoint, gamma: f64) -> Option<C64> {
    let disc = gamma * gamma - sp.lambda * sp.lambda;
    if disc < 0.0 {
        return None;
    }
    let t = disc.sqrt();
    let base = C64::from_polar(1.0, -sp.theta);
    let plus = base * C64::new(sp.lambda, t);
    let minus = base * C64::new(sp.lambda, -t);
    if plus.arg().abs() <= minus.arg().abs() {
        Some(plus)
    } else {
        Some(minus)
    }
}

/// Sideways quadratic `q(y) = q2 y^2 + q0` interpolating the boundary at the
/// outermost point `(gamma, 0)` and the framed neighbor `b_j`, with the
/// tangency check and the curvature estimate from its osculating circle.
#[derive(Clone, Copy, Debug)]
pub struct FitQuad {
    pub q2: f64,
    pub q0: f64,
    pub fit_ok: bool,
    pub fit_residual: f64,
    /// `1 / (2 |q2| gamma)`, clamped into `(0, 1]`; `None` when `q2 = 0`
    /// (flat data, infinite-curvature limit).
    pub mu_est: Option<f64>,
}

pub fn fit_quadratic(gamma: f64, b_j_framed: C64, theta_j_framed: f64) -> FitQuad {
    let y = b_j_framed.im;
    let q2 = (b_j_framed.re - gamma) / (y * y);
    let target = theta_j_framed.tan();
    let fit_residual = (2.0 * q2 * y - target).abs();
    let fit_ok = fit_residual <= FIT_ETA * (1.0 + target.abs());
    let mu_est = if q2 == 0.0 {
        None
    } else {
        Some((1.0 / (2.0 * q2.abs() * gamma)).min(1.0))
    };
    FitQuad {
        q2,
        q0: gamma,
        fit_ok,
        fit_residual,
        mu_est,
    }
}

/// Builds the optimal cut of the corner between `b_star` (locally outermost,
/// `|b_star.z| = gamma`) and the adjacent known boundary point `b_j`. Every
/// precondition failure degrades to Uhlig's cut of that corner, tagged with
/// the reason.
pub fn optimal_cut(
    b_star: &SupportPoint,
    b_j: &SupportPoint,
    gamma: f64,
    delta: f64,
) -> Result<CutPlan> {
    Ok(optimal_cut_raw(b_star, b_j, gamma, delta)?.0)
}

/// As [`optimal_cut`], additionally returning the cut angle without the
/// `[0, 2 pi)` reduction. The raw angle stays meaningful below the angular
/// resolution of that interval, which the deep rate-measurement harness
/// needs.
fn optimal_cut_raw(
    b_star: &SupportPoint,
    b_j: &SupportPoint,
    gamma: f64,
    delta: f64,
) -> Result<(CutPlan, f64)> {
    let corner = corner_intersection(b_star, b_j)?;
    let uhlig_raw = -corner.arg();
    let uhlig_theta = uhlig_cut(corner)?;
    let fallback = |reason: FallbackReason, fit: Option<&FitQuad>| {
        (
            CutPlan {
                kind: CutKind::Fallback(reason),
                theta_cut: uhlig_theta,
                mu_est: fit.and_then(|f| f.mu_est),
                fit_residual: fit.map(|f| f.fit_residual),
            },
            uhlig_raw,
        )
    };

    let frame = normalize_frame(b_star.z, b_j.z);
    let theta_j = wrap_pi(frame.forward_angle(b_j.theta));
    if !(theta_j > -FRAC_PI_2 && theta_j < 0.0) {
        return Ok(fallback(FallbackReason::FrameAngle, None));
    }
    let b_jf = frame.forward(b_j.z);
    // Below sqrt(eps)-scale heights the quadratic coefficient is roundoff
    // noise; leave the endgame to Uhlig cuts.
    if b_jf.im <= 1e-7 * gamma.max(1.0) {
        return Ok(fallback(FallbackReason::DegenerateHeight, None));
    }

    let fit = fit_quadratic(gamma, b_jf, theta_j);
    if !fit.fit_ok {
        // The rejected model's curvature estimate is not reported; only its
        // residual is kept for the audit trail.
        let diag = FitQuad {
            mu_est: None,
            ..fit
        };
        return Ok(fallback(FallbackReason::FitRejected, Some(&diag)));
    }
    match fit.mu_est {
        Some(mu) if mu < CROSSOVER_MU => {}
        _ => return Ok(fallback(FallbackReason::Crossover, Some(&fit))),
    }

    let framed_sp = SupportPoint {
        theta: theta_j,
        lambda: b_j.lambda,
        z: b_jf,
        eigvec: None,
    };
    let d0 = match point_on_line_with_modulus(&framed_sp, gamma) {
        Some(d) => d,
        None => return Ok(fallback(FallbackReason::NoModulusPoint, Some(&fit))),
    };
    let d = (1.0 - delta) * d0 + delta * b_jf;

    let disc = d.im * d.im + (fit.q0 - d.re) / fit.q2;
    if !(disc >= 0.0) || d.im <= 0.0 {
        return Ok(fallback(FallbackReason::ModelInvalid, Some(&fit)));
    }
    let y_tilde = d.im - disc.sqrt();
    let a0 = -fit.q2 * y_tilde * y_tilde + fit.q0;
    let a1 = (d.re - a0) / d.im;
    if !a1.is_finite() {
        return Ok(fallback(FallbackReason::ModelInvalid, Some(&fit)));
    }
    let theta_framed = a1.atan();
    if !(theta_framed > theta_j && theta_framed < 0.0) {
        return Ok(fallback(FallbackReason::AngleOutOfRange, Some(&fit)));
    }

    let raw = frame.inverse_angle(theta_framed);
    Ok((
        CutPlan {
            kind: CutKind::Optimal,
            theta_cut: normalize_angle(raw),
            mu_est: fit.mu_est,
            fit_residual: Some(fit.fit_residual),
        },
        raw,
    ))
}

fn wrap_pi(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[derive(Clone, Debug)]
pub struct CutOpts {
    pub tol: f64,
    pub max_cuts: usize,
    /// Insert both the `lambda_max` and dual `lambda_min` supports per
    /// eigen-solve.
    pub dual_cuts: bool,
    /// Disable optimal cuts entirely.
    pub force_uhlig: bool,
    pub delta: f64,
    /// Minimum angular separation between stored cuts. Corners between
    /// closer cuts would be dominated by the `eps * lambda / dtheta`
    /// roundoff of the line intersection and block the certificate from
    /// reaching `tol`; boundary points from such angles still tighten the
    /// lower bound.
    pub min_separation: f64,
    pub opt: OptOpts,
}

impl CutOpts {
    pub fn new(tol: f64, n: usize) -> Self {
        CutOpts {
            tol,
            max_cuts: 10 * n + 10_000,
            dual_cuts: true,
            force_uhlig: false,
            delta: DEFAULT_DELTA,
            min_separation: min_cut_separation(tol),
            opt: OptOpts::for_n(n),
        }
    }
}

/// Separation keeping corner-intersection roundoff an order of magnitude
/// below the requested certificate gap.
pub fn min_cut_separation(tol: f64) -> f64 {
    (10.0 * f64::EPSILON / tol.max(f64::EPSILON).sqrt()).max(4.0 * TOL_ANGLE)
}

/// One executed cut, with the post-cut bounds.
#[derive(Clone, Debug, Serialize)]
pub struct CutRecord {
    pub iter: usize,
    pub kind: CutKind,
    pub theta_cut: f64,
    pub mu_est: Option<f64>,
    pub corner_re: f64,
    pub corner_im: f64,
    pub lower: f64,
    pub upper: f64,
    pub eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepStatus {
    Converged,
    Cut,
    Budget,
}

/// Incremental driver of the cutting iteration; the hybrid controller steps
/// it one cut at a time and inspects the curvature estimates in between.
pub struct CutEngine<'e, 'a> {
    ev: &'e Evaluator<'a>,
    opts: CutOpts,
    poly: BoundaryPolygon,
    log: Vec<CutRecord>,
    cuts_done: usize,
    last_opt_gamma: Option<f64>,
    last_mu_est: Option<f64>,
    stalled: usize,
}

/// Consecutive cuts without any representable change to the polygon before
/// the iteration gives up; the bounds stay certified either way.
const STALL_LIMIT: usize = 8;

impl<'e, 'a> CutEngine<'e, 'a> {
    pub fn new(ev: &'e Evaluator<'a>, opts: CutOpts) -> Result<Self> {
        let a = ev.matrix();
        if a.n() < 2 {
            return Err(Error::input("algorithm2 requires n >= 2"));
        }
        if a.is_zero() {
            return Err(Error::input("algorithm2 requires A != 0"));
        }
        if !(opts.tol > 0.0) {
            return Err(Error::input("algorithm2 requires tol > 0"));
        }
        let psi = kernel::dominant_eig_arg(a)?;
        let poly = polygon_init(ev, psi, opts.dual_cuts)?;
        Ok(CutEngine {
            ev,
            opts,
            poly,
            log: Vec::new(),
            cuts_done: 0,
            last_opt_gamma: None,
            last_mu_est: None,
            stalled: 0,
        })
    }

    pub fn polygon(&self) -> &BoundaryPolygon {
        &self.poly
    }

    pub fn log(&self) -> &[CutRecord] {
        &self.log
    }

    pub fn cuts_done(&self) -> usize {
        self.cuts_done
    }

    pub fn lower(&self) -> f64 {
        self.poly.lower()
    }

    pub fn upper(&self) -> f64 {
        self.poly.upper()
    }

    pub fn eps(&self) -> f64 {
        self.poly.eps()
    }

    /// Curvature estimate from the most recent optimal-cut attempt.
    pub fn last_mu_est(&self) -> Option<f64> {
        self.last_mu_est
    }

    fn insert_support_pair(&mut self, max: SupportPoint, min_dual: SupportPoint) -> Result<()> {
        self.insert_one(max)?;
        if self.opts.dual_cuts {
            self.insert_one(min_dual)?;
        }
        Ok(())
    }

    /// Inserts a supporting hyperplane unless it would sit closer to an
    /// existing cut than the separation floor (duplicates merge as usual);
    /// the boundary point is recorded either way.
    fn insert_one(&mut self, sp: SupportPoint) -> Result<()> {
        let gap = self.poly.nearest_angle_gap(sp.theta);
        if gap <= TOL_ANGLE || gap >= self.opts.min_separation {
            self.poly.insert(sp)?;
        } else {
            self.poly.note_boundary_point(sp.z);
        }
        Ok(())
    }

    /// Local optimization from the supporting angle of the point attaining
    /// the lower bound, bracketed by the arguments of its adjacent corners.
    /// Skipped when the bound has not moved since the last optimization.
    fn optimize_phase(&mut self) -> Result<()> {
        let l = self.poly.lower();
        if let Some(g) = self.last_opt_gamma {
            if l <= g * (1.0 + 10.0 * self.opts.tol) {
                return Ok(());
            }
        }
        let k = self.poly.lower_attainer_idx();
        let theta1 = self.poly.points()[k].theta;
        let (cl, cr) = self.poly.corners_adjacent_to(k);
        let lo_gap = normalize_angle(theta1 - normalize_angle(-cl.arg()));
        let hi_gap = normalize_angle(normalize_angle(-cr.arg()) - theta1);
        let bracket = if lo_gap > TOL_ANGLE && hi_gap > TOL_ANGLE && lo_gap < PI && hi_gap < PI {
            Some((theta1 - lo_gap, theta1 + hi_gap))
        } else {
            None
        };
        if bracket.is_none() {
            // Corner collapsed onto the boundary point; nothing to improve.
            self.last_opt_gamma = Some(l);
            return Ok(());
        }
        let out = maximize_rho(self.ev, theta1, bracket, self.opts.opt)?;
        for v in out.visited {
            self.insert_support_pair(v.support_max, v.support_min_dual)?;
        }
        self.last_opt_gamma = Some(out.gamma.max(self.poly.lower()));
        Ok(())
    }

    fn build_plan(&mut self) -> Result<CutPlan> {
        let (corner, left, right) = self.poly.outermost_corner();
        if self.opts.force_uhlig {
            return Ok(CutPlan {
                kind: CutKind::Uhlig,
                theta_cut: uhlig_cut(corner)?,
                mu_est: None,
                fit_residual: None,
            });
        }
        let b_star = self.poly.lower_attainer();
        let close = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d) <= TOL_ANGLE
        };
        let (plan, neighbor_theta) = if close(left.theta, b_star.theta) {
            (
                optimal_cut(left, right, self.poly.lower(), self.opts.delta)?,
                right.theta,
            )
        } else if close(right.theta, b_star.theta) {
            (
                optimal_cut(right, left, self.poly.lower(), self.opts.delta)?,
                left.theta,
            )
        } else {
            return Ok(CutPlan {
                kind: CutKind::Uhlig,
                theta_cut: uhlig_cut(corner)?,
                mu_est: None,
                fit_residual: None,
            });
        };
        if let Some(mu) = plan.mu_est {
            // The quadratic fit through a point at angular offset phi from
            // the outermost point sees the osculating circle's curvature
            // scaled by (1 + cos(phi)) / 2; undo that bias before the value
            // feeds cost predictions.
            let gap = {
                let d = (neighbor_theta - b_star.theta).rem_euclid(2.0 * PI);
                d.min(2.0 * PI - d)
            };
            let corrected = (2.0 * mu / (1.0 + gap.cos())).clamp(f64::MIN_POSITIVE, 1.0);
            self.last_mu_est = Some(corrected);
        }
        Ok(plan)
    }

    /// One outer iteration: optimize if the lower bound moved, then cut the
    /// outermost corner.
    pub fn step(&mut self) -> Result<StepStatus> {
        if self.poly.eps() <= self.opts.tol {
            return Ok(StepStatus::Converged);
        }
        if self.cuts_done >= self.opts.max_cuts || self.stalled >= STALL_LIMIT {
            return Ok(StepStatus::Budget);
        }

        self.optimize_phase()?;
        if self.poly.eps() <= self.opts.tol {
            return Ok(StepStatus::Converged);
        }

        let (corner, _, _) = self.poly.outermost_corner();
        let plan = self.build_plan()?;
        let before = (self.poly.len(), self.poly.lower(), self.poly.upper());
        let ae = self.ev.angle(plan.theta_cut, EigMode::Extremes)?;
        let a = self.ev.matrix();
        self.insert_support_pair(ae.support_max(a), ae.support_min_dual(a))?;
        if (self.poly.len(), self.poly.lower(), self.poly.upper()) == before {
            self.stalled += 1;
        } else {
            self.stalled = 0;
        }
        self.cuts_done += 1;
        self.log.push(CutRecord {
            iter: self.cuts_done,
            kind: plan.kind,
            theta_cut: plan.theta_cut,
            mu_est: plan.mu_est,
            corner_re: corner.re,
            corner_im: corner.im,
            lower: self.poly.lower(),
            upper: self.poly.upper(),
            eps: self.poly.eps(),
        });
        Ok(StepStatus::Cut)
    }

    /// Runs to convergence or budget.
    pub fn run(&mut self) -> Result<StepStatus> {
        loop {
            match self.step()? {
                StepStatus::Cut => continue,
                done => return Ok(done),
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CutResult {
    /// The certified estimate: the lower bound `l`.
    pub r: f64,
    pub lower: f64,
    pub upper: f64,
    pub eps: f64,
    pub converged: bool,
    pub polygon: BoundaryPolygon,
    pub log: Vec<CutRecord>,
    pub eig_h: u64,
    pub pencil: u64,
}

/// The improved cutting-plane method.
pub fn algorithm2(a: &CMatrix, opts: &CutOpts) -> Result<CutResult> {
    let ev = Evaluator::new(a);
    algorithm2_with(&ev, opts)
}

pub fn algorithm2_with(ev: &Evaluator, opts: &CutOpts) -> Result<CutResult> {
    let mut engine = CutEngine::new(ev, opts.clone())?;
    let status = engine.run()?;
    let CutEngine { poly, log, .. } = engine;
    Ok(CutResult {
        r: poly.lower(),
        lower: poly.lower(),
        upper: poly.upper(),
        eps: poly.eps(),
        converged: status == StepStatus::Converged,
        polygon: poly,
        log,
        eig_h: ev.counters.eig_h_count(),
        pencil: ev.counters.pencil_count(),
    })
}

/// Applies the real cut machinery to exact shifted-disk geometry
/// (`lambda_theta = s cos(theta) + r~`, boundary `s + r~ e^{-i theta}`),
/// returning the angle sequence `phi_k` of the clockwise corners. Used to
/// measure the empirical Q-linear rates of both cut strategies without any
/// eigensolves.
pub fn disk_cut_angles(
    s: f64,
    r_tilde: f64,
    phi0: f64,
    steps: usize,
    optimal: bool,
    delta: f64,
) -> Result<Vec<f64>> {
    if !(r_tilde > 0.0 && s >= 0.0) {
        return Err(Error::input("disk geometry requires r_tilde > 0, s >= 0"));
    }
    if !(phi0 > 0.0 && phi0 < FRAC_PI_2) {
        return Err(Error::input("phi0 must lie in (0, pi/2)"));
    }
    let gamma = s + r_tilde;
    // Raw (unreduced) support angles: the deep iterates sink far below the
    // angular resolution of [0, 2 pi), so everything here stays in a frame
    // where b_star has angle exactly zero.
    let support = |phi: f64| -> SupportPoint {
        let theta = -phi;
        SupportPoint {
            theta,
            lambda: s * theta.cos() + r_tilde,
            z: C64::new(s, 0.0) + C64::from_polar(r_tilde, phi),
            eigvec: None,
        }
    };
    let b_star = support(0.0);
    let mut b_j = support(phi0);
    let mut out = vec![phi0];
    for _ in 0..steps {
        let theta_raw = if optimal {
            let (plan, raw) = optimal_cut_raw(&b_star, &b_j, gamma, delta)?;
            match plan.kind {
                CutKind::Optimal => raw,
                _ => break,
            }
        } else {
            let c = corner_intersection(&b_star, &b_j)?;
            if c.norm() == 0.0 {
                break;
            }
            -c.arg()
        };
        let phi = -theta_raw;
        if !(phi > 0.0 && phi < out.last().copied().unwrap()) {
            break;
        }
        out.push(phi);
        b_j = support(phi);
    }
    Ok(out)
}
