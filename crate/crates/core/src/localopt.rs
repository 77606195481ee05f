//! Derivatives of `theta -> rho(H(theta))` and a safeguarded monotone local
//! maximizer. Every Hermitian eigen-solve the maximizer performs is recorded
//! so callers can reuse the support data and reconcile solve counts.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::fov::{AngleEval, Evaluator, SupportPoint, TOL_GAP};
use crate::kernel::EigMode;
use crate::matrix::{C64, CMatrix};

/// Stationarity threshold: `|rho'| <= 1e-14 (1 + gamma)`.
const TOL_STATIONARY: f64 = 1e-14;
/// Step-size floor.
const TOL_STEP: f64 = 1e-15;

#[derive(Clone, Copy, Debug)]
pub struct OptOpts {
    /// Newton steps from the full eigendecomposition; secant on `rho'`
    /// otherwise.
    pub use_newton: bool,
    pub max_iter: usize,
}

impl Default for OptOpts {
    fn default() -> Self {
        OptOpts {
            use_newton: true,
            max_iter: 30,
        }
    }
}

impl OptOpts {
    /// Newton pays off for dense problems up to roughly n = 800; beyond that
    /// the full decomposition per step stops being negligible.
    pub fn for_n(n: usize) -> Self {
        OptOpts {
            use_newton: n <= 800,
            ..Default::default()
        }
    }
}

/// One eigen-solve performed during optimization, with both support points it
/// yields.
#[derive(Clone, Debug)]
pub struct VisitedAngle {
    pub theta: f64,
    pub rho: f64,
    pub support_max: SupportPoint,
    pub support_min_dual: SupportPoint,
}

#[derive(Clone, Debug)]
pub struct OptResult {
    pub theta_star: f64,
    pub gamma: f64,
    pub visited: Vec<VisitedAngle>,
    pub iterations: usize,
    pub converged: bool,
}

/// First derivative of `rho(H(.))` at the angle of `ae`, by perturbation
/// theory for the simple attaining eigenvalue:
/// `rho' = sgn(lambda_j) x_j* H'(theta) x_j = -sgn Im(e^{i theta} x* A x)`.
pub fn rho_first_derivative(a: &CMatrix, ae: &AngleEval) -> Result<f64> {
    let (value, sign) = ae.rho();
    let gap = ae.attaining_gap();
    let scale = ae.eig.spectral_norm().max(value).max(f64::MIN_POSITIVE);
    if gap <= TOL_GAP * scale {
        return Err(Error::DerivativeUndefined {
            theta: ae.theta,
            gap,
        });
    }
    let x = ae.attaining_vector();
    let z = a.quad_form(&x);
    Ok(-(sign as f64) * (C64::from_polar(1.0, ae.theta) * z).im)
}

/// Second derivative of `rho(H(.))`, requiring the full eigendecomposition:
/// `lambda_j'' = x_j* H'' x_j + 2 sum_{k != j} |x_k* H' x_j|^2 / (lambda_j -
/// lambda_k)` with `H'' x_j = -lambda_j x_j`.
pub fn rho_second_derivative(a: &CMatrix, ae: &AngleEval) -> Result<f64> {
    assert!(ae.full, "second derivative needs the full eigendecomposition");
    let (value, sign) = ae.rho();
    let gap = ae.attaining_gap();
    let scale = ae.eig.spectral_norm().max(value).max(f64::MIN_POSITIVE);
    if gap <= TOL_GAP * scale {
        return Err(Error::DerivativeUndefined {
            theta: ae.theta,
            gap,
        });
    }
    let n = ae.eig.values.len();
    let j = if sign == 1 { 0 } else { n - 1 };
    let lambda_j = ae.eig.values[j];
    let xj = ae.eig.vector(j);

    // u = H'(theta) x_j = (i/2) (e^{i theta} A x_j - e^{-i theta} A* x_j).
    let w = C64::from_polar(1.0, ae.theta);
    let ax = a.matvec(&xj);
    let ahx = a.matvec_adjoint(&xj);
    let half_i = C64::new(0.0, 0.5);
    let u: Vec<C64> = (0..xj.len())
        .map(|i| half_i * (w * ax[i] - w.conj() * ahx[i]))
        .collect();

    let mut sum = 0.0f64;
    for k in 0..n {
        if k == j {
            continue;
        }
        let vk = ae.eig.vector(k);
        let mut dot = C64::new(0.0, 0.0);
        for i in 0..vk.len() {
            dot += vk[i].conj() * u[i];
        }
        sum += dot.norm_sqr() / (lambda_j - ae.eig.values[k]);
    }
    Ok((sign as f64) * (-lambda_j + 2.0 * sum))
}

/// Safeguarded Newton (or secant) maximization of `rho(H(theta))` from
/// `theta0`, projected into `bracket` and monotone in the objective. Falls
/// back to bisection steps whenever a model step is unavailable or leaves the
/// bracket, so progress is guaranteed.
pub fn maximize_rho(
    ev: &Evaluator,
    theta0: f64,
    bracket: Option<(f64, f64)>,
    opts: OptOpts,
) -> Result<OptResult> {
    let a = ev.matrix();
    let (mut lo, mut hi) = bracket.unwrap_or((theta0 - FRAC_PI_2, theta0 + FRAC_PI_2));
    if !(lo < hi) {
        return Err(Error::input(format!("empty bracket ({lo}, {hi})")));
    }
    let theta0 = theta0.clamp(lo, hi);
    let mode = if opts.use_newton {
        EigMode::Full
    } else {
        EigMode::Extremes
    };

    let mut visited: Vec<VisitedAngle> = Vec::new();
    let eval = |theta: f64, visited: &mut Vec<VisitedAngle>| -> Result<AngleEval> {
        let ae = ev.angle(theta, mode)?;
        visited.push(VisitedAngle {
            theta,
            rho: ae.rho_value(),
            support_max: ae.support_max(a),
            support_min_dual: ae.support_min_dual(a),
        });
        Ok(ae)
    };

    let mut theta = theta0;
    let mut cur = eval(theta, &mut visited)?;
    let mut gamma = cur.rho_value();
    let mut theta_star = theta;
    let mut converged = false;
    let mut prev_slope: Option<(f64, f64)> = None;
    let mut iterations = 0usize;
    // Objective values are compared with an eps-level slack: near the
    // maximizer the quadratic improvement per Newton step drops below the
    // evaluation noise, and insisting on a measured increase would freeze
    // the iterate several digits short of stationarity.
    let slack = |g: f64| 32.0 * f64::EPSILON * (1.0 + g.abs());

    while iterations < opts.max_iter {
        iterations += 1;
        let d1 = match rho_first_derivative(a, &cur) {
            Ok(d) => d,
            Err(_) => {
                // Non-simple attaining eigenvalue: derivative-free step.
                // rho stays Lipschitz, so plain interval shrinking is safe.
                let mid = 0.5 * (lo + hi);
                if (mid - theta).abs() <= TOL_STEP * (1.0 + theta.abs()) {
                    converged = true;
                    break;
                }
                let cand = eval(mid, &mut visited)?;
                if cand.rho_value() >= gamma - slack(gamma) {
                    theta = mid;
                    theta_star = theta;
                    gamma = gamma.max(cand.rho_value());
                    cur = cand;
                } else if mid < theta {
                    lo = mid;
                } else {
                    hi = mid;
                }
                continue;
            }
        };

        if d1.abs() <= TOL_STATIONARY * (1.0 + gamma) {
            converged = true;
            break;
        }
        if d1 > 0.0 {
            lo = lo.max(theta);
        } else {
            hi = hi.min(theta);
        }

        let model_step = if opts.use_newton {
            match rho_second_derivative(a, &cur) {
                Ok(d2) if d2 < -f64::MIN_POSITIVE => Some(-d1 / d2),
                _ => None,
            }
        } else {
            let s = prev_slope.and_then(|(tp, dp)| {
                let denom = d1 - dp;
                if denom.abs() > 0.0 {
                    Some(-d1 * (theta - tp) / denom)
                } else {
                    None
                }
            });
            s
        };
        prev_slope = Some((theta, d1));

        let proposal = model_step
            .map(|s| theta + s)
            .filter(|t| t.is_finite() && *t > lo && *t < hi && *t != theta)
            .unwrap_or_else(|| 0.5 * (lo + hi));

        // Monotone acceptance with backtracking toward the current iterate.
        let mut t = proposal;
        let mut accepted = None;
        for _ in 0..40 {
            if (t - theta).abs() <= TOL_STEP * (1.0 + theta.abs()) {
                break;
            }
            let cand = eval(t, &mut visited)?;
            if cand.rho_value() >= gamma - slack(gamma) {
                accepted = Some((t, cand));
                break;
            }
            // The failed probe still shrinks the safeguard interval.
            if t < theta {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
            t = 0.5 * (t + theta);
        }

        match accepted {
            Some((t, cand)) => {
                let step = (t - theta).abs();
                theta = t;
                theta_star = theta;
                gamma = gamma.max(cand.rho_value());
                cur = cand;
                if step <= TOL_STEP * (1.0 + theta.abs()) {
                    converged = true;
                    break;
                }
            }
            None => {
                // No acceptable point remains at representable distance.
                converged = true;
                break;
            }
        }
    }

    Ok(OptResult {
        theta_star,
        gamma,
        visited,
        iterations,
        converged,
    })
}
