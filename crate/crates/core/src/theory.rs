//! Closed-form cost and convergence-rate results for cutting-plane
//! refinement of disk-like fields of values, recursion simulators for the
//! empirical rate checks, and a brute-force grid oracle.

use crate::error::{Error, Result};
use crate::fov::Evaluator;
use crate::matrix::CMatrix;
use crate::par;

/// Relative error of a regular `j`-gon outer approximation of a disk:
/// `sec(pi / j) - 1`.
pub fn disk_rel_error(j: u64) -> Result<f64> {
    if j < 3 {
        return Err(Error::input("disk_rel_error requires j >= 3"));
    }
    Ok(sec_minus_one(std::f64::consts::PI / j as f64))
}

/// `sec(phi) - 1` computed as `2 sin^2(phi/2) / cos(phi)`, which stays
/// accurate for tiny angles where `1/cos(phi)` rounds to one.
pub fn sec_minus_one(phi: f64) -> f64 {
    let s = (0.5 * phi).sin();
    2.0 * s * s / phi.cos()
}

fn arcsec_one_plus(tau: f64) -> f64 {
    (1.0 / (1.0 + tau)).acos()
}

/// Minimum number of supporting hyperplanes any method needs to certify the
/// radius of a disk matrix to relative tolerance `tau`:
/// `ceil(pi / arcsec(1 + tau))`.
pub fn disk_min_planes(tau: f64) -> Result<u64> {
    if !(tau > 0.0) {
        return Err(Error::input("disk_min_planes requires tau > 0"));
    }
    Ok((std::f64::consts::PI / arcsec_one_plus(tau)).ceil() as u64)
}

/// Hyperplane count for corner-doubling refinement of a regular `j`-gon down
/// to tolerance `tau`: `j * 2^d` with
/// `d = ceil(log2(pi / (j arcsec(1 + tau))))`.
pub fn disk_refined_planes(j: u64, tau: f64) -> Result<u64> {
    if j < 3 {
        return Err(Error::input("disk_refined_planes requires j >= 3"));
    }
    if !(tau > 0.0) {
        return Err(Error::input("disk_refined_planes requires tau > 0"));
    }
    if tau >= disk_rel_error(j)? {
        return Err(Error::input(
            "tolerance already met by the starting polygon; no refinement needed",
        ));
    }
    let d = (std::f64::consts::PI / (j as f64 * arcsec_one_plus(tau)))
        .log2()
        .ceil() as u32;
    Ok(j << d)
}

/// Q-linear rate of the angle sequence under optimal cuts:
/// `2 (1 - sqrt(1 - mu)) / mu - 1` for `mu` in `(0, 1)`.
pub fn optimal_angle_rate(mu: f64) -> f64 {
    2.0 * (1.0 - (1.0 - mu).sqrt()) / mu - 1.0
}

/// The three closed-form Q-linear rates at normalized curvature `mu`.
#[derive(Clone, Debug)]
pub struct RateReport {
    pub mu: f64,
    pub uhlig_angle_rate: f64,
    pub uhlig_modulus_rate: f64,
    pub optimal_angle_rate: f64,
    /// Measured consecutive ratios when filled by a simulation harness.
    pub simulated_ratios: Vec<f64>,
}

pub fn rates(mu: f64) -> Result<RateReport> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::input("rates requires mu in (0, 1)"));
    }
    Ok(RateReport {
        mu,
        uhlig_angle_rate: 0.5 * mu,
        uhlig_modulus_rate: 0.25 * mu * mu,
        optimal_angle_rate: optimal_angle_rate(mu),
        simulated_ratios: Vec::new(),
    })
}

/// Uhlig cut angle recursion `phi_{k+1} = arctan(mu tan(phi_k / 2))`.
/// Returns `phi_0` followed by `k` iterates.
pub fn simulate_uhlig_recursion(mu: f64, phi0: f64, k: usize) -> Result<Vec<f64>> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::input("uhlig recursion requires mu in (0, 1]"));
    }
    if !(phi0 > 0.0 && phi0 < std::f64::consts::PI) {
        return Err(Error::input("uhlig recursion requires phi0 in (0, pi)"));
    }
    let mut out = Vec::with_capacity(k + 1);
    let mut phi = phi0;
    out.push(phi);
    for _ in 0..k {
        phi = (mu * (0.5 * phi).tan()).atan();
        out.push(phi);
    }
    Ok(out)
}

/// Optimal cut angle recursion on the shifted-disk model
/// (`s + r~ e^{i phi}` boundary, `r = s + r~`):
/// `t(phi) = -s sin(phi) + sqrt(s^2 sin^2(phi) + 2 s r~ (1 - cos(phi)))`,
/// `phi_{j+1} = -phi_j + 2 arctan((r~ sin - t cos) / (r~ cos + t sin))`.
/// Returns `phi_0` followed by `k` iterates.
pub fn simulate_optimal_recursion(s: f64, r_tilde: f64, phi0: f64, k: usize) -> Result<Vec<f64>> {
    if !(s > 0.0 && r_tilde > 0.0) {
        return Err(Error::input(
            "optimal recursion requires s > 0 and r_tilde > 0 (mu < 1)",
        ));
    }
    if !(phi0 > 0.0 && phi0 < std::f64::consts::FRAC_PI_2) {
        return Err(Error::input("optimal recursion requires phi0 in (0, pi/2)"));
    }
    let mut out = Vec::with_capacity(k + 1);
    let mut phi = phi0;
    out.push(phi);
    for _ in 0..k {
        let (sin, cos) = phi.sin_cos();
        // 1 - cos(phi) = 2 sin^2(phi/2), stable for small angles.
        let one_minus_cos = 2.0 * (0.5 * phi).sin().powi(2);
        let t = -s * sin + (s * s * sin * sin + 2.0 * s * r_tilde * one_minus_cos).sqrt();
        phi = -phi + 2.0 * ((r_tilde * sin - t * cos) / (r_tilde * cos + t * sin)).atan();
        out.push(phi);
    }
    Ok(out)
}

/// Number of cuts after which a corner of relative modulus `beta` no longer
/// needs refinement at tolerance `tau`, for Q-linear modulus rate
/// `mu^2 / 4`.
pub fn cuts_needed(beta: f64, mu: f64, tau: f64) -> Result<u64> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::input("cuts_needed requires mu in (0, 1]"));
    }
    cuts_needed_with_rate(beta, 0.25 * mu * mu, tau)
}

/// Generalization of [`cuts_needed`] for an arbitrary Q-linear modulus rate:
/// `ceil((log tau - log(beta - 1)) / log(rate))`.
pub fn cuts_needed_with_rate(beta: f64, rate: f64, tau: f64) -> Result<u64> {
    if !(beta > 1.0) {
        return Err(Error::input("cuts_needed requires beta > 1"));
    }
    if !(tau > 0.0) {
        return Err(Error::input("cuts_needed requires tau > 0"));
    }
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::input("cuts_needed requires rate in (0, 1)"));
    }
    if tau >= beta - 1.0 {
        return Ok(0);
    }
    Ok(((tau.ln() - (beta - 1.0).ln()) / rate.ln()).ceil() as u64)
}

#[derive(Clone, Copy, Debug)]
pub struct OracleResult {
    pub r: f64,
    pub theta: f64,
}

/// Evaluates `rho(H(theta))` on `m` uniform angles in `[0, pi)`. Runs the
/// batch in parallel when the `parallel` feature is enabled.
pub fn grid_scan(ev: &Evaluator, m: usize) -> Result<Vec<f64>> {
    let angles: Vec<f64> = (0..m)
        .map(|k| k as f64 * std::f64::consts::PI / m as f64)
        .collect();
    par::map(&angles, |t| ev.rho(t))
        .into_iter()
        .collect()
}

/// Sequential variant of [`grid_scan`], kept callable regardless of features
/// so benchmarks can compare the two paths.
pub fn grid_scan_seq(ev: &Evaluator, m: usize) -> Result<Vec<f64>> {
    let angles: Vec<f64> = (0..m)
        .map(|k| k as f64 * std::f64::consts::PI / m as f64)
        .collect();
    par::map_seq(&angles, |t| ev.rho(t))
        .into_iter()
        .collect()
}

/// Brute-force reference for `r(A)`: a uniform scan of `rho(H(theta))` over
/// `[0, pi)` followed by golden-section refinement around the best cell.
/// The result is a certified lower bound on `r(A)`; with `m >= 720` and deep
/// refinement it serves as the desk-scale reference value.
pub fn grid_oracle(a: &CMatrix, m: usize, refine_iters: usize) -> Result<OracleResult> {
    let ev = Evaluator::new(a);
    grid_oracle_with(&ev, m, refine_iters)
}

/// As [`grid_oracle`], tallying the Hermitian eigen-solves into `ev`'s
/// counters.
pub fn grid_oracle_with(ev: &Evaluator, m: usize, refine_iters: usize) -> Result<OracleResult> {
    if m < 8 {
        return Err(Error::input("grid_oracle requires m >= 8"));
    }
    let values = grid_scan(&ev, m)?;
    let mut best_k = 0usize;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best_k] {
            best_k = k;
        }
    }
    let h = std::f64::consts::PI / m as f64;
    let center = best_k as f64 * h;
    let (mut lo, mut hi) = (center - h, center + h);
    let mut best = (center, values[best_k]);

    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - gr * (hi - lo);
    let mut d = lo + gr * (hi - lo);
    let mut fc = ev.rho(c)?;
    let mut fd = ev.rho(d)?;
    for _ in 0..refine_iters {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = ev.rho(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = ev.rho(d)?;
        }
        let (t, v) = if fc >= fd { (c, fc) } else { (d, fd) };
        if v > best.1 {
            best = (t, v);
        }
    }
    Ok(OracleResult {
        r: best.1,
        theta: best.0.rem_euclid(std::f64::consts::PI),
    })
}
