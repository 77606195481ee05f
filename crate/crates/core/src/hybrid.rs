//! The hybrid controller: run the cutting-plane method, keep a running
//! prediction of its remaining cost from the curvature estimates and the
//! polygon state, and switch to the warm-started level-set method as soon as
//! cutting is predicted to be the slower path.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cutting::{CutEngine, CutOpts, CutRecord, StepStatus, CROSSOVER_MU};
use crate::error::{Error, Result};
use crate::fov::{BoundaryPolygon, Evaluator};
use crate::kernel;
use crate::levelset::{algorithm1_with, remap_f, LevelSetOpts, LevelSetResult};
use crate::matrix::CMatrix;
use crate::theory;

/// Calibrated per-operation timings used by the switch decision.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CostModel {
    pub n: usize,
    #[serde(rename = "t_eigH_sec")]
    pub t_eig_h_sec: f64,
    #[serde(rename = "t_pencil_sec")]
    pub t_pencil_sec: f64,
}

impl CostModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::input(format!("cost model serialization: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: CostModel = serde_json::from_str(&text)
            .map_err(|e| Error::input(format!("cost model parse: {e}")))?;
        if !(model.t_eig_h_sec > 0.0 && model.t_pencil_sec >= model.t_eig_h_sec) {
            return Err(Error::input(
                "cost model must satisfy t_pencil >= t_eigH > 0",
            ));
        }
        Ok(model)
    }
}

fn trimmed_mean(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let kept: &[f64] = if samples.len() >= 3 {
        &samples[1..samples.len() - 1]
    } else {
        &samples
    };
    kept.iter().sum::<f64>() / kept.len() as f64
}

/// Times the two kernels on seeded random order-`n` inputs (the pencil has
/// order `2n`) and returns trimmed means. The pencil time is floored at the
/// Hermitian time so the model invariant holds even in timing noise.
pub fn calibrate(n: usize, samples: usize) -> Result<CostModel> {
    if samples < 3 {
        return Err(Error::input("calibrate requires samples >= 3"));
    }
    if n < 2 {
        return Err(Error::input("calibrate requires n >= 2"));
    }
    let a = crate::gallery::random_complex(n, 0xC0575)?;
    let h = a.h_theta(0.4);
    let (r, s) = crate::levelset::build_pencil(&a, 1.0);

    let mut t_eig = Vec::with_capacity(samples);
    let mut t_pen = Vec::with_capacity(samples);
    for _ in 0..samples {
        let t0 = Instant::now();
        let _ = kernel::hermitian_eig(&h, kernel::EigMode::Full)?;
        t_eig.push(t0.elapsed().as_secs_f64());

        let t0 = Instant::now();
        let _ = kernel::pencil_eig(&r, &s)?;
        t_pen.push(t0.elapsed().as_secs_f64());
    }
    let t_eig_h_sec = trimmed_mean(t_eig).max(1e-9);
    let t_pencil_sec = trimmed_mean(t_pen).max(t_eig_h_sec);
    Ok(CostModel {
        n,
        t_eig_h_sec,
        t_pencil_sec,
    })
}

/// Cost prediction for one locally-outermost region of the polygon.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RegionEstimate {
    pub theta_left: f64,
    pub theta_right: f64,
    pub mu_eff: f64,
    pub beta: f64,
    pub predicted_cuts: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SwitchDecision {
    pub continue_cutting: bool,
    pub predicted_cut_cost: f64,
    pub predicted_levelset_cost: f64,
    pub per_region: Vec<RegionEstimate>,
}

/// Predicts the remaining cutting cost region by region and compares it with
/// a fixed level-set cost surrogate (`1.5 t_pencil + 10 t_eigH`, the typical
/// one-pencil-plus-a-few-eigs profile).
///
/// Corners with modulus above `l (1 + tol)` are grouped into contiguous runs;
/// each run is one region with `beta = max |corner| / l`. While optimal cuts
/// are active (`mu_eff` below the crossover) the per-region cut count uses
/// the optimal-cut angle rate squared as the modulus rate (modulus error
/// contracts at the squared angle rate), with `mu_eff = 1` before any
/// estimate exists. Past the crossover the corner sequence stops contracting
/// usefully and the estimate falls back to the supporting-hyperplane density
/// a disk-like arc needs: `span / (2 arcsec(1 + tol))` planes.
pub fn estimate_remaining(
    poly: &BoundaryPolygon,
    mu_est: Option<f64>,
    model: &CostModel,
    tol: f64,
) -> SwitchDecision {
    let l = poly.lower();
    let threshold = l * (1.0 + tol);
    let mu_eff = mu_est.unwrap_or(1.0).clamp(1e-12, 1.0);
    let optimal_active = mu_eff < CROSSOVER_MU;
    let rate = if optimal_active {
        let ar = theory::optimal_angle_rate(mu_eff);
        (ar * ar).clamp(f64::MIN_POSITIVE, 1.0 - 1e-12)
    } else {
        0.25 * mu_eff * mu_eff
    };
    let arc_plane_spacing = 2.0 * (1.0 / (1.0 + tol)).acos() / mu_eff.sqrt();

    let corners = poly.corners();
    let j = corners.len();
    let hot: Vec<bool> = corners.iter().map(|c| c.norm() > threshold).collect();
    let mut per_region = Vec::new();
    if hot.iter().any(|&h| h) {
        // Contiguous runs of hot corners, cyclically; start scanning at a
        // cold index when one exists.
        let start = hot.iter().position(|&h| !h).unwrap_or(0);
        let mut k = 0usize;
        while k < j {
            let idx = (start + k) % j;
            if !hot[idx] {
                k += 1;
                continue;
            }
            let begin = idx;
            let mut u_region = corners[idx].norm();
            let mut len = 1usize;
            while len < j && hot[(begin + len) % j] {
                u_region = u_region.max(corners[(begin + len) % j].norm());
                len += 1;
            }
            let end = (begin + len - 1) % j;
            let beta = u_region / l;
            let theta_left = poly.points()[begin].theta;
            let theta_right = poly.points()[(end + 1) % j].theta;
            let predicted_cuts = if beta <= 1.0 + tol {
                0
            } else if optimal_active {
                theory::cuts_needed_with_rate(beta, rate, tol).unwrap_or(u64::MAX)
            } else {
                let span = (theta_right - theta_left).rem_euclid(2.0 * std::f64::consts::PI);
                let span = if span == 0.0 && len == j {
                    2.0 * std::f64::consts::PI
                } else {
                    span
                };
                (span / arc_plane_spacing).ceil() as u64
            };
            per_region.push(RegionEstimate {
                theta_left,
                theta_right,
                mu_eff,
                beta,
                predicted_cuts,
            });
            k += len;
        }
    }

    let predicted_cut_cost = per_region
        .iter()
        .map(|r| r.predicted_cuts as f64)
        .sum::<f64>()
        * model.t_eig_h_sec;
    let predicted_levelset_cost = 1.5 * model.t_pencil_sec + 10.0 * model.t_eig_h_sec;
    SwitchDecision {
        continue_cutting: predicted_cut_cost <= predicted_levelset_cost,
        predicted_cut_cost,
        predicted_levelset_cost,
        per_region,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SwitchEvent {
    pub after_cuts: usize,
    pub eps_at_switch: f64,
    pub predicted_cut_cost: f64,
    pub predicted_levelset_cost: f64,
    pub regions: usize,
    /// Seed angles handed to the level-set phase.
    pub seeds: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct HybridResult {
    pub r: f64,
    pub lower: f64,
    pub upper: Option<f64>,
    pub converged: bool,
    pub cut_log: Vec<CutRecord>,
    pub polygon: BoundaryPolygon,
    pub switch_event: Option<SwitchEvent>,
    pub level: Option<LevelSetResult>,
    pub eig_h: u64,
    pub pencil: u64,
    pub model: CostModel,
}

#[derive(Clone, Debug)]
pub struct HybridOpts {
    pub tol: f64,
    pub cut: CutOpts,
    pub model: Option<CostModel>,
    pub calibration_samples: usize,
}

impl HybridOpts {
    pub fn new(tol: f64, n: usize) -> Self {
        HybridOpts {
            tol,
            cut: CutOpts::new(tol, n),
            model: None,
            calibration_samples: 3,
        }
    }
}

/// Runs the cutting engine with a switch check after each cut that produced
/// a curvature estimate (at most one check per cut); on switch, finishes
/// with the level-set method seeded from the supporting angle of the point
/// attaining `l` and the arguments of its adjacent corners.
pub fn hybrid_solve(a: &CMatrix, opts: &HybridOpts) -> Result<HybridResult> {
    let ev = Evaluator::new(a);
    let model = match opts.model {
        Some(m) => m,
        None => calibrate(a.n(), opts.calibration_samples)?,
    };
    let mut engine = CutEngine::new(&ev, opts.cut.clone())?;

    let mut switch_reason: Option<SwitchDecision> = None;
    let finished = loop {
        match engine.step()? {
            StepStatus::Converged => break true,
            StepStatus::Budget => break false,
            StepStatus::Cut => {
                if let Some(mu) = engine.last_mu_est() {
                    let dec = estimate_remaining(engine.polygon(), Some(mu), &model, opts.tol);
                    if !dec.continue_cutting {
                        switch_reason = Some(dec);
                        break false;
                    }
                }
            }
        }
    };

    if finished {
        let eps = engine.eps();
        return Ok(HybridResult {
            r: engine.lower(),
            lower: engine.lower(),
            upper: Some(engine.upper()),
            converged: eps <= opts.tol,
            cut_log: engine.log().to_vec(),
            polygon: engine.polygon().clone(),
            switch_event: None,
            level: None,
            eig_h: ev.counters.eig_h_count(),
            pencil: ev.counters.pencil_count(),
            model,
        });
    }

    // Switch: warm-start the level-set phase from the bound-attaining
    // support angle and the arguments of the corners on either side of it.
    let poly = engine.polygon();
    let k = poly.lower_attainer_idx();
    let theta1 = poly.points()[k].theta;
    let (cl, cr) = poly.corners_adjacent_to(k);
    let seeds = vec![
        theta1.rem_euclid(std::f64::consts::PI),
        remap_f(wrap_pi_interval(-cl.arg())),
        remap_f(wrap_pi_interval(-cr.arg())),
    ];
    let decision = switch_reason.unwrap_or_else(|| {
        // Budget exhausted without a curvature estimate; switch anyway.
        estimate_remaining(poly, engine.last_mu_est(), &model, opts.tol)
    });
    let switch_event = SwitchEvent {
        after_cuts: engine.cuts_done(),
        eps_at_switch: engine.eps(),
        predicted_cut_cost: decision.predicted_cut_cost,
        predicted_levelset_cost: decision.predicted_levelset_cost,
        regions: decision.per_region.len(),
        seeds: seeds.clone(),
    };

    let level_opts = LevelSetOpts {
        seeds,
        gamma_floor: Some(engine.lower()),
        ..LevelSetOpts::new(opts.tol)
    };
    let level = algorithm1_with(&ev, &level_opts)?;

    let lower = engine.lower().max(level.lower);
    Ok(HybridResult {
        r: level.r,
        lower,
        upper: level.upper,
        converged: level.converged,
        cut_log: engine.log().to_vec(),
        polygon: engine.polygon().clone(),
        switch_event: Some(switch_event),
        level: Some(level),
        eig_h: ev.counters.eig_h_count(),
        pencil: ev.counters.pencil_count(),
        model,
    })
}

/// Maps any angle into `(-pi, pi]` for the remap.
fn wrap_pi_interval(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * std::f64::consts::PI);
    if t > std::f64::consts::PI {
        t -= 2.0 * std::f64::consts::PI;
    }
    t
}
