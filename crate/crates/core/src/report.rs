//! Canonical solve reports and the CSV trace writers.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cutting::{CutRecord, CutResult};
use crate::hybrid::{HybridResult, SwitchEvent};
use crate::levelset::{LevelIterRecord, LevelSetResult};
use crate::theory::OracleResult;

/// Result record mirroring the per-method cost tables: estimate, certified
/// bounds, kernel-call counts, and the cut/switch logs.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub method: String,
    pub r: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub rel_err: Option<f64>,
    #[serde(rename = "eigH_count")]
    pub eig_h_count: u64,
    pub pencil_count: u64,
    pub cuts: Option<Vec<CutRecord>>,
    pub switch_event: Option<SwitchEvent>,
    pub wall_seconds: f64,
    pub tol: f64,
    pub converged: bool,
    pub notes: Vec<String>,
}

fn rel_err(lower: Option<f64>, upper: Option<f64>) -> Option<f64> {
    match (lower, upper) {
        (Some(l), Some(u)) if l > 0.0 => Some((u - l) / l),
        _ => None,
    }
}

impl SolveReport {
    pub fn from_levelset(res: &LevelSetResult, tol: f64, wall_seconds: f64) -> Self {
        let mut notes = Vec::new();
        if res.disk_detected {
            notes.push(format!(
                "disk detected: the field of values is the disk of radius {:.17e}",
                res.r
            ));
        }
        SolveReport {
            method: "levelset".into(),
            r: res.r,
            lower: Some(res.lower),
            upper: res.upper,
            rel_err: rel_err(Some(res.lower), res.upper),
            eig_h_count: res.eig_h,
            pencil_count: res.pencil,
            cuts: None,
            switch_event: None,
            wall_seconds,
            tol,
            converged: res.converged,
            notes,
        }
    }

    pub fn from_cutting(res: &CutResult, tol: f64, wall_seconds: f64) -> Self {
        let mut notes = Vec::new();
        if !res.converged {
            notes.push(format!(
                "cut budget exhausted at eps = {:.3e}; bounds remain certified",
                res.eps
            ));
        }
        SolveReport {
            method: "cutting".into(),
            r: res.r,
            lower: Some(res.lower),
            upper: Some(res.upper),
            rel_err: rel_err(Some(res.lower), Some(res.upper)),
            eig_h_count: res.eig_h,
            pencil_count: res.pencil,
            cuts: Some(res.log.clone()),
            switch_event: None,
            wall_seconds,
            tol,
            converged: res.converged,
            notes,
        }
    }

    pub fn from_hybrid(res: &HybridResult, tol: f64, wall_seconds: f64) -> Self {
        let mut notes = Vec::new();
        if let Some(level) = &res.level {
            if level.disk_detected {
                notes.push("disk detected during the level-set phase".into());
            }
        }
        SolveReport {
            method: "hybrid".into(),
            r: res.r,
            lower: Some(res.lower),
            upper: res.upper,
            rel_err: rel_err(Some(res.lower), res.upper),
            eig_h_count: res.eig_h,
            pencil_count: res.pencil,
            cuts: Some(res.cut_log.clone()),
            switch_event: res.switch_event.clone(),
            wall_seconds,
            tol,
            converged: res.converged,
            notes,
        }
    }

    pub fn from_oracle(res: &OracleResult, eig_h: u64, tol: f64, wall_seconds: f64) -> Self {
        SolveReport {
            method: "oracle".into(),
            r: res.r,
            lower: Some(res.r),
            upper: None,
            rel_err: None,
            eig_h_count: eig_h,
            pencil_count: 0,
            cuts: None,
            switch_event: None,
            wall_seconds,
            tol,
            converged: true,
            notes: vec![format!("grid maximizer near theta = {:.12}", res.theta)],
        }
    }

    /// Exact 1x1 case handled without any solver machinery.
    pub fn scalar(method: &str, r: f64, tol: f64) -> Self {
        SolveReport {
            method: method.into(),
            r,
            lower: Some(r),
            upper: Some(r),
            rel_err: Some(0.0),
            eig_h_count: 0,
            pencil_count: 0,
            cuts: None,
            switch_event: None,
            wall_seconds: 0.0,
            tol,
            converged: true,
            notes: vec!["1x1 input: r = |a11|".into()],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Cut log as CSV: `iter,kind,theta_cut,mu_est,l,u,eps`.
pub fn cut_log_csv(log: &[CutRecord]) -> String {
    let mut out = String::from("iter,kind,theta_cut,mu_est,l,u,eps\n");
    for rec in log {
        let mu = rec.mu_est.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            rec.iter,
            rec.kind.label(),
            rec.theta_cut,
            mu,
            rec.lower,
            rec.upper,
            rec.eps
        );
    }
    out
}

/// Level-set trace as CSV: `iter,gamma,angles_found,candidates`.
pub fn level_trace_csv(history: &[LevelIterRecord]) -> String {
    let mut out = String::from("iter,gamma,angles_found,candidates\n");
    for rec in history {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            rec.iter, rec.gamma, rec.angles_found, rec.candidates
        );
    }
    out
}
