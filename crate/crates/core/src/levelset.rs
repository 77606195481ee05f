//! The improved level-set method: pencil construction, unimodular-eigenvalue
//! extraction with the argument remap, optimization-boosted updates, and the
//! missing-level-set-point safeguard.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fov::{normalize_angle, Evaluator, TOL_ANGLE};
use crate::kernel::{self, PencilEigenvalues};
use crate::localopt::{maximize_rho, OptOpts};
use crate::matrix::{C64, CMatrix};
use crate::par;

/// Relative deviation of `|lambda|` from one below which a pencil eigenvalue
/// counts as unimodular. Kept loose: the conditioning of coalescing
/// unimodular pairs blows up near convergence, and the safeguard plus the
/// gamma inflation absorb the slack.
pub const TOL_UNI: f64 = 1e-8;

/// Outer iteration cap. Generous: the iteration converges quadratically.
pub const MAX_OUTER: usize = 50;

/// The order-`2n` level-set pencil
/// `R_gamma = [[2 gamma I, -A*], [I, 0]]`, `S = [[A, 0], [0, I]]`.
pub fn build_pencil(a: &CMatrix, gamma: f64) -> (CMatrix, CMatrix) {
    let n = a.n();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let r = CMatrix::from_fn(2 * n, |i, j| {
        if i < n && j < n {
            if i == j {
                C64::new(2.0 * gamma, 0.0)
            } else {
                zero
            }
        } else if i < n {
            -a.get(j - n, i).conj()
        } else if j < n {
            if i - n == j {
                one
            } else {
                zero
            }
        } else {
            zero
        }
    })
    .expect("pencil blocks are finite");
    let s = CMatrix::from_fn(2 * n, |i, j| {
        if i < n && j < n {
            a.get(i, j)
        } else if i >= n && j >= n && i == j {
            one
        } else {
            zero
        }
    })
    .expect("pencil blocks are finite");
    (r, s)
}

/// Argument remap `f : (-pi, pi] -> [0, pi)` folding pencil eigenvalue
/// arguments onto level-set angles of `rho(H(theta))`.
pub fn remap_f(arg: f64) -> f64 {
    if arg == 0.0 || arg == PI || arg == -PI {
        0.0
    } else if arg < 0.0 {
        arg + PI
    } else {
        arg
    }
}

/// Outcome of a level-set query at one `gamma`.
#[derive(Clone, Debug)]
pub enum LevelSet {
    /// Sorted angles in `[0, pi)` where `gamma` is an eigenvalue of
    /// `H(theta)`.
    Angles(Vec<f64>),
    /// The pencil is singular: the field of values is the `gamma`-disk.
    Disk,
}

/// Classified pencil output: the level-set angles plus the raw singularity
/// flag. A flagged pencil is only *suspected* singular; an ill-conditioned
/// eigenvalue can shrink both projected diagonal entries without the field
/// of values being a disk, so callers confirm before acting on it.
#[derive(Clone, Debug)]
pub struct LevelQuery {
    pub angles: Vec<f64>,
    pub singular_suspect: bool,
}

/// Classifies pencil eigenvalues into level-set angles.
pub fn classify_level_set(p: &PencilEigenvalues) -> LevelQuery {
    let mut angles: Vec<f64> = p
        .finite
        .iter()
        .filter(|lam| (lam.norm() - 1.0).abs() <= TOL_UNI)
        .map(|lam| remap_f(lam.arg()))
        .collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    angles.dedup_by(|a, b| (*a - *b).abs() <= TOL_ANGLE);
    LevelQuery {
        angles,
        singular_suspect: p.singular_flag,
    }
}

/// Confirms a suspected disk: `rho(H(theta))` must equal `gamma` at probe
/// angles. Two Hermitian eigen-solves against one wrong disk claim.
fn confirm_disk(ev: &Evaluator, gamma: f64) -> Result<bool> {
    for probe in [0.4_f64, 1.9] {
        let rho = ev.rho(probe)?;
        if (rho - gamma).abs() > 1e-8 * (1.0 + gamma) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Angles in `[0, pi)` where `gamma` is an eigenvalue of `H(theta)`,
/// through one generalized eigen-solve. A singular pencil (confirmed against
/// the objective itself) reports the disk outcome instead.
pub fn unimodular_angles(ev: &Evaluator, gamma: f64) -> Result<LevelSet> {
    if gamma < 0.0 {
        return Err(Error::input("unimodular_angles requires gamma >= 0"));
    }
    let q = classify_level_set(&ev.pencil(gamma)?);
    if q.singular_suspect && confirm_disk(ev, gamma)? {
        return Ok(LevelSet::Disk);
    }
    Ok(LevelSet::Angles(q.angles))
}

#[derive(Clone, Debug)]
pub struct LevelSetOpts {
    pub tol: f64,
    /// Warm-start angles added to the initial candidate set.
    pub seeds: Vec<f64>,
    /// Disable local optimization; pure midpoint (BBBS-like) updates.
    pub bbbs_only: bool,
    pub max_outer: usize,
    pub opt: OptOpts,
    /// Certified lower bound from an earlier phase.
    pub gamma_floor: Option<f64>,
}

impl LevelSetOpts {
    pub fn new(tol: f64) -> Self {
        LevelSetOpts {
            tol,
            seeds: Vec::new(),
            bbbs_only: false,
            max_outer: MAX_OUTER,
            opt: OptOpts::default(),
            gamma_floor: None,
        }
    }
}

/// Per-outer-iteration record for traces.
#[derive(Clone, Debug, serde::Serialize)]
pub struct LevelIterRecord {
    pub iter: usize,
    pub gamma: f64,
    pub angles_found: usize,
    pub candidates: usize,
}

#[derive(Clone, Debug)]
pub struct LevelSetResult {
    /// Final estimate, inflated by `(1 + tol)`.
    pub r: f64,
    /// Best attained `rho(H(theta))`: a certified lower bound.
    pub lower: f64,
    /// Certified upper bound when the final level-set query came back empty.
    pub upper: Option<f64>,
    pub theta_star: f64,
    pub history: Vec<LevelIterRecord>,
    pub eig_h: u64,
    pub pencil: u64,
    pub converged: bool,
    pub disk_detected: bool,
}

/// The improved level-set iteration on `rho(H(theta))`.
pub fn algorithm1(a: &CMatrix, opts: &LevelSetOpts) -> Result<LevelSetResult> {
    let ev = Evaluator::new(a);
    algorithm1_with(&ev, opts)
}

/// As [`algorithm1`], reporting kernel calls into the shared counters of
/// `ev` (the hybrid continues its tally across the switch).
pub fn algorithm1_with(ev: &Evaluator, opts: &LevelSetOpts) -> Result<LevelSetResult> {
    let a = ev.matrix();
    if a.n() < 2 {
        return Err(Error::input("algorithm1 requires n >= 2"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::input("algorithm1 requires tol > 0"));
    }

    let psi = remap_f(kernel::dominant_eig_arg(a)?);
    let mut init: Vec<f64> = opts
        .seeds
        .iter()
        .map(|&t| normalize_angle(t) % PI)
        .chain([0.0, psi])
        .collect();
    init.sort_by(|x, y| x.partial_cmp(y).unwrap());
    init.dedup_by(|x, y| (*x - *y).abs() <= TOL_ANGLE);

    // Candidates carry a cached objective value and, when they came from a
    // level-set interval, the bracketing pair.
    struct Candidate {
        theta: f64,
        rho: f64,
        bracket: Option<(f64, f64)>,
    }
    let rho_batch = |angles: &[f64]| -> Result<Vec<f64>> {
        par::map(angles, |t| ev.rho(t)).into_iter().collect()
    };
    let mut candidates: Vec<Candidate> = {
        let vals = rho_batch(&init)?;
        init.iter()
            .zip(vals)
            .map(|(&theta, rho)| Candidate {
                theta,
                rho,
                bracket: None,
            })
            .collect()
    };

    let mut gamma = f64::NEG_INFINITY;
    let mut gamma_raw = opts.gamma_floor.unwrap_or(0.0);
    let mut theta_star = 0.0f64;
    let mut history = Vec::new();
    let mut converged = false;
    let mut disk_detected = false;

    for iter in 1..=opts.max_outer {
        // theta_BBBS: best cached objective, ties to the smallest angle
        // (candidates are kept sorted by angle).
        let best = candidates
            .iter()
            .max_by(|x, y| x.rho.partial_cmp(&y.rho).unwrap())
            .expect("candidate set is non-empty");
        let (theta_bbbs, rho_bbbs, bracket) = (best.theta, best.rho, best.bracket);

        if opts.bbbs_only {
            if rho_bbbs > gamma_raw {
                gamma_raw = rho_bbbs;
                theta_star = theta_bbbs;
            }
        } else {
            let opt = maximize_rho(ev, theta_bbbs, bracket, opts.opt)?;
            if opt.gamma > gamma_raw {
                gamma_raw = opt.gamma;
                theta_star = opt.theta_star;
            }
        }
        theta_star = theta_star.rem_euclid(PI);
        gamma = gamma_raw * (1.0 + opts.tol);

        let mut angles = match unimodular_angles(ev, gamma)? {
            LevelSet::Disk => {
                // Singular pencil: the field of values is the gamma-disk, so
                // gamma is the radius.
                disk_detected = true;
                converged = true;
                history.push(LevelIterRecord {
                    iter,
                    gamma,
                    angles_found: 0,
                    candidates: 0,
                });
                break;
            }
            LevelSet::Angles(v) => v,
        };

        // Safeguard: rounding can hide the (near-)double unimodular pair at
        // the maximizer itself; re-insert it if missing.
        let missing = angles
            .iter()
            .all(|&t| angular_gap_pi(t, theta_star) > 10.0 * TOL_ANGLE);
        if missing {
            let pos = angles.partition_point(|&t| t < theta_star);
            angles.insert(pos, theta_star);
        }

        let mids: Vec<f64> = angles
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect();
        let vals = rho_batch(&mids)?;
        candidates = mids
            .iter()
            .zip(vals)
            .enumerate()
            .filter(|(_, (_, rho))| *rho > gamma)
            .map(|(k, (&theta, rho))| Candidate {
                theta,
                rho,
                bracket: Some((angles[k], angles[k + 1])),
            })
            .collect();

        history.push(LevelIterRecord {
            iter,
            gamma,
            angles_found: angles.len(),
            candidates: candidates.len(),
        });

        if candidates.is_empty() {
            converged = true;
            break;
        }
    }

    Ok(LevelSetResult {
        r: gamma,
        lower: gamma_raw,
        upper: if converged { Some(gamma) } else { None },
        theta_star,
        history,
        eig_h: ev.counters.eig_h_count(),
        pencil: ev.counters.pencil_count(),
        converged,
        disk_detected,
    })
}

/// Distance between two angles modulo pi.
fn angular_gap_pi(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::theory;
    use approx::assert_relative_eq;

    #[test]
    fn pencil_blocks_are_placed_as_stated() {
        let a = gallery::random_complex(3, 11).unwrap();
        let gamma = 0.7;
        let (r, s) = build_pencil(&a, gamma);
        let n = 3;
        for i in 0..n {
            for j in 0..n {
                assert_eq!(
                    r.get(i, j),
                    if i == j {
                        C64::new(2.0 * gamma, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                );
                assert_eq!(r.get(i, n + j), -a.get(j, i).conj());
                assert_eq!(
                    r.get(n + i, j),
                    if i == j {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                );
                assert_eq!(r.get(n + i, n + j), C64::new(0.0, 0.0));
                assert_eq!(s.get(i, j), a.get(i, j));
                assert_eq!(s.get(i, n + j), C64::new(0.0, 0.0));
                assert_eq!(s.get(n + i, j), C64::new(0.0, 0.0));
                assert_eq!(
                    s.get(n + i, n + j),
                    if i == j {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                );
            }
        }
    }

    #[test]
    fn scalar_pencil_solves_support_equation() {
        // n = 1, A = [a]: unimodular eigenvalues satisfy Re(e^{i theta} a) =
        // gamma.
        let a = CMatrix::from_fn(1, |_, _| C64::new(0.8, 0.6)).unwrap();
        let ev = Evaluator::new(&a);
        match unimodular_angles(&ev, 0.5).unwrap() {
            LevelSet::Angles(angles) => {
                assert!(!angles.is_empty());
                for theta in angles {
                    // rho(H(theta)) for 1x1 is |Re(e^{i theta} a)|.
                    let v = (C64::from_polar(1.0, theta) * C64::new(0.8, 0.6)).re.abs();
                    assert_relative_eq!(v, 0.5, epsilon = 1e-8);
                }
            }
            LevelSet::Disk => panic!("not a disk"),
        }
    }

    #[test]
    fn remap_edges() {
        assert_eq!(remap_f(-std::f64::consts::FRAC_PI_2), std::f64::consts::FRAC_PI_2);
        assert_eq!(remap_f(PI), 0.0);
        assert_eq!(remap_f(0.0), 0.0);
        assert_eq!(remap_f(0.3), 0.3);
        assert_eq!(remap_f(-PI), 0.0);
    }

    #[test]
    fn crabb_level_set_below_radius_is_empty() {
        let a = gallery::crabb(2).unwrap();
        let ev = Evaluator::new(&a);
        match unimodular_angles(&ev, 0.5).unwrap() {
            LevelSet::Angles(angles) => assert!(angles.is_empty()),
            LevelSet::Disk => panic!("0.5-level is not the disk radius"),
        }
    }

    #[test]
    fn level_above_radius_is_empty() {
        let a = gallery::random_complex(8, 21).unwrap();
        let r = theory::grid_oracle(&a, 360, 50).unwrap().r;
        let ev = Evaluator::new(&a);
        match unimodular_angles(&ev, r * 1.01).unwrap() {
            LevelSet::Angles(angles) => assert!(angles.is_empty()),
            LevelSet::Disk => panic!("random matrix is not a disk matrix"),
        }
    }

    #[test]
    fn level_set_is_complete_and_mostly_exact() {
        // Forward direction: every crossing of rho(H(.)) through gamma must
        // appear among the returned angles. (The converse does not hold:
        // with the loose unimodularity tolerance an occasional coincidental
        // eigenvalue slips in; the midpoint filter discards those.)
        let a = gallery::random_complex(9, 57).unwrap();
        let m = 360;
        let ev0 = Evaluator::new(&a);
        let scan = theory::grid_scan(&ev0, m).unwrap();
        let hi = scan.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = scan.iter().cloned().fold(f64::INFINITY, f64::min);
        let gamma = 0.5 * (lo + hi);
        let ev = Evaluator::new(&a);
        let angles = match unimodular_angles(&ev, gamma).unwrap() {
            LevelSet::Angles(v) => v,
            LevelSet::Disk => panic!("random matrix is not a disk matrix"),
        };
        assert!(!angles.is_empty());
        let h = std::f64::consts::PI / m as f64;
        let mut crossings = 0;
        let mut exact = 0;
        for k in 0..m - 1 {
            if (scan[k] - gamma) * (scan[k + 1] - gamma) < 0.0 {
                crossings += 1;
                let cell = (k as f64 * h, (k + 1) as f64 * h);
                assert!(
                    angles.iter().any(|&t| t >= cell.0 - h && t <= cell.1 + h),
                    "no level-set angle near crossing cell {cell:?}"
                );
            }
        }
        assert!(crossings >= 2);
        // Most returned angles are genuine: +-gamma sits in the spectrum of
        // H(theta) there (the remap folds the -H branch into [0, pi)).
        for &theta in &angles {
            let e = kernel::hermitian_eig(&a.h_theta(theta), crate::kernel::EigMode::Full)
                .unwrap();
            let dist = e
                .values
                .iter()
                .map(|l| (l - gamma).abs().min((l + gamma).abs()))
                .fold(f64::INFINITY, f64::min);
            if dist <= 1e-8 * (1.0 + gamma) {
                exact += 1;
            }
        }
        assert!(exact >= crossings, "exact {exact} < crossings {crossings}");
    }

    #[test]
    fn diagonal_level_set_crossings() {
        // diag(-3, 2), gamma = 2.5: rho(H(theta)) = max(3|cos t|, 2|cos t|)
        // crosses 2.5 once in [0, pi) on each flank of the peak at 0.
        let a = CMatrix::from_fn(2, |i, j| {
            if i == j {
                C64::new([-3.0, 2.0][i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let ev = Evaluator::new(&a);
        if let LevelSet::Angles(angles) = unimodular_angles(&ev, 2.5).unwrap() {
            let want = (2.5f64 / 3.0).acos();
            assert_eq!(angles.len(), 2);
            assert_relative_eq!(angles[0], want, epsilon = 1e-8);
            assert_relative_eq!(angles[1], PI - want, epsilon = 1e-8);
        } else {
            panic!("unexpected disk");
        }
    }

    #[test]
    fn algorithm1_on_disk_uses_one_pencil_solve() {
        for n in [2usize, 5, 9] {
            let a = gallery::crabb(n).unwrap();
            let out = algorithm1(&a, &LevelSetOpts::new(1e-12)).unwrap();
            assert!(out.converged);
            assert_eq!(out.pencil, 1, "n = {n}");
            assert_relative_eq!(out.r, 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn algorithm1_on_hermitian_diagonal() {
        let a = CMatrix::from_fn(2, |i, j| {
            if i == j {
                C64::new([-3.0, 2.0][i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let tol = 1e-13;
        let out = algorithm1(&a, &LevelSetOpts::new(tol)).unwrap();
        assert!(out.converged);
        assert_eq!(out.pencil, 1);
        assert_relative_eq!(out.r, 3.0 * (1.0 + tol), max_relative = 1e-13);
    }

    #[test]
    fn algorithm1_matches_oracle_on_random_matrices() {
        for seed in 0..8 {
            let n = 6 + 3 * (seed as usize % 5);
            let a = gallery::random_complex(n, 900 + seed).unwrap();
            let oracle = theory::grid_oracle(&a, 720, 60).unwrap().r;
            let out = algorithm1(&a, &LevelSetOpts::new(1e-14)).unwrap();
            assert!(out.converged, "seed {seed}");
            assert_relative_eq!(out.r, oracle, max_relative = 1e-12);
            assert!(out.lower <= oracle * (1.0 + 1e-13));
            assert!(out.pencil <= 3, "seed {seed}: {} pencil solves", out.pencil);
        }
    }

    #[test]
    fn gamma_history_is_strictly_increasing() {
        let a = gallery::t_mu(24, 0.6, 5).unwrap();
        let out = algorithm1(&a, &LevelSetOpts::new(1e-13)).unwrap();
        for w in out.history.windows(2) {
            assert!(w[1].gamma > w[0].gamma);
        }
        assert!(out.converged);
        assert_relative_eq!(out.r, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn bbbs_only_converges_with_at_least_as_many_pencil_solves() {
        for seed in [3u64, 8] {
            let a = gallery::random_complex(10, seed).unwrap();
            let fast = algorithm1(&a, &LevelSetOpts::new(1e-12)).unwrap();
            let slow = algorithm1(
                &a,
                &LevelSetOpts {
                    bbbs_only: true,
                    ..LevelSetOpts::new(1e-12)
                },
            )
            .unwrap();
            assert!(slow.converged);
            assert_relative_eq!(fast.r, slow.r, max_relative = 1e-11);
            assert!(slow.pencil >= fast.pencil);
        }
    }
}
