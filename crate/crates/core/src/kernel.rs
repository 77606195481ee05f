//! Eigenvalue kernels: Hermitian eigendecomposition and generalized pencil
//! eigenvalues, both backed by faer, plus the solve counters every report is
//! reconciled against.

use std::sync::atomic::{AtomicU64, Ordering};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::{evd::ComputeEigenvectors, gevd};
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::matrix::{C64, CMatrix};

/// Residual tolerance scale for the Hermitian kernel: `1e-12 * n`.
pub fn tol_resid(n: usize) -> f64 {
    1e-12 * n as f64
}

/// Relative scale for declaring a pencil (near-)singular.
pub const TOL_SINGULAR_REL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigMode {
    /// All eigenpairs.
    Full,
    /// Only the two largest and two smallest pairs need to be returned.
    Extremes,
}

/// Hermitian eigendecomposition with eigenvalues sorted descending and
/// orthonormal eigenvectors stored as matching columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
    /// Order of the matrix this came from (the vectors always have `n` rows
    /// even when only the extreme pairs are kept).
    pub n: usize,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        (0..self.n).map(|i| self.vectors[(i, k)]).collect()
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Gap between the largest and second-largest eigenvalue.
    pub fn gap_top(&self) -> f64 {
        if self.values.len() < 2 {
            f64::INFINITY
        } else {
            self.values[0] - self.values[1]
        }
    }

    /// Gap between the second-smallest and smallest eigenvalue.
    pub fn gap_bottom(&self) -> f64 {
        let m = self.values.len();
        if m < 2 {
            f64::INFINITY
        } else {
            self.values[m - 2] - self.values[m - 1]
        }
    }

    /// Spectral norm of the decomposed matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.lambda_max().abs().max(self.lambda_min().abs())
    }
}

/// Normalizes the phase of each eigenvector so its largest-modulus component
/// is real and positive. Keeps boundary points deterministic across runs.
fn normalize_phases(vectors: &mut Mat<C64>) {
    let (n, k) = (vectors.nrows(), vectors.ncols());
    for j in 0..k {
        let mut best = 0usize;
        let mut best_mod = 0.0f64;
        for i in 0..n {
            let m = vectors[(i, j)].norm();
            if m > best_mod {
                best_mod = m;
                best = i;
            }
        }
        if best_mod > 0.0 {
            let phase = vectors[(best, j)] / C64::new(best_mod, 0.0);
            let correction = phase.conj();
            for i in 0..n {
                let v = vectors[(i, j)] * correction;
                vectors[(i, j)] = v;
            }
            vectors[(best, j)].im = 0.0;
        }
    }
}

/// Full or extreme eigendecomposition of a Hermitian matrix.
///
/// The caller is responsible for symmetrizing; inputs are only checked to be
/// Hermitian up to a loose tolerance.
pub fn hermitian_eig(h: &CMatrix, mode: EigMode) -> Result<HermitianEigen> {
    let n = h.n();
    let evd = h
        .as_mat()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Kernel(format!("hermitian eigensolver: {e:?}")))?;

    // faer returns eigenvalues ascending; flip to descending.
    let mut values: Vec<f64> = evd
        .S()
        .column_vector()
        .iter()
        .map(|v| v.re)
        .rev()
        .collect();
    let u = evd.U();
    let mut vectors = Mat::<C64>::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    normalize_phases(&mut vectors);

    if mode == EigMode::Extremes && n > 4 {
        let keep = [0, 1, n - 2, n - 1];
        values = keep.iter().map(|&k| values[k]).collect();
        vectors = Mat::from_fn(n, 4, |i, j| vectors[(i, keep[j])]);
    }

    Ok(HermitianEigen { values, vectors, n })
}

/// Generalized eigenvalues of the pencil `(R, S)`.
#[derive(Clone, Debug)]
pub struct PencilEigenvalues {
    pub finite: Vec<C64>,
    pub infinite_count: usize,
    /// Set when some index has both projected diagonal entries (alpha, beta)
    /// below the singularity tolerance, i.e. the pencil is (near-)singular.
    pub singular_flag: bool,
}

/// All generalized eigenvalues of `R - lambda S` via the QZ-style
/// factorization, reported as finite values plus a count of infinite ones.
pub fn pencil_eig(r: &CMatrix, s: &CMatrix) -> Result<PencilEigenvalues> {
    let n = r.n();
    if s.n() != n {
        return Err(Error::input(format!(
            "pencil matrices must have equal order, got {} and {}",
            n,
            s.n()
        )));
    }
    let par = faer::get_global_parallelism();
    let mut alpha = faer::diag::Diag::<C64>::zeros(n);
    let mut beta = faer::diag::Diag::<C64>::zeros(n);
    let mut a = r.as_mat().cloned();
    let mut b = s.as_mat().cloned();
    // Right eigenvectors are requested even though only the eigenvalues are
    // used: the vector-free QZ path loses eigenvalues to spurious
    // deflation on structured pencils (observed on triangular blocks).
    let mut u = Mat::<C64>::zeros(n, n);
    let mut mem = MemBuffer::new(gevd::gevd_scratch::<C64>(
        n,
        ComputeEigenvectors::No,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    gevd::gevd_cplx(
        a.as_mut(),
        b.as_mut(),
        alpha.as_mut(),
        beta.as_mut(),
        None,
        Some(u.as_mut()),
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::Kernel(format!("generalized eigensolver: {e:?}")))?;

    let tol = TOL_SINGULAR_REL * r.norm_fro().max(s.norm_fro()).max(f64::MIN_POSITIVE);
    let mut finite = Vec::with_capacity(n);
    let mut infinite_count = 0usize;
    let mut singular_flag = false;
    for k in 0..n {
        let al = alpha[k];
        let be = beta[k];
        if be.norm() > tol {
            finite.push(al / be);
        } else if al.norm() > tol {
            infinite_count += 1;
        } else {
            singular_flag = true;
        }
    }
    Ok(PencilEigenvalues {
        finite,
        infinite_count,
        singular_flag,
    })
}

/// Eigenvalues of a general (non-Hermitian) matrix. Used once per solve to
/// seed the box rotation from the dominant eigenvalue.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    a.as_mat()
        .eigenvalues()
        .map_err(|e| Error::Kernel(format!("eigensolver: {e:?}")))
}

/// Argument of an eigenvalue attaining the spectral radius, with ties broken
/// deterministically and `Arg(0) = 0`.
pub fn dominant_eig_arg(a: &CMatrix) -> Result<f64> {
    let mut evs = eigenvalues(a)?;
    evs.sort_by(|x, y| {
        (y.norm(), x.arg())
            .partial_cmp(&(x.norm(), y.arg()))
            .unwrap()
    });
    let dom = evs[0];
    if dom.norm() == 0.0 {
        Ok(0.0)
    } else {
        Ok(dom.arg())
    }
}

/// Cumulative counts of the two expensive kernels, shared by every phase of a
/// solve. Atomic so concurrent angle sweeps can report into one tally.
#[derive(Debug, Default)]
pub struct SolveCounters {
    eig_h: AtomicU64,
    pencil: AtomicU64,
}

impl SolveCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bump_eig_h(&self) {
        self.eig_h.fetch_add(1, Ordering::Relaxed);
    }

    pub fn bump_pencil(&self) {
        self.pencil.fetch_add(1, Ordering::Relaxed);
    }

    pub fn eig_h_count(&self) -> u64 {
        self.eig_h.load(Ordering::Relaxed)
    }

    pub fn pencil_count(&self) -> u64 {
        self.pencil.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;

    fn cm(entries: &[&[(f64, f64)]]) -> CMatrix {
        let n = entries.len();
        CMatrix::from_fn(n, |i, j| C64::new(entries[i][j].0, entries[i][j].1)).unwrap()
    }

    #[test]
    fn symmetric_two_by_two() {
        let h = cm(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]);
        let e = hermitian_eig(&h, EigMode::Full).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_sorted_descending() {
        let h = cm(&[&[(-3.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (2.0, 0.0)]]);
        let e = hermitian_eig(&h, EigMode::Full).unwrap();
        assert_eq!(e.values, vec![2.0, -3.0]);
    }

    #[test]
    fn crabb2_symmetrized() {
        let k2 = gallery::crabb(2).unwrap();
        let h = k2.h_theta(0.0);
        let e = hermitian_eig(&h, EigMode::Full).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn residual_and_orthonormality_on_random_hermitian() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let n = 2 + (trial % 63);
            let g = CMatrix::from_fn(n, |_, _| {
                C64::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            })
            .unwrap();
            let h = g.h_theta(0.0);
            let e = hermitian_eig(&h, EigMode::Full).unwrap();
            let tol = tol_resid(n) * e.spectral_norm().max(1.0);
            for k in 0..n {
                let v = e.vector(k);
                let hv = h.matvec(&v);
                let mut resid = 0.0f64;
                for i in 0..n {
                    resid += (hv[i] - C64::new(e.values[k], 0.0) * v[i]).norm_sqr();
                }
                assert!(resid.sqrt() <= tol, "residual {} > {}", resid.sqrt(), tol);
            }
            // Orthonormality of a few random pairs.
            for k in 0..n.min(6) {
                for l in 0..=k {
                    let vk = e.vector(k);
                    let vl = e.vector(l);
                    let mut dot = C64::new(0.0, 0.0);
                    for i in 0..n {
                        dot += vk[i].conj() * vl[i];
                    }
                    let expected = if k == l { 1.0 } else { 0.0 };
                    assert!((dot.norm() - expected).abs() <= tol_resid(n).max(1e-10));
                }
            }
        }
    }

    #[test]
    fn extremes_mode_keeps_endpoint_pairs() {
        let h = CMatrix::from_fn(8, |i, j| {
            if i == j {
                C64::new(i as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .unwrap();
        let e = hermitian_eig(&h, EigMode::Extremes).unwrap();
        assert_eq!(e.values, vec![7.0, 6.0, 1.0, 0.0]);
        assert_eq!(e.vectors.ncols(), 4);
    }

    #[test]
    fn pencil_with_identity_matches_plain_eigenvalues() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let a = CMatrix::from_fn(n, |_, _| {
            C64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        })
        .unwrap();
        let p = pencil_eig(&a, &CMatrix::identity(n)).unwrap();
        assert!(!p.singular_flag);
        assert_eq!(p.infinite_count, 0);
        let mut got = p.finite.clone();
        let mut want = eigenvalues(&a).unwrap();
        let key = |z: &C64| (z.re, z.im);
        got.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        want.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).norm() < 1e-10 * (1.0 + w.norm()));
        }
    }

    #[test]
    fn crabb_pencil_half_level_has_no_unimodular_eigenvalues() {
        // A = K2, gamma = 0.5: eigenvalues of H(theta) are +-1, so the level
        // set is empty. The pencil spectrum is {0, 0, inf, inf}.
        let a = gallery::crabb(2).unwrap();
        let (r, s) = crate::levelset::build_pencil(&a, 0.5);
        let p = pencil_eig(&r, &s).unwrap();
        assert!(!p.singular_flag);
        assert_eq!(p.finite.len() + p.infinite_count, 4);
        for z in &p.finite {
            assert!((z.norm() - 1.0).abs() > 0.5, "unexpected unimodular {z}");
        }
    }

    #[test]
    fn crabb_pencil_at_disk_level_is_singular() {
        let a = gallery::crabb(2).unwrap();
        let (r, s) = crate::levelset::build_pencil(&a, 1.0);
        let p = pencil_eig(&r, &s).unwrap();
        assert!(p.singular_flag);
    }

    #[test]
    fn dominant_arg_of_zero_matrix_is_zero() {
        let a = CMatrix::zeros(3);
        assert_eq!(dominant_eig_arg(&a).unwrap(), 0.0);
    }
}
