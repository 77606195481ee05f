//! Test-matrix generators: disk matrices, near-disk rotations, block examples
//! with many local maximizers, and the classic Gear/Grcar families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{C64, CMatrix};

/// Declarative description of a gallery matrix; the same spec and seed always
/// reproduce the matrix bit for bit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GallerySpec {
    pub family: Family,
    pub n: usize,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Crabb,
    DiskModel,
    NearlyDisk,
    TMu,
    Grcar,
    Gear,
    RandomComplex,
    JordanEdge,
}

pub fn build(spec: &GallerySpec) -> Result<CMatrix> {
    let p = |k: usize, default: f64| spec.params.get(k).copied().unwrap_or(default);
    match spec.family {
        Family::Crabb => crabb(spec.n),
        Family::DiskModel => disk_model(spec.n, p(0, 0.3), p(1, 0.7)),
        Family::NearlyDisk => nearly_disk(spec.n, p(0, 0.9999), p(1, std::f64::consts::FRAC_PI_4)),
        Family::TMu => t_mu(
            spec.n,
            p(0, 0.5),
            spec.seed
                .ok_or_else(|| Error::input("t_mu requires a seed"))?,
        ),
        Family::Grcar => grcar(spec.n),
        Family::Gear => {
            let i = spec.params.first().map(|&v| v as i64).unwrap_or(spec.n as i64);
            let j = spec.params.get(1).map(|&v| v as i64).unwrap_or(-(spec.n as i64));
            gear(spec.n, i, j)
        }
        Family::RandomComplex => random_complex(
            spec.n,
            spec.seed
                .ok_or_else(|| Error::input("random_complex requires a seed"))?,
        ),
        Family::JordanEdge => jordan_edge(),
    }
}

/// The `n x n` Crabb matrix: zero except for the superdiagonal
/// `(sqrt(2), 1, ..., 1, sqrt(2))` (entry `2` for `n = 2`). Its field of
/// values is the closed unit disk and its numerical radius is one.
pub fn crabb(n: usize) -> Result<CMatrix> {
    if n < 2 {
        return Err(Error::input("crabb requires n >= 2"));
    }
    let s2 = 2f64.sqrt();
    CMatrix::from_fn(n, |i, j| {
        if j == i + 1 {
            let v = if n == 2 {
                2.0
            } else if i == 0 || i == n - 2 {
                s2
            } else {
                1.0
            };
            C64::new(v, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `M = s I + r~ K_n`: field of values is the disk of radius `r~` centered at
/// `s`, so `r(M) = s + r~` and the normalized curvature at the outermost
/// point is `r~ / (s + r~)`.
pub fn disk_model(n: usize, s: f64, r_tilde: f64) -> Result<CMatrix> {
    if s < 0.0 || r_tilde <= 0.0 {
        return Err(Error::input("disk_model requires s >= 0 and r_tilde > 0"));
    }
    Ok(crabb(n)?
        .scale(C64::new(r_tilde, 0.0))
        .shift(C64::new(s, 0.0)))
}

/// `e^{i phase} ((1 - mu) I + mu K_n)`: numerical radius one for every
/// `mu` in `(0, 1]`, with normalized curvature `mu` at the outermost point.
pub fn nearly_disk(n: usize, mu: f64, phase: f64) -> Result<CMatrix> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::input("nearly_disk requires mu in (0, 1]"));
    }
    Ok(crabb(n)?
        .scale(C64::new(mu, 0.0))
        .shift(C64::new(1.0 - mu, 0.0))
        .scale(C64::from_polar(1.0, phase)))
}

/// Randomly rotated block matrix `e^{i theta} blkdiag(M, D)` where `M` is a
/// disk model with `r(M) = 1` and curvature `mu`, and `D` is normal diagonal
/// with entries crowded just inside the unit circle. The diagonal bumps give
/// `h(theta)` many local maximizers while `r = 1` stays exact.
pub fn t_mu(n: usize, mu: f64, seed: u64) -> Result<CMatrix> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::input("t_mu requires mu in (0, 1]"));
    }
    let d_len = (n / 4).min(100).max(1);
    let m_len = n
        .checked_sub(d_len)
        .filter(|&m| m >= 2)
        .ok_or_else(|| Error::input("t_mu requires n >= 3"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rot = C64::from_polar(1.0, rng.random_range(0.0..crate::fov::TAU));
    let m = disk_model(m_len, 1.0 - mu, mu)?;

    let band = 0.3 * (1.0 - mu);
    let lo = (1.0 - band).max(0.5);
    let diag: Vec<C64> = (0..d_len)
        .map(|_| {
            let modulus = rng.random_range(lo..1.0) * (1.0 - 1e-12);
            let arg = rng.random_range(0.0..crate::fov::TAU);
            C64::from_polar(modulus, arg)
        })
        .collect();

    CMatrix::from_fn(n, |i, j| {
        let v = if i < m_len && j < m_len {
            m.get(i, j)
        } else if i >= m_len && i == j {
            diag[i - m_len]
        } else {
            C64::new(0.0, 0.0)
        };
        rot * v
    })
}

/// Grcar matrix: `-1` on the subdiagonal, `1` on the diagonal and the first
/// three superdiagonals.
pub fn grcar(n: usize) -> Result<CMatrix> {
    if n < 2 {
        return Err(Error::input("grcar requires n >= 2"));
    }
    CMatrix::from_fn(n, |i, j| {
        if j + 1 == i {
            C64::new(-1.0, 0.0)
        } else if j >= i && j - i <= 3 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Gear matrix: ones on the super- and subdiagonal, `sign(i)` at
/// `(1, |i|)`, and `sign(j)` at `(n, n + 1 - |j|)` in 1-based indexing.
pub fn gear(n: usize, i: i64, j: i64) -> Result<CMatrix> {
    if n < 2 {
        return Err(Error::input("gear requires n >= 2"));
    }
    let in_range = |k: i64| k != 0 && k.unsigned_abs() as usize <= n;
    if !in_range(i) || !in_range(j) {
        return Err(Error::input("gear requires 0 < |i|, |j| <= n"));
    }
    let col_i = i.unsigned_abs() as usize - 1;
    let col_j = n - j.unsigned_abs() as usize;
    let mut m = CMatrix::zeros(n);
    for k in 0..n - 1 {
        m.set(k, k + 1, C64::new(1.0, 0.0));
        m.set(k + 1, k, C64::new(1.0, 0.0));
    }
    m.set(0, col_i, C64::new(i.signum() as f64, 0.0));
    m.set(n - 1, col_j, C64::new(j.signum() as f64, 0.0));
    Ok(m)
}

/// Dense matrix with independent standard complex Gaussian entries.
pub fn random_complex(n: usize, seed: u64) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::input("random_complex requires n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        entries.push(C64::new(re, im));
    }
    CMatrix::from_fn(n, |i, j| entries[i * n + j])
}

/// The 4x4 edge case `blkdiag(J, J + I)` with `J` the nilpotent 2x2 Jordan
/// block; its boundary has a point where the curvature jumps between a
/// segment and a semicircle.
pub fn jordan_edge() -> Result<CMatrix> {
    CMatrix::from_fn(4, |i, j| {
        let v = match (i, j) {
            (0, 1) | (2, 3) => 1.0,
            (2, 2) | (3, 3) => 1.0,
            _ => 0.0,
        };
        C64::new(v, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn crabb_small_cases() {
        let k2 = crabb(2).unwrap();
        assert_eq!(k2.get(0, 1), C64::new(2.0, 0.0));
        assert_eq!(k2.get(1, 0), C64::new(0.0, 0.0));
        let k3 = crabb(3).unwrap();
        assert_relative_eq!(k3.get(0, 1).re, 2f64.sqrt());
        assert_relative_eq!(k3.get(1, 2).re, 2f64.sqrt());
        let k5 = crabb(5).unwrap();
        assert_relative_eq!(k5.get(0, 1).re, 2f64.sqrt());
        assert_relative_eq!(k5.get(1, 2).re, 1.0);
        assert_relative_eq!(k5.get(2, 3).re, 1.0);
        assert_relative_eq!(k5.get(3, 4).re, 2f64.sqrt());
        assert!(crabb(1).is_err());
    }

    #[test]
    fn disk_model_is_shifted_scaled_crabb() {
        let m = disk_model(3, 0.3, 0.7).unwrap();
        assert_relative_eq!(m.get(0, 0).re, 0.3);
        assert_relative_eq!(m.get(0, 1).re, 0.7 * 2f64.sqrt());
        assert!(disk_model(3, -0.1, 0.7).is_err());
    }

    #[test]
    fn nearly_disk_r_is_one() {
        // (1 - mu) + mu * 1 = 1 regardless of mu.
        let a = nearly_disk(4, 0.9999, std::f64::consts::FRAC_PI_4).unwrap();
        let diag = a.get(0, 0);
        assert_relative_eq!(diag.norm(), 1.0 - 0.9999, max_relative = 1e-12);
        assert!(nearly_disk(4, 0.0, 0.0).is_err());
    }

    #[test]
    fn grcar_first_row() {
        let g = grcar(5).unwrap();
        let row: Vec<f64> = (0..5).map(|j| g.get(0, j).re).collect();
        assert_eq!(row, vec![1.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(g.get(1, 0), C64::new(-1.0, 0.0));
    }

    #[test]
    fn gear_defaults() {
        let g = gear(6, 6, -6).unwrap();
        assert_eq!(g.get(0, 5), C64::new(1.0, 0.0));
        assert_eq!(g.get(5, 0), C64::new(-1.0, 0.0));
        assert_eq!(g.get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(g.get(1, 0), C64::new(1.0, 0.0));
        assert!(gear(6, 0, 1).is_err());
        assert!(gear(6, 7, 1).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let a = random_complex(8, 123).unwrap();
        let b = random_complex(8, 123).unwrap();
        assert_eq!(a.max_abs_diff(&b), 0.0);
        let t1 = t_mu(16, 0.5, 9).unwrap();
        let t2 = t_mu(16, 0.5, 9).unwrap();
        assert_eq!(t1.max_abs_diff(&t2), 0.0);
        let t3 = t_mu(16, 0.5, 10).unwrap();
        assert!(t1.max_abs_diff(&t3) > 0.0);
    }

    #[test]
    fn t_mu_diagonal_block_is_strictly_inside() {
        let n = 24;
        let t = t_mu(n, 0.7, 4).unwrap();
        let d_len = (n / 4).min(100).max(1);
        for k in n - d_len..n {
            assert!(t.get(k, k).norm() < 1.0);
        }
    }

    #[test]
    fn jordan_edge_blocks() {
        let j = jordan_edge().unwrap();
        assert_eq!(j.get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(j.get(2, 2), C64::new(1.0, 0.0));
        assert_eq!(j.get(2, 3), C64::new(1.0, 0.0));
        assert_eq!(j.get(1, 1), C64::new(0.0, 0.0));
    }
}
