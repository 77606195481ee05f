//! Dense complex square matrices and Matrix Market file I/O.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use faer::Mat;
use num_complex::Complex;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate. Identical to `faer::c64`.
pub type C64 = Complex<f64>;

/// A dense complex `n x n` matrix with finite entries.
#[derive(Clone)]
pub struct CMatrix {
    data: Mat<C64>,
}

impl CMatrix {
    /// Wraps a square `faer` matrix, checking the finiteness invariant.
    pub fn new(data: Mat<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::input(format!(
                "matrix must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.nrows() == 0 {
            return Err(Error::input("matrix must have order >= 1"));
        }
        let m = CMatrix { data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        Self::new(Mat::from_fn(n, n, |i, j| f(i, j)))
    }

    pub fn zeros(n: usize) -> Self {
        CMatrix {
            data: Mat::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        CMatrix {
            data: Mat::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_mat(&self) -> &Mat<C64> {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[(i, j)] = v;
    }

    fn check_finite(&self) -> Result<()> {
        for j in 0..self.n() {
            for i in 0..self.n() {
                let v = self.data[(i, j)];
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::input(format!(
                        "non-finite entry at ({i}, {j}): {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.data.norm_l2()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.norm_max()
    }

    pub fn is_zero(&self) -> bool {
        self.norm_max() == 0.0
    }

    /// The Hermitian family `H(theta) = (e^{i theta} A + e^{-i theta} A*) / 2`,
    /// hermitized entry by entry so the result is exactly Hermitian.
    pub fn h_theta(&self, theta: f64) -> CMatrix {
        let n = self.n();
        let w = C64::from_polar(1.0, theta);
        let mut h = Mat::<C64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = 0.5 * (w * self.data[(i, j)] + (w * self.data[(j, i)]).conj());
                h[(i, j)] = v;
                if i == j {
                    h[(i, j)].im = 0.0;
                } else {
                    h[(j, i)] = v.conj();
                }
            }
        }
        CMatrix { data: h }
    }

    /// `H'(theta) = (i/2) (e^{i theta} A - e^{-i theta} A*)`, also Hermitian.
    pub fn h_theta_prime(&self, theta: f64) -> CMatrix {
        let n = self.n();
        let w = C64::from_polar(1.0, theta);
        let half_i = C64::new(0.0, 0.5);
        let mut h = Mat::<C64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = half_i * (w * self.data[(i, j)] - (w * self.data[(j, i)]).conj());
                h[(i, j)] = v;
                if i == j {
                    h[(i, j)].im = 0.0;
                } else {
                    h[(j, i)] = v.conj();
                }
            }
        }
        CMatrix { data: h }
    }

    /// Quadratic form `x* A x` for a unit vector `x`.
    pub fn quad_form(&self, x: &[C64]) -> C64 {
        let n = self.n();
        assert_eq!(x.len(), n);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            let xj = x[j];
            if xj == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..n {
                acc += x[i].conj() * self.data[(i, j)] * xj;
            }
        }
        acc
    }

    /// Matrix-vector product `A x`.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let xj = x[j];
            for i in 0..n {
                y[i] += self.data[(i, j)] * xj;
            }
        }
        y
    }

    /// Matrix-vector product with the adjoint, `A* x`.
    pub fn matvec_adjoint(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.data[(j, i)].conj() * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn scale(&self, c: C64) -> CMatrix {
        CMatrix {
            data: Mat::from_fn(self.n(), self.n(), |i, j| c * self.data[(i, j)]),
        }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n(), other.n());
        CMatrix {
            data: Mat::from_fn(self.n(), self.n(), |i, j| {
                self.data[(i, j)] + other.data[(i, j)]
            }),
        }
    }

    /// Shift by a multiple of the identity: `A + c I`.
    pub fn shift(&self, c: C64) -> CMatrix {
        let mut out = self.clone();
        for i in 0..self.n() {
            out.data[(i, i)] += c;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.n(), other.n());
        let mut d = 0.0f64;
        for j in 0..self.n() {
            for i in 0..self.n() {
                d = d.max((self.data[(i, j)] - other.data[(i, j)]).norm());
            }
        }
        d
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.n(), self.n())?;
        for i in 0..self.n() {
            for j in 0..self.n() {
                write!(f, " {:+.4}{:+.4}i", self.data[(i, j)].re, self.data[(i, j)].im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum MmFormat {
    Array,
    Coordinate,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum MmField {
    Real,
    Integer,
    Complex,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum MmSymmetry {
    General,
    Symmetric,
    Hermitian,
    SkewSymmetric,
}

/// Reads a Matrix Market file into a dense complex matrix.
///
/// Accepts `array` and `coordinate` formats with `real`, `integer`, or
/// `complex` fields and `general`, `symmetric`, `hermitian`, or
/// `skew-symmetric` symmetry. Coordinate input is densified. The matrix must
/// be square.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<CMatrix> {
    let file = std::fs::File::open(path.as_ref())?;
    let mut lines = BufReader::new(file).lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::input("empty file"))??;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.len() < 4 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::input(format!("malformed MatrixMarket header: {header:?}")));
    }
    let format = match tokens[2].as_str() {
        "array" => MmFormat::Array,
        "coordinate" => MmFormat::Coordinate,
        other => return Err(Error::input(format!("unsupported format {other:?}"))),
    };
    let field = match tokens[3].as_str() {
        "real" => MmField::Real,
        "integer" => MmField::Integer,
        "complex" => MmField::Complex,
        other => return Err(Error::input(format!("unsupported field {other:?}"))),
    };
    let symmetry = match tokens.get(4).map(|s| s.as_str()).unwrap_or("general") {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        "hermitian" => MmSymmetry::Hermitian,
        "skew-symmetric" => MmSymmetry::SkewSymmetric,
        other => return Err(Error::input(format!("unsupported symmetry {other:?}"))),
    };

    let mut data_lines = lines.filter_map(|l| match l {
        Ok(s) => {
            let t = s.trim().to_string();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok(t))
            }
        }
        Err(e) => Some(Err(e)),
    });

    let size_line = data_lines
        .next()
        .ok_or_else(|| Error::input("missing size line"))??;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::input(format!("bad size line: {size_line:?}"))))
        .collect::<Result<_>>()?;

    let parse_f = |tok: &str| -> Result<f64> {
        tok.parse::<f64>()
            .map_err(|_| Error::input(format!("bad numeric token {tok:?}")))
    };

    match format {
        MmFormat::Array => {
            if dims.len() != 2 {
                return Err(Error::input("array size line must be `m n`"));
            }
            let (m, n) = (dims[0], dims[1]);
            if m != n {
                return Err(Error::input(format!("matrix must be square, got {m}x{n}")));
            }
            let mut mat = Mat::<C64>::zeros(n, n);
            // Column-major; symmetric variants store the lower triangle only.
            let mut col_iter: Vec<(usize, usize)> = Vec::new();
            for j in 0..n {
                let i0 = if symmetry == MmSymmetry::General { 0 } else { j };
                for i in i0..n {
                    col_iter.push((i, j));
                }
            }
            for (i, j) in col_iter {
                let line = data_lines
                    .next()
                    .ok_or_else(|| Error::input("truncated array data"))??;
                let toks: Vec<&str> = line.split_whitespace().collect();
                let v = match field {
                    MmField::Complex => {
                        if toks.len() < 2 {
                            return Err(Error::input(format!("expected re im, got {line:?}")));
                        }
                        C64::new(parse_f(toks[0])?, parse_f(toks[1])?)
                    }
                    _ => C64::new(parse_f(toks[0])?, 0.0),
                };
                mat[(i, j)] = v;
                if i != j {
                    match symmetry {
                        MmSymmetry::General => {}
                        MmSymmetry::Symmetric => mat[(j, i)] = v,
                        MmSymmetry::Hermitian => mat[(j, i)] = v.conj(),
                        MmSymmetry::SkewSymmetric => mat[(j, i)] = -v,
                    }
                }
            }
            CMatrix::new(mat)
        }
        MmFormat::Coordinate => {
            if dims.len() != 3 {
                return Err(Error::input("coordinate size line must be `m n nnz`"));
            }
            let (m, n, nnz) = (dims[0], dims[1], dims[2]);
            if m != n {
                return Err(Error::input(format!("matrix must be square, got {m}x{n}")));
            }
            let mut mat = Mat::<C64>::zeros(n, n);
            for _ in 0..nnz {
                let line = data_lines
                    .next()
                    .ok_or_else(|| Error::input("truncated coordinate data"))??;
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() < 3 {
                    return Err(Error::input(format!("bad coordinate line: {line:?}")));
                }
                let i: usize = toks[0]
                    .parse()
                    .map_err(|_| Error::input(format!("bad row index {:?}", toks[0])))?;
                let j: usize = toks[1]
                    .parse()
                    .map_err(|_| Error::input(format!("bad col index {:?}", toks[1])))?;
                if i < 1 || i > n || j < 1 || j > n {
                    return Err(Error::input(format!("index ({i}, {j}) out of range")));
                }
                let v = match field {
                    MmField::Complex => {
                        if toks.len() < 4 {
                            return Err(Error::input(format!("expected i j re im, got {line:?}")));
                        }
                        C64::new(parse_f(toks[2])?, parse_f(toks[3])?)
                    }
                    _ => C64::new(parse_f(toks[2])?, 0.0),
                };
                let (i, j) = (i - 1, j - 1);
                mat[(i, j)] = v;
                if i != j {
                    match symmetry {
                        MmSymmetry::General => {}
                        MmSymmetry::Symmetric => mat[(j, i)] = v,
                        MmSymmetry::Hermitian => mat[(j, i)] = v.conj(),
                        MmSymmetry::SkewSymmetric => mat[(j, i)] = -v,
                    }
                }
            }
            CMatrix::new(mat)
        }
    }
}

/// Writes `a` in `matrix array complex general` format.
///
/// Values are printed with Rust's shortest round-trip float formatting, so a
/// write/read cycle reproduces the entries bit for bit.
pub fn write_matrix_market(a: &CMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    writeln!(out, "%%MatrixMarket matrix array complex general")?;
    writeln!(out, "{} {}", a.n(), a.n())?;
    for j in 0..a.n() {
        for i in 0..a.n() {
            let v = a.get(i, j);
            writeln!(out, "{} {}", v.re, v.im)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_non_square() {
        let m = Mat::<C64>::zeros(2, 3);
        assert!(matches!(CMatrix::new(m), Err(Error::Input(_))));
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = Mat::<C64>::zeros(2, 2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(CMatrix::new(m), Err(Error::Input(_))));
    }

    #[test]
    fn h_theta_of_hermitian_at_zero_is_identity_map() {
        let a = CMatrix::from_fn(2, |i, j| {
            if i == j {
                c([1.0, -2.0][i], 0.0)
            } else {
                c(0.5, if i < j { 0.25 } else { -0.25 })
            }
        })
        .unwrap();
        let h = a.h_theta(0.0);
        assert!(h.max_abs_diff(&a) < 1e-15);
    }

    #[test]
    fn h_theta_antiperiodic() {
        let a = CMatrix::from_fn(3, |i, j| c((i * j) as f64, (i as f64) - (j as f64))).unwrap();
        for &theta in &[0.0, 0.3, 1.2, 4.0] {
            let lhs = a.h_theta(theta + std::f64::consts::PI);
            let rhs = a.h_theta(theta).scale(c(-1.0, 0.0));
            assert!(lhs.max_abs_diff(&rhs) < 1e-14);
        }
    }

    #[test]
    fn crabb2_h_zero() {
        // K2 = [[0,2],[0,0]] at theta = 0 gives [[0,1],[1,0]].
        let k2 = CMatrix::from_fn(2, |i, j| {
            if (i, j) == (0, 1) {
                c(2.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap();
        let h = k2.h_theta(0.0);
        assert_eq!(h.get(0, 1), c(1.0, 0.0));
        assert_eq!(h.get(1, 0), c(1.0, 0.0));
        assert_eq!(h.get(0, 0), c(0.0, 0.0));
    }

    #[test]
    fn matrix_market_roundtrip_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        let a = CMatrix::from_fn(3, |i, j| {
            c(
                (i as f64 + 0.1) / (j as f64 + 3.7),
                -(j as f64) * 0.333333333333333314829616256247,
            )
        })
        .unwrap();
        write_matrix_market(&a, &path).unwrap();
        let b = read_matrix_market(&path).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a.get(i, j).re.to_bits(), b.get(i, j).re.to_bits());
                assert_eq!(a.get(i, j).im.to_bits(), b.get(i, j).im.to_bits());
            }
        }
    }

    #[test]
    fn reads_real_symmetric_coordinate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.mtx");
        std::fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 2\n1 1 3.0\n2 1 -1.5\n",
        )
        .unwrap();
        let a = read_matrix_market(&path).unwrap();
        assert_eq!(a.get(0, 0), c(3.0, 0.0));
        assert_eq!(a.get(0, 1), c(-1.5, 0.0));
        assert_eq!(a.get(1, 0), c(-1.5, 0.0));
        assert_eq!(a.get(1, 1), c(0.0, 0.0));
    }

    #[test]
    fn rejects_malformed_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mtx");
        std::fs::write(&path, "%%NotMatrixMarket stuff\n1 1\n0 0\n").unwrap();
        assert!(matches!(read_matrix_market(&path), Err(Error::Input(_))));
    }

    #[test]
    fn rejects_non_square_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rect.mtx");
        std::fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1.0\n",
        )
        .unwrap();
        assert!(matches!(read_matrix_market(&path), Err(Error::Input(_))));
    }
}
