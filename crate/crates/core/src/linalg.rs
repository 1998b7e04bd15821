//! Small dense complex matrices (dimension at most 8) used pointwise.
//!
//! Everything here lives on the stack so the per-grid-point work in the flow
//! loop does not allocate.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};

/// Largest supported matrix dimension (2n with n <= 4).
pub const MAX_DIM: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, PartialEq)]
pub struct CMat {
    dim: usize,
    a: [Complex64; MAX_DIM * MAX_DIM],
}

impl std::fmt::Debug for CMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let rows: Vec<Vec<Complex64>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)]).collect())
            .collect();
        f.debug_struct("CMat")
            .field("dim", &self.dim)
            .field("rows", &rows)
            .finish()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.a[i * MAX_DIM + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.a[i * MAX_DIM + j]
    }
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "matrix dimension {dim} exceeds {MAX_DIM}");
        Self {
            dim,
            a: [ZERO; MAX_DIM * MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(i, j)].conj())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let aik = self[(i, k)];
                if aik == ZERO {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] += aik * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_fn(self.dim, |i, j| self[(i, j)] * s)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self[(i, j)].norm());
            }
        }
        m
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max((self[(i, j)] - other[(i, j)]).norm());
            }
        }
        m
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> Complex64 {
        let d = self.dim;
        let mut a = *self;
        let mut det = ONE;
        for k in 0..d {
            let mut p = k;
            let mut best = a[(k, k)].norm();
            for i in k + 1..d {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return ZERO;
            }
            if p != k {
                for j in 0..d {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
                det = -det;
            }
            let pivot = a[(k, k)];
            det *= pivot;
            for i in k + 1..d {
                let factor = a[(i, k)] / pivot;
                if factor == ZERO {
                    continue;
                }
                for j in k..d {
                    let akj = a[(k, j)];
                    a[(i, j)] -= factor * akj;
                }
            }
        }
        det
    }
}

/// Lower-triangular Cholesky factor of a Hermitian matrix.
#[derive(Clone, Copy, Debug)]
pub struct Cholesky {
    l: CMat,
}

impl Cholesky {
    /// Factors `m - shift * I`. Returns `None` unless that matrix is positive
    /// definite, i.e. unless every eigenvalue of `m` exceeds `shift`.
    pub fn new(m: &CMat, shift: f64) -> Option<Self> {
        let d = m.dim();
        let mut l = CMat::zeros(d);
        for j in 0..d {
            let mut diag = m[(j, j)].re - shift;
            for k in 0..j {
                diag -= l[(j, k)].norm_sqr();
            }
            if !(diag > 0.0) {
                return None;
            }
            let ljj = diag.sqrt();
            l[(j, j)] = Complex64::new(ljj, 0.0);
            for i in j + 1..d {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Some(Self { l })
    }

    pub fn factor(&self) -> &CMat {
        &self.l
    }

    /// Determinant of the factored matrix (real and positive).
    pub fn determinant(&self) -> f64 {
        (0..self.l.dim())
            .map(|i| self.l[(i, i)].re.powi(2))
            .product()
    }

    /// Trace of the inverse of the factored matrix, `||L^{-1}||_F^2`.
    pub fn trace_inverse(&self) -> f64 {
        let d = self.l.dim();
        let mut total = 0.0;
        // columns of L^{-1} by forward substitution against unit vectors
        for c in 0..d {
            let mut x = [ZERO; MAX_DIM];
            for i in c..d {
                let mut s = if i == c { ONE } else { ZERO };
                for k in c..i {
                    s -= self.l[(i, k)] * x[k];
                }
                x[i] = s / self.l[(i, i)];
                total += x[i].norm_sqr();
            }
        }
        total
    }
}

/// Eigenvalues (ascending) of a Hermitian matrix.
///
/// Uses cyclic Jacobi on the real symmetric embedding `[[A, -B], [B, A]]` of
/// `H = A + iB`; every eigenvalue of `H` appears twice there, so every other
/// value is returned.
pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    let d = h.dim();
    let n = 2 * d;
    let mut s = [0.0f64; 4 * MAX_DIM * MAX_DIM];
    let at = |i: usize, j: usize| i * n + j;
    for i in 0..d {
        for j in 0..d {
            let z = h[(i, j)];
            s[at(i, j)] = z.re;
            s[at(i + d, j + d)] = z.re;
            s[at(i, j + d)] = -z.im;
            s[at(i + d, j)] = z.im;
        }
    }
    // symmetrize against round-off in the input
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (s[at(i, j)] + s[at(j, i)]);
            s[at(i, j)] = m;
            s[at(j, i)] = m;
        }
    }
    let scale = (0..n * n).map(|k| s[k].abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += s[at(i, j)] * s[at(i, j)];
                }
            }
            if off.sqrt() <= 1e-17 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = s[at(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = s[at(p, p)];
                    let aqq = s[at(q, q)];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let sn = t * c;
                    for k in 0..n {
                        let akp = s[at(k, p)];
                        let akq = s[at(k, q)];
                        s[at(k, p)] = c * akp - sn * akq;
                        s[at(k, q)] = sn * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = s[at(p, k)];
                        let aqk = s[at(q, k)];
                        s[at(p, k)] = c * apk - sn * aqk;
                        s[at(q, k)] = sn * apk + c * aqk;
                    }
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| s[at(i, i)]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig.into_iter().step_by(2).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn determinant_of_triangular_is_diagonal_product() {
        let m = CMat::from_fn(3, |i, j| {
            if j < i {
                ZERO
            } else {
                c((i + 1) as f64, j as f64)
            }
        });
        let expected = c(1.0, 0.0) * c(2.0, 1.0) * c(3.0, 2.0);
        assert!((m.determinant() - expected).norm() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut m = CMat::identity(2);
        m[(1, 1)] = c(-0.5, 0.0);
        assert!(Cholesky::new(&m, 0.0).is_none());
        assert!(Cholesky::new(&CMat::identity(2), 0.5).is_some());
        assert!(Cholesky::new(&CMat::identity(2), 1.0).is_none());
    }

    #[test]
    fn cholesky_trace_inverse_and_det() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let m = CMat::from_fn(2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => c(2.0, 0.0),
            (0, 1) => c(0.0, 1.0),
            _ => c(0.0, -1.0),
        });
        let ch = Cholesky::new(&m, 0.0).unwrap();
        assert!((ch.determinant() - 3.0).abs() < 1e-14);
        assert!((ch.trace_inverse() - (1.0 + 1.0 / 3.0)).abs() < 1e-14);
        let eig = hermitian_eigenvalues(&m);
        assert!((eig[0] - 1.0).abs() < 1e-13 && (eig[1] - 3.0).abs() < 1e-13);
    }
}
