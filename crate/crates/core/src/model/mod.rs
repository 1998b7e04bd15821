//! The flat hyperKähler torus `(R/2πZ)^{4n}` with its constant hypercomplex
//! structure, reference form Ω, periodic grids and spectral derivatives.
//!
//! Real coordinates are `x^0 .. x^{4n-1}` with `z^i = x^i + i·x^{2n+i}`.

pub mod grid;
pub mod spectral;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exterior::{positivity_matrix_unchecked, JRealTwoForm};
use crate::linalg::{hermitian_eigenvalues, CMat, Cholesky};
use crate::operators::{del_del_j, TwoFormField};

pub use grid::{sample, ComplexField, ScalarField, TorusGrid, TrigPolySpec, TrigTerm};

/// Period of every real coordinate.
pub const PERIOD: f64 = 2.0 * PI;

/// Action of J on holomorphic covectors: `J dz^j = Σ_l T[j][l] dz̄^l`.
///
/// `J dz^{2i} = −dz̄^{2i+1}` and `J dz^{2i+1} = dz̄^{2i}`.
pub fn j_coframe(dim: usize) -> CMat {
    let mut t = CMat::zeros(dim);
    for i in 0..dim / 2 {
        t[(2 * i, 2 * i + 1)] = Complex64::new(-1.0, 0.0);
        t[(2 * i + 1, 2 * i)] = Complex64::new(1.0, 0.0);
    }
    t
}

/// Action of J on coordinate vectors: `J∂̄_j = Σ_l V[j][l] ∂_l` and
/// `J∂_j = Σ_l V[j][l] ∂̄_l`. Dual to [`j_coframe`], so `V = Tᵀ`.
pub fn j_frame(dim: usize) -> CMat {
    j_coframe(dim).transpose()
}

/// Dense real `m×m` matrix acting on real tangent vectors
/// `(x^0, …, x^{2n-1}, y^0, …, y^{2n-1})` with `y^k = x^{2n+k}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    dim: usize,
    a: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            a: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.dim + j] = v;
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.a[i * d + j] += aik * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            a: self.a.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.a
            .iter()
            .zip(&other.a)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// The constant structure of the flat quaternionic torus of dimension `n`.
#[derive(Clone, Debug)]
pub struct TorusModel {
    n: usize,
    j_coframe: CMat,
    j_frame: CMat,
    omega: JRealTwoForm,
}

/// Builds the model for `2 <= n <= 4`.
pub fn build_model(n: usize) -> Result<TorusModel> {
    if !(2..=4).contains(&n) {
        return Err(Error::UnsupportedDimension { n });
    }
    Ok(TorusModel {
        n,
        j_coframe: j_coframe(2 * n),
        j_frame: j_frame(2 * n),
        omega: JRealTwoForm::standard(n),
    })
}

impl TorusModel {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of holomorphic coordinates, `2n`.
    pub fn complex_dim(&self) -> usize {
        2 * self.n
    }

    /// Number of real coordinates, `4n`.
    pub fn real_dim(&self) -> usize {
        4 * self.n
    }

    pub fn period(&self) -> f64 {
        PERIOD
    }

    pub fn omega(&self) -> &JRealTwoForm {
        &self.omega
    }

    pub fn j_coframe(&self) -> &CMat {
        &self.j_coframe
    }

    pub fn j_frame(&self) -> &CMat {
        &self.j_frame
    }

    /// J on a (1,0)-covector `Σ a_j dz^j`; returns the `dz̄` coefficients.
    pub fn j_one_form(&self, a: &[Complex64]) -> Vec<Complex64> {
        let d = self.complex_dim();
        (0..d)
            .map(|l| (0..d).map(|j| a[j] * self.j_coframe[(j, l)]).sum())
            .collect()
    }

    /// J on a (0,1)-covector `Σ c_j dz̄^j`; returns the `dz` coefficients.
    pub fn j_conj_one_form(&self, c: &[Complex64]) -> Vec<Complex64> {
        // J commutes with conjugation and T is real
        self.j_one_form(c)
    }

    /// J on a (1,0)-vector `Σ ξ_j ∂_j`; returns the `∂̄` coefficients.
    pub fn j_vector(&self, xi: &[Complex64]) -> Vec<Complex64> {
        let d = self.complex_dim();
        (0..d)
            .map(|l| (0..d).map(|j| xi[j] * self.j_frame[(j, l)]).sum())
            .collect()
    }

    /// J on a (0,1)-vector `Σ ζ_j ∂̄_j`; returns the `∂` coefficients.
    pub fn j_conj_vector(&self, zeta: &[Complex64]) -> Vec<Complex64> {
        self.j_vector(zeta)
    }

    /// J on the (2,0)-form with coefficient matrix `alpha`; returns the
    /// coefficient matrix of the resulting (0,2)-form, `Tᵀ α T`.
    pub fn j_two_form(&self, alpha: &CMat) -> CMat {
        self.j_coframe.transpose().mul(alpha).mul(&self.j_coframe)
    }

    /// J on the (1,1)-form `Σ h_{jk} dz^j∧dz̄^k`; returns the new coefficients.
    pub fn j_one_one_form(&self, h: &CMat) -> CMat {
        // J dz^j ∧ J dz̄^k = Σ T_{jl} T_{km} dz̄^l ∧ dz^m = −Σ T_{jl} T_{km} dz^m ∧ dz̄^l
        let t = &self.j_coframe;
        t.transpose()
            .mul(&h.transpose())
            .mul(t)
            .scale(Complex64::new(-1.0, 0.0))
    }

    /// Real matrix of I on tangent vectors: `I∂_{x^k} = ∂_{y^k}`.
    pub fn real_i(&self) -> RealMatrix {
        let d = self.complex_dim();
        let mut m = RealMatrix::zeros(2 * d);
        for k in 0..d {
            m.set(d + k, k, 1.0);
            m.set(k, d + k, -1.0);
        }
        m
    }

    /// Real matrix of J on tangent vectors, `[[T, 0], [0, −T]]`.
    pub fn real_j(&self) -> RealMatrix {
        let d = self.complex_dim();
        let mut m = RealMatrix::zeros(2 * d);
        for i in 0..d {
            for j in 0..d {
                let t = self.j_coframe[(i, j)].re;
                m.set(i, j, t);
                m.set(d + i, d + j, -t);
            }
        }
        m
    }

    /// Real matrix of `K = IJ`.
    pub fn real_k(&self) -> RealMatrix {
        self.real_i().mul(&self.real_j())
    }
}

/// `Ω_h = c·Ω + ∂∂_J ρ` sampled on `grid`, rejected unless strictly positive
/// at every point.
pub fn build_omega_h(c: f64, rho: &TrigPolySpec, grid: &Arc<TorusGrid>) -> Result<TwoFormField> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Config(format!(
            "Ω_h scale c must be positive, got {c}"
        )));
    }
    let n = grid.n();
    build_model(n)?;
    let rho = sample(rho, grid)?;
    let hess = del_del_j(&rho);
    let omega = JRealTwoForm::standard(n).scale(c);
    let field = hess.map(|_, a| omega.add(a));
    for p in 0..field.len() {
        let m = positivity_matrix_unchecked(field.at(p));
        if Cholesky::new(&m, 0.0).is_none() {
            let min_eig = hermitian_eigenvalues(&m)[0];
            return Err(Error::Positivity {
                point: p,
                coords: grid.coords(p),
                min_eig,
            });
        }
    }
    Ok(field)
}
