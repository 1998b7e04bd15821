//! Periodic sampling grids over the flat torus and the fields that live on them.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectral::Spectral;
use crate::error::{Error, Result};

/// Uniform grid over the active real coordinates of `(R/2πZ)^{4n}`.
///
/// Fields sampled on it are constant in every inactive coordinate, so all
/// derivatives along inactive coordinates vanish.
#[derive(Clone, Debug)]
pub struct TorusGrid {
    n: usize,
    active_dims: Vec<usize>,
    sizes: Vec<usize>,
    spectral: Spectral,
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.active_dims == other.active_dims && self.sizes == other.sizes
    }
}

impl TorusGrid {
    pub fn new(n: usize, active_dims: Vec<usize>, sizes: Vec<usize>) -> Result<Arc<Self>> {
        if active_dims.len() != sizes.len() {
            return Err(Error::InvalidGrid(format!(
                "{} active dimensions but {} sizes",
                active_dims.len(),
                sizes.len()
            )));
        }
        if active_dims.is_empty() {
            return Err(Error::InvalidGrid("no active dimensions".into()));
        }
        for (i, &d) in active_dims.iter().enumerate() {
            if d >= 4 * n {
                return Err(Error::InvalidGrid(format!(
                    "active dimension {d} out of range 0..{}",
                    4 * n
                )));
            }
            if active_dims[..i].contains(&d) {
                return Err(Error::InvalidGrid(format!("active dimension {d} repeated")));
            }
        }
        if let Some(&s) = sizes.iter().find(|&&s| s < 2) {
            return Err(Error::InvalidGrid(format!("size {s} is below 2")));
        }
        let spectral = Spectral::new(&sizes);
        Ok(Arc::new(Self {
            n,
            active_dims,
            sizes,
            spectral,
        }))
    }

    /// Reduced grid on the `z^0` plane (`x^0` and `x^{2n}`).
    pub fn z0_plane(n: usize, size: usize) -> Result<Arc<Self>> {
        Self::new(n, vec![0, 2 * n], vec![size, size])
    }

    /// Every real coordinate active with `size` points each.
    pub fn full(n: usize, size: usize) -> Result<Arc<Self>> {
        Self::new(n, (0..4 * n).collect(), vec![size; 4 * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn active_dims(&self) -> &[usize] {
        &self.active_dims
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.spectral.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * PI / self.sizes[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.sizes.len())
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Position of real coordinate `dim` among the active axes.
    pub fn axis_of(&self, dim: usize) -> Option<usize> {
        self.active_dims.iter().position(|&d| d == dim)
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// Active-coordinate values at flat point `index`.
    pub fn coords(&self, index: usize) -> Vec<f64> {
        let mut idx = vec![0usize; self.sizes.len()];
        self.spectral.unravel(index, &mut idx);
        idx.iter()
            .enumerate()
            .map(|(a, &i)| i as f64 * self.spacing(a))
            .collect()
    }
}

/// Real-valued field on a [`TorusGrid`], row-major over the active axes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Arc<TorusGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<TorusGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.sizes().to_vec(),
                found: vec![values.len()],
            });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &Arc<TorusGrid>, c: f64) -> Self {
        Self {
            values: vec![c; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max − min`.
    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    fn check(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.zip_map(other, |a, b| a + s * b))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn shift(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `‖self − other‖_∞`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Complex-valued field on a [`TorusGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Arc<TorusGrid>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Arc<TorusGrid>, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        Self::new(grid.clone(), vec![Complex64::default(); grid.len()])
    }

    pub fn from_real(field: &ScalarField) -> Self {
        Self::new(
            field.grid().clone(),
            field
                .values()
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect(),
        )
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn real_part(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.re).collect(),
        }
    }
}

/// One term `amplitude · cos(⟨k, x⟩ + phase)` over the active coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Real trigonometric polynomial over the active coordinates of a grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrigPolySpec {
    pub terms: Vec<TrigTerm>,
}

impl TrigPolySpec {
    pub fn new(terms: Vec<TrigTerm>) -> Self {
        Self { terms }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64, dims: usize) -> Self {
        Self::new(vec![TrigTerm {
            k: vec![0; dims],
            amplitude: c,
            phase: 0.0,
        }])
    }

    /// Builder: appends one cosine term.
    pub fn with(mut self, k: Vec<i64>, amplitude: f64, phase: f64) -> Self {
        self.terms.push(TrigTerm {
            k,
            amplitude,
            phase,
        });
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|t| TrigTerm {
                    amplitude: t.amplitude * s,
                    ..t.clone()
                })
                .collect(),
        )
    }

    /// Checks every wavevector has the grid's arity and `|k_a| < N_a / 2`.
    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        for t in &self.terms {
            if t.k.len() != grid.sizes().len() {
                return Err(Error::Config(format!(
                    "wavevector {:?} has {} components but the grid has {} active dimensions",
                    t.k,
                    t.k.len(),
                    grid.sizes().len()
                )));
            }
            if !t.amplitude.is_finite() || !t.phase.is_finite() {
                return Err(Error::Config("non-finite amplitude or phase".into()));
            }
            for (a, (&k, &size)) in t.k.iter().zip(grid.sizes()).enumerate() {
                if 2 * k.unsigned_abs() as usize >= size {
                    return Err(Error::Unresolvable {
                        dim: grid.active_dims()[a],
                        k,
                        size,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Pointwise evaluation of a trigonometric polynomial on a grid.
pub fn sample(spec: &TrigPolySpec, grid: &Arc<TorusGrid>) -> Result<ScalarField> {
    spec.validate(grid)?;
    let dims = grid.sizes().len();
    let mut idx = vec![0usize; dims];
    let values = (0..grid.len())
        .map(|p| {
            grid.spectral().unravel(p, &mut idx);
            spec.terms
                .iter()
                .map(|t| {
                    // integer phase index keeps ⟨k, x⟩ exact modulo the period
                    let mut arg = 0.0;
                    for a in 0..dims {
                        let n = grid.sizes()[a] as i64;
                        let m = (t.k[a] * idx[a] as i64).rem_euclid(n);
                        arg += 2.0 * PI * m as f64 / n as f64;
                    }
                    t.amplitude * (arg + t.phase).cos()
                })
                .sum()
        })
        .collect();
    ScalarField::new(grid.clone(), values)
}

fn wirtinger(
    grid: &TorusGrid,
    spectrum: Vec<Complex64>,
    k: usize,
    conjugate: bool,
) -> Vec<Complex64> {
    let n = grid.n();
    assert!(k < 2 * n, "holomorphic index {k} out of range for n = {n}");
    let sp = grid.spectral();
    let kx = grid.axis_of(k).map(|a| sp.axis_wavenumbers(a));
    let ky = grid.axis_of(2 * n + k).map(|a| sp.axis_wavenumbers(a));
    if kx.is_none() && ky.is_none() {
        return vec![Complex64::default(); spectrum.len()];
    }
    // ∂_z = ½(∂_x − i∂_y) has symbol ½(i k_x + k_y); ∂_z̄ has ½(i k_x − k_y)
    let sign = if conjugate { -1.0 } else { 1.0 };
    let mut out: Vec<Complex64> = spectrum
        .into_iter()
        .enumerate()
        .map(|(p, v)| {
            let x = kx.map_or(0.0, |t| t[p]);
            let y = ky.map_or(0.0, |t| t[p]);
            v * Complex64::new(0.5 * sign * y, 0.5 * x)
        })
        .collect();
    sp.inverse(&mut out);
    out
}

/// `∂u/∂x^dim` by Fourier multiplier; zero when `dim` is inactive.
pub fn real_derivative(field: &ScalarField, dim: usize) -> ScalarField {
    let grid = field.grid();
    let values = match grid.axis_of(dim) {
        None => vec![0.0; grid.len()],
        Some(a) => {
            let sp = grid.spectral();
            let k = sp.axis_wavenumbers(a);
            sp.real_multiplier(&sp.forward_real(field.values()), |p| {
                Complex64::new(0.0, k[p])
            })
        }
    };
    ScalarField {
        grid: grid.clone(),
        values,
    }
}

/// `∂_{z^k} u = ½(∂_{x^k} − i ∂_{x^{2n+k}}) u`.
pub fn partial_z(field: &ScalarField, k: usize) -> ComplexField {
    let grid = field.grid();
    let spec = grid.spectral().forward_real(field.values());
    ComplexField::new(grid.clone(), wirtinger(grid, spec, k, false))
}

/// `∂_{z̄^k} u = ½(∂_{x^k} + i ∂_{x^{2n+k}}) u`.
pub fn partial_zbar(field: &ScalarField, k: usize) -> ComplexField {
    let grid = field.grid();
    let spec = grid.spectral().forward_real(field.values());
    ComplexField::new(grid.clone(), wirtinger(grid, spec, k, true))
}

/// [`partial_z`] for complex-valued fields.
pub fn partial_z_complex(field: &ComplexField, k: usize) -> ComplexField {
    let grid = field.grid();
    let mut spec = field.values().to_vec();
    grid.spectral().forward(&mut spec);
    ComplexField::new(grid.clone(), wirtinger(grid, spec, k, false))
}

/// [`partial_zbar`] for complex-valued fields.
pub fn partial_zbar_complex(field: &ComplexField, k: usize) -> ComplexField {
    let grid = field.grid();
    let mut spec = field.values().to_vec();
    grid.spectral().forward(&mut spec);
    ComplexField::new(grid.clone(), wirtinger(grid, spec, k, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(2, vec![0, 8], vec![4, 4]).is_err());
        assert!(TorusGrid::new(2, vec![0, 0], vec![4, 4]).is_err());
        assert!(TorusGrid::new(2, vec![0], vec![4, 4]).is_err());
        assert!(TorusGrid::new(2, vec![0, 4], vec![4, 4]).is_ok());
    }

    #[test]
    fn constant_sample() {
        let g = TorusGrid::z0_plane(2, 8).unwrap();
        let f = sample(&TrigPolySpec::constant(0.7, 2), &g).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.7));
    }

    #[test]
    fn cosine_peak_at_origin() {
        let g = TorusGrid::z0_plane(2, 64).unwrap();
        let f = sample(&TrigPolySpec::zero().with(vec![1, 0], 1.0, 0.0), &g).unwrap();
        assert_eq!(f.values()[0], 1.0);
        assert!((f.max_abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_linear() {
        let g = TorusGrid::z0_plane(2, 16).unwrap();
        let a = TrigPolySpec::zero().with(vec![1, 2], 0.3, 0.1);
        let b = TrigPolySpec::zero().with(vec![-3, 1], 0.2, -0.4);
        let mut ab = a.clone();
        ab.terms.extend(b.terms.clone());
        let lhs = sample(&ab, &g).unwrap();
        let rhs = sample(&a, &g)
            .unwrap()
            .add(&sample(&b, &g).unwrap())
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-15);
    }

    #[test]
    fn unresolvable_wavevector_rejected() {
        let g = TorusGrid::z0_plane(2, 8).unwrap();
        let err = sample(&TrigPolySpec::zero().with(vec![4, 0], 1.0, 0.0), &g).unwrap_err();
        assert!(matches!(
            err,
            Error::Unresolvable {
                dim: 0,
                k: 4,
                size: 8
            }
        ));
    }

    #[test]
    fn pure_modes_average_to_zero() {
        let g = TorusGrid::new(2, vec![0, 3, 4], vec![8, 6, 10]).unwrap();
        for k in [[1, 0, 0], [0, 2, -1], [3, 1, 4]] {
            let f = sample(&TrigPolySpec::zero().with(k.to_vec(), 1.0, 0.3), &g).unwrap();
            assert!(f.mean().abs() <= 1e-14);
        }
    }
    #[test]
    fn wirtinger_of_cosine() {
        let g = TorusGrid::z0_plane(2, 32).unwrap();
        let u = sample(&TrigPolySpec::zero().with(vec![1, 0], 1.0, 0.0), &g).unwrap();
        let dz = partial_z(&u, 0);
        let dzb = partial_zbar(&u, 0);
        for p in 0..g.len() {
            let x = g.coords(p)[0];
            let want = Complex64::new(-0.5 * x.sin(), 0.0);
            assert!((dz.values()[p] - want).norm() < 1e-14);
            assert!((dzb.values()[p] - want).norm() < 1e-14);
        }
        assert_eq!(partial_z(&u, 1).max_abs(), 0.0);
        assert_eq!(partial_z(&u, 3).max_abs(), 0.0);
    }

    #[test]
    fn wirtinger_of_imaginary_direction() {
        // u = cos(y^0): ∂_z u = ½(−i)(−sin y) = (i/2) sin y
        let g = TorusGrid::z0_plane(2, 16).unwrap();
        let u = sample(&TrigPolySpec::zero().with(vec![0, 1], 1.0, 0.0), &g).unwrap();
        let dz = partial_z(&u, 0);
        let dzb = partial_zbar(&u, 0);
        for p in 0..g.len() {
            let y = g.coords(p)[1];
            assert!((dz.values()[p] - Complex64::new(0.0, 0.5 * y.sin())).norm() < 1e-14);
            assert!((dzb.values()[p] - Complex64::new(0.0, -0.5 * y.sin())).norm() < 1e-14);
        }
    }

    #[test]
    fn mixed_wirtinger_derivatives_commute() {
        let g = TorusGrid::new(2, vec![0, 1, 4, 5], vec![8, 8, 8, 8]).unwrap();
        let spec = TrigPolySpec::zero()
            .with(vec![1, 2, 0, -1], 0.4, 0.3)
            .with(vec![0, 1, 3, 1], -0.2, 1.1)
            .with(vec![2, 0, 1, 0], 0.1, -0.7);
        let u = sample(&spec, &g).unwrap();
        for j in 0..4 {
            for k in 0..4 {
                let a = partial_zbar_complex(&partial_z(&u, j), k);
                let b = partial_z_complex(&partial_zbar(&u, k), j);
                assert!(a.max_abs_diff(&b) < 1e-12);
            }
        }
    }
}
