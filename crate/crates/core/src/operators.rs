//! Differential operators of the quaternionic Monge-Ampère flow over grid
//! fields: `∂_J`, the quaternionic Hessian `∂∂_J u`, `S_1`, the candidate form
//! `Ω̃`, the log-ratio right-hand side, the gradient and Laplacian quantities
//! β and η, the linearized operator and the hyperhermitian form `ω_u`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exterior::{
    positivity_matrix_unchecked, s1_standard, s_m, ExteriorElement, JRealTwoForm,
};
use crate::linalg::{hermitian_eigenvalues, CMat, Cholesky, MAX_DIM};
use crate::model::grid::{partial_z_complex, partial_zbar};
use crate::model::{j_coframe, ComplexField, RealMatrix, ScalarField, TorusGrid, TorusModel};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A [`JRealTwoForm`] at every grid point.
#[derive(Clone, Debug)]
pub struct TwoFormField {
    grid: Arc<TorusGrid>,
    forms: Vec<JRealTwoForm>,
}

impl TwoFormField {
    pub fn new(grid: Arc<TorusGrid>, forms: Vec<JRealTwoForm>) -> Result<Self> {
        if forms.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.sizes().to_vec(),
                found: vec![forms.len()],
            });
        }
        if forms.iter().any(|f| f.n() != grid.n()) {
            return Err(Error::Config(
                "form dimension does not match the grid".into(),
            ));
        }
        Ok(Self { grid, forms })
    }

    pub fn constant(grid: &Arc<TorusGrid>, form: &JRealTwoForm) -> Self {
        Self {
            grid: grid.clone(),
            forms: vec![*form; grid.len()],
        }
    }

    pub fn standard(grid: &Arc<TorusGrid>) -> Self {
        Self::constant(grid, &JRealTwoForm::standard(grid.n()))
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn at(&self, p: usize) -> &JRealTwoForm {
        &self.forms[p]
    }

    pub fn forms(&self) -> &[JRealTwoForm] {
        &self.forms
    }

    pub fn map(&self, f: impl Fn(usize, &JRealTwoForm) -> JRealTwoForm + Sync) -> Self {
        Self {
            grid: self.grid.clone(),
            forms: self
                .forms
                .par_iter()
                .enumerate()
                .map(|(p, a)| f(p, a))
                .collect(),
        }
    }

    /// Largest entrywise difference over all points.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.forms
            .iter()
            .zip(&other.forms)
            .fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }

    pub fn max_abs(&self) -> f64 {
        self.forms.iter().fold(0.0, |m, a| m.max(a.max_abs()))
    }
}

/// A (1,0)-form field `Σ_k a_k dz^k`, one complex field per component.
#[derive(Clone, Debug)]
pub struct OneFormField {
    components: Vec<ComplexField>,
}

impl OneFormField {
    pub fn components(&self) -> &[ComplexField] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &ComplexField {
        &self.components[k]
    }

    /// Component vector at grid point `p`.
    pub fn at(&self, p: usize) -> Vec<Complex64> {
        self.components.iter().map(|c| c.values()[p]).collect()
    }
}

/// Real (1,1)-form `(i/2) Σ h_{jk̄} dz^j ∧ dz̄^k` stored by its Hermitian
/// coefficient matrix; the flat Kähler form `Σ dx^k ∧ dy^k` has `h = I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealOneOneForm {
    h: CMat,
}

impl RealOneOneForm {
    pub fn from_hermitian(h: CMat) -> Self {
        Self { h }
    }

    /// The flat Kähler form.
    pub fn standard(n: usize) -> Self {
        Self {
            h: CMat::identity(2 * n),
        }
    }

    /// Recovers `h` from the real antisymmetric matrix `W_{ab} = ω(e_a, e_b)`
    /// in the basis `(∂_{x^0}, …, ∂_{x^{2n-1}}, ∂_{y^0}, …)`.
    pub fn from_real_matrix(w: &RealMatrix) -> Self {
        let d = w.dim() / 2;
        Self {
            h: CMat::from_fn(d, |j, k| Complex64::new(w.get(j, d + k), -w.get(j, k))),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.h
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.h.hermiticity_defect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.h)
    }

    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(&self.h, 0.0).is_some()
    }

    /// `ω^{2n} / ω_0^{2n}` against the flat Kähler form, i.e. `det h`.
    pub fn volume_ratio(&self) -> f64 {
        self.h.determinant().re
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.h.max_abs_diff(&other.h)
    }
}

/// A [`RealOneOneForm`] at every grid point.
#[derive(Clone, Debug)]
pub struct RealOneOneFormField {
    grid: Arc<TorusGrid>,
    forms: Vec<RealOneOneForm>,
}

impl RealOneOneFormField {
    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn at(&self, p: usize) -> &RealOneOneForm {
        &self.forms[p]
    }

    pub fn forms(&self) -> &[RealOneOneForm] {
        &self.forms
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.forms
            .iter()
            .zip(&other.forms)
            .fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }
}

/// Spectral first and second real derivatives of a scalar field along its
/// active coordinates.
#[derive(Clone, Debug)]
pub struct Jet {
    grid: Arc<TorusGrid>,
    // (complex index, lies along y) for every active axis
    axes: Vec<(usize, bool)>,
    grad: Option<Vec<Vec<f64>>>,
    // packed upper triangle, (a, b) with a <= b
    hess: Vec<Vec<f64>>,
    tail: f64,
}

fn pair_index(a: usize, b: usize, d: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * d - a * (a + 1) / 2 + b
}

impl Jet {
    pub fn new(u: &ScalarField) -> Self {
        Self::build(u, true)
    }

    /// Hessian only; the gradient accessors must not be used on the result.
    pub fn second_order(u: &ScalarField) -> Self {
        Self::build(u, false)
    }

    fn build(u: &ScalarField, with_gradient: bool) -> Self {
        let grid = u.grid().clone();
        let n = grid.n();
        let sp = grid.spectral();
        let spectrum = sp.forward_real(u.values());
        let d = grid.active_dims().len();
        let axes = grid
            .active_dims()
            .iter()
            .map(|&dim| (dim % (2 * n), dim >= 2 * n))
            .collect();
        let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a..d).map(move |b| (a, b))).collect();
        // multiplier of each requested derivative: Some(axis) for ∂_a, None then a Hessian pair
        let mut wanted: Vec<(Option<usize>, usize)> = Vec::new();
        if with_gradient {
            wanted.extend((0..d).map(|a| (Some(a), 0)));
        }
        wanted.extend((0..pairs.len()).map(|i| (None, i)));
        let multiplier = |w: (Option<usize>, usize), flat: usize| match w {
            (Some(a), _) => Complex64::new(0.0, sp.axis_wavenumbers(a)[flat]),
            (None, i) => {
                let (a, b) = pairs[i];
                Complex64::new(
                    -sp.axis_wavenumbers(a)[flat] * sp.axis_wavenumbers(b)[flat],
                    0.0,
                )
            }
        };
        // two real fields per complex inverse transform
        let fields: Vec<Vec<f64>> = wanted
            .par_chunks(2)
            .flat_map_iter(|chunk| {
                let first = chunk[0];
                match chunk.get(1) {
                    Some(&second) => {
                        let (x, y) = sp.real_multiplier_pair(
                            &spectrum,
                            |f| multiplier(first, f),
                            |f| multiplier(second, f),
                        );
                        vec![x, y]
                    }
                    None => vec![sp.real_multiplier(&spectrum, |f| multiplier(first, f))],
                }
            })
            .collect();
        let mut fields = fields.into_iter();
        let grad = with_gradient.then(|| fields.by_ref().take(d).collect());
        let hess = fields.collect();
        let tail = sp.tail_fraction(&spectrum);
        Self {
            grid,
            axes,
            grad,
            hess,
            tail,
        }
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    fn grad_axes(&self) -> &[Vec<f64>] {
        self.grad
            .as_deref()
            .expect("jet was built without its gradient")
    }

    /// Energy fraction of the field's spectrum in the top third of modes.
    pub fn spectral_tail(&self) -> f64 {
        self.tail
    }

    /// `u_k = ∂_{z^k} u` at point `p`.
    pub fn gradient(&self, p: usize) -> [Complex64; MAX_DIM] {
        let mut g = [ZERO; MAX_DIM];
        for (a, &(k, is_y)) in self.axes.iter().enumerate() {
            let r = self.grad_axes()[a][p];
            if is_y {
                g[k] += Complex64::new(0.0, -0.5 * r);
            } else {
                g[k] += Complex64::new(0.5 * r, 0.0);
            }
        }
        g
    }

    /// Squared Euclidean norm of the real gradient at `p`.
    pub fn gradient_norm_sqr(&self, p: usize) -> f64 {
        self.grad_axes().iter().map(|g| g[p] * g[p]).sum()
    }

    /// Complex Hessian `H_{jk} = ∂_{z^j} ∂_{z̄^k} u` at point `p`.
    pub fn hessian(&self, p: usize) -> CMat {
        let dim = 2 * self.grid.n();
        let d = self.axes.len();
        let mut h = CMat::zeros(dim);
        for a in 0..d {
            let (j, yj) = self.axes[a];
            for b in 0..d {
                let (k, yk) = self.axes[b];
                let r = 0.25 * self.hess[pair_index(a, b, d)][p];
                // ∂_j ∂̄_k = ¼(∂_{xj}∂_{xk} + ∂_{yj}∂_{yk} + i∂_{xj}∂_{yk} − i∂_{yj}∂_{xk})
                h[(j, k)] += match (yj, yk) {
                    (false, false) | (true, true) => Complex64::new(r, 0.0),
                    (false, true) => Complex64::new(0.0, r),
                    (true, false) => Complex64::new(0.0, -r),
                };
            }
        }
        h
    }

    pub(crate) fn hessian_small<const D: usize>(&self, p: usize) -> [[Complex64; D]; D] {
        let d = self.axes.len();
        let mut h = [[ZERO; D]; D];
        for a in 0..d {
            let (j, yj) = self.axes[a];
            for b in a..d {
                let (k, yk) = self.axes[b];
                let r = 0.25 * self.hess[pair_index(a, b, d)][p];
                let v = match (yj, yk) {
                    (false, false) | (true, true) => Complex64::new(r, 0.0),
                    (false, true) => Complex64::new(0.0, r),
                    (true, false) => Complex64::new(0.0, -r),
                };
                h[j][k] += v;
                if a != b {
                    h[k][j] += v.conj();
                }
            }
        }
        h
    }

    /// `Σ_k u_{kk̄}`, a quarter of the real Laplacian.
    pub fn laplacian_quarter(&self, p: usize) -> f64 {
        let d = self.axes.len();
        0.25 * (0..d)
            .map(|a| self.hess[pair_index(a, a, d)][p])
            .sum::<f64>()
    }
}

/// `∂∂_J u` from the complex Hessian: `H Tᵀ − T Hᵀ`.
pub fn quaternionic_hessian(h: &CMat) -> CMat {
    let dim = h.dim();
    // T has a single entry per row: T[k][k^1] = −1 for even k, +1 for odd k
    let s = |k: usize| if k.is_multiple_of(2) { -1.0 } else { 1.0 };
    CMat::from_fn(dim, |j, k| s(k) * h[(j, k ^ 1)] - s(j) * h[(k, j ^ 1)])
}

/// `Ω_h + (S_1(χ) Ω − χ) / (n − 1)` for a standard Ω.
pub fn candidate_form(omega_h: &JRealTwoForm, chi: &CMat) -> JRealTwoForm {
    let n = omega_h.n();
    let dim = 2 * n;
    let s1: Complex64 = (0..n).map(|i| chi[(2 * i, 2 * i + 1)]).sum();
    let inv = 1.0 / (n as f64 - 1.0);
    let mut m = *omega_h.matrix();
    for j in 0..dim {
        for k in 0..dim {
            m[(j, k)] -= chi[(j, k)] * inv;
        }
    }
    for i in 0..n {
        m[(2 * i, 2 * i + 1)] += s1 * inv;
        m[(2 * i + 1, 2 * i)] -= s1 * inv;
    }
    JRealTwoForm::from_matrix_unchecked(m)
}

/// `∂_J u`; component `k` is `Σ_l T_{kl} u_{l̄}`.
pub fn d_j(u: &ScalarField) -> OneFormField {
    let grid = u.grid();
    let dim = 2 * grid.n();
    let t = j_coframe(dim);
    let bar: Vec<ComplexField> = (0..dim).map(|l| partial_zbar(u, l)).collect();
    let components = (0..dim)
        .map(|k| {
            let mut out = ComplexField::zeros(grid);
            for l in 0..dim {
                let tkl = t[(k, l)];
                if tkl == ZERO {
                    continue;
                }
                for (o, v) in out.values_mut().iter_mut().zip(bar[l].values()) {
                    *o += tkl * v;
                }
            }
            out
        })
        .collect();
    OneFormField { components }
}

/// `∂∂_J u` as `∂_{z^j}(∂_J u)_k − ∂_{z^k}(∂_J u)_j`.
pub fn del_del_j(u: &ScalarField) -> TwoFormField {
    let grid = u.grid().clone();
    let n = grid.n();
    let dim = 2 * n;
    let dj = d_j(u);
    // dz[j][k] = ∂_{z^j} (∂_J u)_k
    let dz: Vec<Vec<ComplexField>> = (0..dim)
        .map(|j| {
            (0..dim)
                .map(|k| partial_z_complex(dj.component(k), j))
                .collect()
        })
        .collect();
    let forms = (0..grid.len())
        .map(|p| {
            let m = CMat::from_fn(dim, |j, k| dz[j][k].values()[p] - dz[k][j].values()[p]);
            JRealTwoForm::from_matrix_unchecked(m)
        })
        .collect();
    TwoFormField { grid, forms }
}

/// `∂∂_J u` assembled pointwise from the real Hessian.
pub fn del_del_j_from_hessian(u: &ScalarField) -> TwoFormField {
    let jet = Jet::new(u);
    let grid = u.grid().clone();
    let forms = (0..grid.len())
        .into_par_iter()
        .map(|p| JRealTwoForm::from_matrix_unchecked(quaternionic_hessian(&jet.hessian(p))))
        .collect();
    TwoFormField { grid, forms }
}

/// Pointwise `S_1` against the standard Ω.
pub fn s1_field(chi: &TwoFormField) -> ScalarField {
    let values = chi.forms.iter().map(|a| s1_standard(a).re).collect();
    ScalarField::new(chi.grid.clone(), values).expect("field length matches grid")
}

/// `Ω̃(u) = Ω_h + (S_1(∂∂_J u) Ω − ∂∂_J u) / (n − 1)`.
pub fn omega_tilde(u: &ScalarField, omega_h: &TwoFormField) -> Result<TwoFormField> {
    check_grids(u.grid(), omega_h.grid())?;
    let jet = Jet::new(u);
    Ok(omega_h.map(|p, oh| candidate_form(oh, &quaternionic_hessian(&jet.hessian(p)))))
}

fn check_grids(a: &Arc<TorusGrid>, b: &Arc<TorusGrid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

fn positivity_error(grid: &TorusGrid, p: usize, alpha: &JRealTwoForm) -> Error {
    let min_eig = hermitian_eigenvalues(&positivity_matrix_unchecked(alpha))[0];
    Error::Positivity {
        point: p,
        coords: grid.coords(p),
        min_eig,
    }
}

/// Pointwise log-ratio `log(Ω̃^n / Ω^n)` with its CFL weight `½ tr M⁻¹`.
#[derive(Clone, Debug)]
pub struct LogRatio {
    pub log_ratio: ScalarField,
    /// `max_x Σ_i 1/λ_i(x)` over the paired eigenvalues of the positivity matrix.
    pub kappa: f64,
    /// Gershgorin lower bound and smallest diagonal entry of `M(Ω̃)` per point.
    pub bounds: Vec<(f64, f64)>,
}

/// Evaluates `log(Pf(Ω̃)/Pf(Ω))` at every point of the jet's grid, requiring
/// every eigenvalue of the positivity matrix of `Ω̃` to exceed `margin`.
pub fn log_ratio_from_jet(jet: &Jet, omega_h: &TwoFormField, margin: f64) -> Result<LogRatio> {
    check_grids(jet.grid(), omega_h.grid())?;
    match 2 * jet.grid().n() {
        4 => log_ratio_sized::<4>(jet, omega_h, margin),
        6 => log_ratio_sized::<6>(jet, omega_h, margin),
        8 => log_ratio_sized::<8>(jet, omega_h, margin),
        d => Err(Error::UnsupportedDimension { n: d / 2 }),
    }
}

type Small<const D: usize> = [[Complex64; D]; D];

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        -1.0
    } else {
        1.0
    }
}

/// Lower triangle of `M(Ω̃)` at `p`, assembled as
/// `M(Ω_h) + (tr H · I − H − TᵀHᵀT) / (n − 1)`.
fn candidate_positivity<const D: usize>(jet: &Jet, omega_h: &JRealTwoForm, p: usize) -> Small<D> {
    let h = jet.hessian_small::<D>(p);
    let a = omega_h.matrix();
    let inv = 1.0 / (D as f64 / 2.0 - 1.0);
    let tr: f64 = (0..D).map(|i| h[i][i].re).sum();
    let mut m = [[ZERO; D]; D];
    for j in 0..D {
        for k in 0..=j {
            let mh = -sign(k) * a[(j, k ^ 1)];
            let chi = h[j][k] + sign(j) * sign(k) * h[k ^ 1][j ^ 1];
            m[j][k] = mh - chi * inv;
        }
        m[j][j] = Complex64::new(m[j][j].re + tr * inv, 0.0);
    }
    m
}

fn cholesky_small<const D: usize>(m: &Small<D>, shift: f64) -> Option<Small<D>> {
    let mut l = [[ZERO; D]; D];
    for j in 0..D {
        let mut diag = m[j][j].re - shift;
        for k in 0..j {
            diag -= l[j][k].norm_sqr();
        }
        if !(diag > 0.0) {
            return None;
        }
        let ljj = diag.sqrt();
        l[j][j] = Complex64::new(ljj, 0.0);
        let r = 1.0 / ljj;
        for i in j + 1..D {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = s * r;
        }
    }
    Some(l)
}

// ||L^{-1}||_F^2
fn trace_inverse_small<const D: usize>(l: &Small<D>) -> f64 {
    let mut total = 0.0;
    for c in 0..D {
        let mut x = [ZERO; D];
        for i in c..D {
            let mut s = if i == c {
                Complex64::new(1.0, 0.0)
            } else {
                ZERO
            };
            for k in c..i {
                s -= l[i][k] * x[k];
            }
            x[i] = s / l[i][i].re;
            total += x[i].norm_sqr();
        }
    }
    total
}

// (Gershgorin lower bound, smallest diagonal entry) from the lower triangle
fn gershgorin_small<const D: usize>(m: &Small<D>) -> (f64, f64) {
    let mut radius = [0.0; D];
    for i in 0..D {
        for j in 0..i {
            let r = m[i][j].norm_sqr().sqrt();
            radius[i] += r;
            radius[j] += r;
        }
    }
    let mut lower = f64::INFINITY;
    let mut diag = f64::INFINITY;
    for i in 0..D {
        lower = lower.min(m[i][i].re - radius[i]);
        diag = diag.min(m[i][i].re);
    }
    (lower, diag)
}

fn log_ratio_sized<const D: usize>(
    jet: &Jet,
    omega_h: &TwoFormField,
    margin: f64,
) -> Result<LogRatio> {
    let grid = jet.grid();
    // Pf(Ω̃)/Pf(Ω) = sqrt(det M(Ω̃)) on the positive cone
    let per_point: Vec<Option<(f64, f64, (f64, f64))>> = (0..grid.len())
        .into_par_iter()
        .with_min_len(512)
        .map(|p| {
            let m = candidate_positivity::<D>(jet, omega_h.at(p), p);
            let bounds = gershgorin_small(&m);
            if margin > 0.0 && bounds.0 <= margin {
                cholesky_small(&m, margin)?;
            }
            let l = cholesky_small(&m, 0.0)?;
            let log_ratio = (0..D).map(|i| l[i][i].re).product::<f64>().ln();
            Some((log_ratio, 0.5 * trace_inverse_small(&l), bounds))
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut bounds = Vec::with_capacity(grid.len());
    let mut kappa: f64 = 0.0;
    for (p, v) in per_point.into_iter().enumerate() {
        match v {
            Some((l, k, b)) => {
                values.push(l);
                bounds.push(b);
                kappa = kappa.max(k);
            }
            None => {
                let alpha = candidate_form(omega_h.at(p), &quaternionic_hessian(&jet.hessian(p)));
                return Err(positivity_error(grid, p, &alpha));
            }
        }
    }
    Ok(LogRatio {
        log_ratio: ScalarField::new(grid.clone(), values)?,
        kappa,
        bounds,
    })
}

/// Gershgorin lower bound and smallest diagonal entry of `M(Ω̃)` at every point.
pub fn positivity_bounds(jet: &Jet, omega_h: &TwoFormField) -> Vec<(f64, f64)> {
    fn sized<const D: usize>(jet: &Jet, omega_h: &TwoFormField) -> Vec<(f64, f64)> {
        (0..jet.grid().len())
            .into_par_iter()
            .with_min_len(512)
            .map(|p| gershgorin_small(&candidate_positivity::<D>(jet, omega_h.at(p), p)))
            .collect()
    }
    match 2 * jet.grid().n() {
        4 => sized::<4>(jet, omega_h),
        6 => sized::<6>(jet, omega_h),
        _ => sized::<8>(jet, omega_h),
    }
}

/// `M(Ω̃)` at a single point.
pub fn candidate_positivity_at(jet: &Jet, omega_h: &TwoFormField, p: usize) -> CMat {
    fn sized<const D: usize>(jet: &Jet, omega_h: &TwoFormField, p: usize) -> CMat {
        let m = candidate_positivity::<D>(jet, omega_h.at(p), p);
        CMat::from_fn(D, |j, k| if k <= j { m[j][k] } else { m[k][j].conj() })
    }
    match 2 * jet.grid().n() {
        4 => sized::<4>(jet, omega_h, p),
        6 => sized::<6>(jet, omega_h, p),
        _ => sized::<8>(jet, omega_h, p),
    }
}

/// `u_t = log(Ω̃^n/Ω^n) − f`; fails where `Ω̃` is not strictly positive.
pub fn flow_rhs(u: &ScalarField, omega_h: &TwoFormField, f: &ScalarField) -> Result<ScalarField> {
    let lr = log_ratio_from_jet(&Jet::new(u), omega_h, 0.0)?;
    lr.log_ratio.sub(f)
}

/// `β = ¼|du|²` with the flat metric.
pub fn beta(u: &ScalarField) -> ScalarField {
    let jet = Jet::new(u);
    let values = (0..u.grid().len())
        .map(|p| 0.25 * jet.gradient_norm_sqr(p))
        .collect();
    ScalarField::new(u.grid().clone(), values).expect("field length matches grid")
}

/// `β = n ∂u ∧ ∂_J u ∧ Ω^{n−1} / Ω^n` through exterior algebra.
pub fn beta_wedge(u: &ScalarField) -> Result<ScalarField> {
    let grid = u.grid();
    let n = grid.n();
    let dim = 2 * n;
    let du: Vec<ComplexField> = (0..dim)
        .map(|k| crate::model::grid::partial_z(u, k))
        .collect();
    let dj = d_j(u);
    let omega = JRealTwoForm::standard(n);
    let values = (0..grid.len())
        .map(|p| {
            let a: Vec<Complex64> = du.iter().map(|c| c.values()[p]).collect();
            let gamma = JRealTwoForm::wedge_one_forms(&a, &dj.at(p));
            s_m(&gamma, &omega, 1).map(|s| s.re)
        })
        .collect::<Result<Vec<f64>>>()?;
    ScalarField::new(grid.clone(), values)
}

/// `η = S_1(∂∂_J u)`.
pub fn eta(u: &ScalarField) -> ScalarField {
    s1_field(&del_del_j(u))
}

/// `(n−1)Ω_h − S_1(Ω_h)Ω + S_1(Ω̃)Ω − (n−1)Ω̃`, which reproduces `∂∂_J u`.
pub fn reconstruct_hessian(omega_tilde: &JRealTwoForm, omega_h: &JRealTwoForm) -> JRealTwoForm {
    let n = omega_h.n();
    let omega = JRealTwoForm::standard(n);
    let k = n as f64 - 1.0;
    let ds = s1_standard(omega_tilde) - s1_standard(omega_h);
    omega_h
        .scale(k)
        .add(&omega.scale_complex(ds))
        .sub(&omega_tilde.scale(k))
}

/// `A = n/(n−1)·(S_{n−1}(Ω̃) Ω^{n−1} − Ω̃^{n−1})` and `Ω̃^n` top coefficient.
fn linearization_kernel(alpha: &JRealTwoForm) -> Result<(ExteriorElement, Complex64)> {
    let n = alpha.n();
    let omega = JRealTwoForm::standard(n);
    let s = s_m(alpha, &omega, n - 1)?;
    let om = ExteriorElement::from_two_form(&omega).power(n - 1);
    let at = ExteriorElement::from_two_form(alpha);
    let a = om
        .scale(s)
        .add(&at.power(n - 1).scale(Complex64::new(-1.0, 0.0)))?;
    let scale = n as f64 / (n as f64 - 1.0);
    Ok((
        a.scale(Complex64::new(scale, 0.0)),
        at.power(n).top_coefficient(),
    ))
}

/// `L_u v = A ∧ ∂∂_J v / Ω̃^n`, the spatial part of the linearized flow.
pub fn apply_linearized(
    u: &ScalarField,
    v: &ScalarField,
    omega_h: &TwoFormField,
) -> Result<ScalarField> {
    check_grids(u.grid(), v.grid())?;
    let grid = u.grid();
    let ot = omega_tilde(u, omega_h)?;
    for p in 0..grid.len() {
        if Cholesky::new(&positivity_matrix_unchecked(ot.at(p)), 0.0).is_none() {
            return Err(positivity_error(grid, p, ot.at(p)));
        }
    }
    let jv = Jet::new(v);
    let values = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            let (a, top) = linearization_kernel(ot.at(p))?;
            let q = JRealTwoForm::from_matrix_unchecked(quaternionic_hessian(&jv.hessian(p)));
            let num = a
                .wedge(&ExteriorElement::from_two_form(&q))?
                .top_coefficient();
            Ok((num / top).re)
        })
        .collect::<Result<Vec<f64>>>()?;
    ScalarField::new(grid.clone(), values)
}

/// `ω_α(X, Y) = Re α(IX, JY)` for a J-real (2,0)-form α.
pub fn hyperhermitian_form(model: &TorusModel, alpha: &JRealTwoForm) -> RealOneOneForm {
    let d = model.complex_dim();
    let m = 2 * d;
    let ri = model.real_i();
    let rj = model.real_j();
    // (1,0) components ξ_k = X^k + i Y^k of the images of the basis vectors
    let components = |mat: &RealMatrix, b: usize| -> Vec<Complex64> {
        (0..d)
            .map(|k| Complex64::new(mat.get(k, b), mat.get(d + k, b)))
            .collect()
    };
    let ix: Vec<Vec<Complex64>> = (0..m).map(|b| components(&ri, b)).collect();
    let jy: Vec<Vec<Complex64>> = (0..m).map(|b| components(&rj, b)).collect();
    let am = alpha.matrix();
    let mut w = RealMatrix::zeros(m);
    for a in 0..m {
        for b in 0..m {
            let mut s = ZERO;
            for j in 0..d {
                if ix[a][j] == ZERO {
                    continue;
                }
                for k in 0..d {
                    s += am[(j, k)] * ix[a][j] * jy[b][k];
                }
            }
            w.set(a, b, s.re);
        }
    }
    RealOneOneForm::from_real_matrix(&w)
}

/// `ω_u` from the metric `g_u = Re Ω̃(·, J·)`.
pub fn omega_u(u: &ScalarField, omega_h: &TwoFormField) -> Result<RealOneOneFormField> {
    let model = crate::model::build_model(u.grid().n())?;
    let ot = omega_tilde(u, omega_h)?;
    let grid = u.grid().clone();
    let forms: Vec<RealOneOneForm> = ot
        .forms
        .par_iter()
        .map(|a| hyperhermitian_form(&model, a))
        .collect();
    for (p, f) in forms.iter().enumerate() {
        if !f.is_positive_definite() {
            return Err(positivity_error(&grid, p, ot.at(p)));
        }
    }
    Ok(RealOneOneFormField { grid, forms })
}

/// `ω_u = ω_h + (S_1(∂∂_J u) ω − ½(i∂∂̄u − iJ∂∂̄u)) / (n − 1)`.
pub fn omega_u_from_hessian(
    u: &ScalarField,
    omega_h: &TwoFormField,
) -> Result<RealOneOneFormField> {
    check_grids(u.grid(), omega_h.grid())?;
    let model = crate::model::build_model(u.grid().n())?;
    let grid = u.grid().clone();
    let n = grid.n();
    let dim = 2 * n;
    let jet = Jet::new(u);
    let inv = 1.0 / (n as f64 - 1.0);
    let forms: Vec<RealOneOneForm> = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            let h = jet.hessian(p);
            let s1 = h.trace();
            let wh = hyperhermitian_form(&model, omega_h.at(p));
            // i∂∂̄u has coefficient matrix 2H in the (i/2)-normalization
            let ddbar = h.scale(Complex64::new(2.0, 0.0));
            let j_ddbar = model.j_one_one_form(&h).scale(Complex64::new(2.0, 0.0));
            let half = ddbar.sub(&j_ddbar).scale(Complex64::new(0.5, 0.0));
            let corr = CMat::identity(dim)
                .scale(s1)
                .sub(&half)
                .scale(Complex64::new(inv, 0.0));
            RealOneOneForm::from_hermitian(wh.matrix().add(&corr))
        })
        .collect();
    Ok(RealOneOneFormField { grid, forms })
}

/// `|ω_u^{2n}/ω^{2n} − e^{2(u_t + f)}| / e^{2(u_t + f)}`, maximized over the grid.
pub fn volume_form_defect(omega_u: &RealOneOneFormField, u_t_plus_f: &ScalarField) -> f64 {
    omega_u
        .forms
        .iter()
        .zip(u_t_plus_f.values())
        .fold(0.0, |m, (w, &s)| {
            let want = (2.0 * s).exp();
            m.max((w.volume_ratio() - want).abs() / want)
        })
}

/// Top coefficients of `Ω^n∧Ω̄^n/(n!)²` and `ω̂^{2n}/(2n)!` for a J-real α and
/// the (1,1)-form `ω̂ = √−1 Σ g_{jk̄} dz^j∧dz̄^k` with `g` its positivity matrix,
/// over the ordered basis `dz^0…dz^{2n−1} dz̄^0…dz̄^{2n−1}`.
pub fn volume_identity_sides(alpha: &JRealTwoForm) -> Result<(Complex64, Complex64)> {
    let n = alpha.n();
    let d = 2 * n;
    let gens = 2 * d;
    let a = ExteriorElement::from_matrix_two_form(gens, alpha.matrix(), 0, false);
    let abar = ExteriorElement::from_matrix_two_form(gens, alpha.matrix(), d, true);
    let lhs = a.power(n).wedge(&abar.power(n))?.top_coefficient() / (factorial(n).powi(2));
    let g = positivity_matrix_unchecked(alpha);
    let mut w = ExteriorElement::zero(gens);
    for j in 0..d {
        for k in 0..d {
            if g[(j, k)] == ZERO {
                continue;
            }
            let c = Complex64::new(0.0, 1.0) * g[(j, k)];
            w = w.add(&ExteriorElement::monomial(gens, &[j, d + k], c)?)?;
        }
    }
    let rhs = w.power(d).top_coefficient() / factorial(d);
    Ok((lhs, rhs))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}
