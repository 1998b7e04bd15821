//! Pointwise multilinear algebra for (2,0)-forms on a 2n-dimensional complex
//! vector space.
//!
//! Two evaluation routes are kept side by side: an exact subset-indexed
//! exterior algebra ([`ExteriorElement`]) which expands every wedge product
//! term by term, and Pfaffian-based closed forms used in the flow loop.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMat, Cholesky, MAX_DIM};
use crate::model::j_coframe;

/// Largest generator count of an [`ExteriorElement`]: 2n holomorphic plus 2n
/// antiholomorphic generators for n = 4.
pub const MAX_GENERATORS: usize = 16;

/// Default positivity margin for [`is_strictly_positive`].
pub const DEFAULT_MARGIN: f64 = 1e-10;

/// Relative Hermiticity tolerance for positivity matrices of J-real forms.
const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Sign of `e_a ∧ e_b` relative to the sorted monomial on `a | b`.
#[inline]
fn merge_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inversions += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Element of the even part of an exterior algebra on `generators` generators.
///
/// Keys are bitmasks of generator subsets; every stored key has even
/// cardinality, so the algebra is commutative.
#[derive(Clone, Debug, PartialEq)]
pub struct ExteriorElement {
    generators: usize,
    coeffs: BTreeMap<u32, Complex64>,
}

impl ExteriorElement {
    pub fn zero(generators: usize) -> Self {
        assert!(generators <= MAX_GENERATORS);
        Self {
            generators,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn scalar(generators: usize, c: Complex64) -> Self {
        let mut e = Self::zero(generators);
        e.add_term(0, c);
        e
    }

    /// `c · e_{i_1} ∧ ... ∧ e_{i_k}` in the given (not necessarily sorted) order.
    pub fn monomial(generators: usize, indices: &[usize], c: Complex64) -> Result<Self> {
        if !indices.len().is_multiple_of(2) {
            return Err(Error::OddDegree {
                degree: indices.len(),
            });
        }
        let mut mask = 0u32;
        let mut sign = 1.0;
        for &i in indices {
            assert!(i < generators, "generator {i} out of range");
            let bit = 1u32 << i;
            if mask & bit != 0 {
                return Ok(Self::zero(generators));
            }
            sign *= merge_sign(mask, bit);
            mask |= bit;
        }
        let mut e = Self::zero(generators);
        e.add_term(mask, c * sign);
        Ok(e)
    }

    /// The 2-form `Σ_{j<k} α_{jk} e_j ∧ e_k` on the first `dim` generators.
    pub fn from_two_form(alpha: &JRealTwoForm) -> Self {
        Self::from_matrix_two_form(alpha.dim(), alpha.matrix(), 0, false)
    }

    /// Embeds a 2-form into a larger algebra with its generators shifted by
    /// `offset`, optionally conjugating the coefficients.
    pub fn from_matrix_two_form(
        generators: usize,
        m: &CMat,
        offset: usize,
        conjugate: bool,
    ) -> Self {
        let d = m.dim();
        assert!(offset + d <= generators);
        let mut e = Self::zero(generators);
        for j in 0..d {
            for k in j + 1..d {
                let c = if conjugate {
                    m[(j, k)].conj()
                } else {
                    m[(j, k)]
                };
                e.add_term((1u32 << (j + offset)) | (1u32 << (k + offset)), c);
            }
        }
        e
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn coefficient(&self, mask: u32) -> Complex64 {
        self.coeffs.get(&mask).copied().unwrap_or(ZERO)
    }

    /// Coefficient of `e_0 ∧ ... ∧ e_{generators-1}`.
    pub fn top_coefficient(&self) -> Complex64 {
        let mask = if self.generators == 32 {
            u32::MAX
        } else {
            (1u32 << self.generators) - 1
        };
        self.coefficient(mask)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, Complex64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    fn add_term(&mut self, mask: u32, c: Complex64) {
        if c == ZERO {
            return;
        }
        let slot = self.coeffs.entry(mask).or_insert(ZERO);
        *slot += c;
        if *slot == ZERO {
            self.coeffs.remove(&mask);
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m, c);
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.generators);
        for (m, c) in self.terms() {
            out.add_term(m, c * s);
        }
        out
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.generators != other.generators {
            return Err(Error::MismatchedGenerators {
                left: self.generators,
                right: other.generators,
            });
        }
        Ok(())
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Self::zero(self.generators);
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                if ma & mb != 0 {
                    continue;
                }
                out.add_term(ma | mb, ca * cb * merge_sign(ma, mb));
            }
        }
        Ok(out)
    }

    /// `self^k`, with `self^0 = 1`.
    pub fn power(&self, k: usize) -> Self {
        let mut out = Self::scalar(self.generators, Complex64::new(1.0, 0.0));
        for _ in 0..k {
            out = out.wedge(self).expect("same algebra");
        }
        out
    }
}

/// Free-function form of [`ExteriorElement::wedge`].
pub fn wedge(a: &ExteriorElement, b: &ExteriorElement) -> Result<ExteriorElement> {
    a.wedge(b)
}

/// A (2,0)-form at a point, `Σ_{j<k} α_{jk} dz^j ∧ dz^k`, stored as the full
/// antisymmetric coefficient matrix.
///
/// J-reality is a testable property ([`j_reality_defect`]), not a type
/// invariant: wedge products of 1-forms are also carried in this type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JRealTwoForm {
    n: usize,
    m: CMat,
}

impl JRealTwoForm {
    pub fn zero(n: usize) -> Self {
        assert!(2 * n <= MAX_DIM && n >= 1);
        Self {
            n,
            m: CMat::zeros(2 * n),
        }
    }

    /// The standard form `Σ_i dz^{2i} ∧ dz^{2i+1}`.
    pub fn standard(n: usize) -> Self {
        let mut f = Self::zero(n);
        for i in 0..n {
            f.set(2 * i, 2 * i + 1, Complex64::new(1.0, 0.0));
        }
        f
    }

    /// Block-diagonal form `Σ_i λ_i dz^{2i} ∧ dz^{2i+1}`.
    pub fn block_diagonal(blocks: &[f64]) -> Self {
        let mut f = Self::zero(blocks.len());
        for (i, &b) in blocks.iter().enumerate() {
            f.set(2 * i, 2 * i + 1, Complex64::new(b, 0.0));
        }
        f
    }

    /// Wraps a matrix, checking antisymmetry to `1e-13` relative.
    pub fn from_matrix(m: CMat) -> Result<Self> {
        let d = m.dim();
        if !d.is_multiple_of(2) || d == 0 {
            return Err(Error::NotAntisymmetric { defect: f64::NAN });
        }
        let defect = m.max_abs_diff(&m.transpose().scale(Complex64::new(-1.0, 0.0)));
        if defect > 1e-13 * m.max_abs().max(1.0) {
            return Err(Error::NotAntisymmetric { defect });
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Antisymmetrizes `m` without checking.
    pub fn from_matrix_unchecked(m: CMat) -> Self {
        let d = m.dim();
        let mut f = Self::zero(d / 2);
        for j in 0..d {
            for k in j + 1..d {
                f.set(j, k, 0.5 * (m[(j, k)] - m[(k, j)]));
            }
        }
        f
    }

    /// Antisymmetrized outer product: the 2-form `a ∧ b` of two (1,0)-forms.
    pub fn wedge_one_forms(a: &[Complex64], b: &[Complex64]) -> Self {
        assert_eq!(a.len(), b.len());
        let mut f = Self::zero(a.len() / 2);
        for j in 0..a.len() {
            for k in j + 1..a.len() {
                f.set(j, k, a[j] * b[k] - a[k] * b[j]);
            }
        }
        f
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    #[inline]
    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    #[inline]
    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.m[(j, k)]
    }

    /// Sets `α_{jk}` and `α_{kj} = -α_{jk}`.
    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: Complex64) {
        assert!(j != k || v == ZERO, "diagonal of a 2-form must vanish");
        self.m[(j, k)] = v;
        self.m[(k, j)] = -v;
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            m: self.m.add(&other.m),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            m: self.m.sub(&other.m),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            m: self.m.scale(Complex64::new(s, 0.0)),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            m: self.m.scale(s),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.m.max_abs()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m.max_abs_diff(&other.m)
    }

    /// Coefficients of the (0,2)-form `Jα` in the `dz̄^l ∧ dz̄^m` basis.
    pub fn apply_j(&self) -> CMat {
        let t = j_coframe(self.dim());
        t.transpose().mul(&self.m).mul(&t)
    }
}

/// Hermitian matrix `M_{jk} = α(e_j, J ē_k)` attached to a J-real 2-form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianPositivityMatrix {
    m: CMat,
}

impl HermitianPositivityMatrix {
    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.m.hermiticity_defect()
    }
}

/// Pfaffian of an antisymmetric matrix by skew-symmetric Gaussian elimination
/// with pivoting (the `L T L^T` reduction).
pub fn pfaffian_matrix(m: &CMat) -> Complex64 {
    let n = m.dim();
    if n % 2 == 1 {
        return ZERO;
    }
    let mut a = *m;
    let mut pf = Complex64::new(1.0, 0.0);
    let mut k = 0;
    while k + 1 < n {
        // pivot the largest entry of column k below the diagonal into row k+1
        let mut kp = k + 1;
        let mut best = a[(k + 1, k)].norm();
        for i in k + 2..n {
            let v = a[(i, k)].norm();
            if v > best {
                best = v;
                kp = i;
            }
        }
        if kp != k + 1 {
            for j in 0..n {
                let tmp = a[(k + 1, j)];
                a[(k + 1, j)] = a[(kp, j)];
                a[(kp, j)] = tmp;
            }
            for i in 0..n {
                let tmp = a[(i, k + 1)];
                a[(i, k + 1)] = a[(i, kp)];
                a[(i, kp)] = tmp;
            }
            pf = -pf;
        }
        if a[(k + 1, k)] == ZERO {
            return ZERO;
        }
        let pivot = a[(k, k + 1)];
        pf *= pivot;
        if k + 2 < n {
            let mut tau = [ZERO; MAX_DIM];
            for j in k + 2..n {
                tau[j] = a[(k, j)] / pivot;
            }
            for i in k + 2..n {
                for j in k + 2..n {
                    let upd = tau[i] * a[(j, k + 1)] - a[(i, k + 1)] * tau[j];
                    a[(i, j)] += upd;
                }
            }
        }
        k += 2;
    }
    pf
}

/// `Pf(α)`, normalized so that `α^n = n! Pf(α) dz^0 ∧ ... ∧ dz^{2n-1}`.
pub fn pfaffian(alpha: &JRealTwoForm) -> Complex64 {
    pfaffian_matrix(alpha.matrix())
}

fn check_reference(omega: &JRealTwoForm) -> Result<Complex64> {
    let pf = pfaffian(omega);
    if pf.norm() == 0.0 || !pf.is_finite() {
        return Err(Error::DegenerateOmega {
            pfaffian: pf.norm(),
        });
    }
    Ok(pf)
}

/// `S_m(χ) = C(n,m) χ^m ∧ Ω^{n-m} / Ω^n` by exact exterior expansion.
pub fn s_m(chi: &JRealTwoForm, omega: &JRealTwoForm, m: usize) -> Result<Complex64> {
    let n = omega.n();
    if chi.n() != n {
        return Err(Error::MismatchedGenerators {
            left: chi.dim(),
            right: omega.dim(),
        });
    }
    if m > n {
        return Err(Error::DegreeOutOfRange { m, n });
    }
    check_reference(omega)?;
    let x = ExteriorElement::from_two_form(chi);
    let o = ExteriorElement::from_two_form(omega);
    let num = x.power(m).wedge(&o.power(n - m))?.top_coefficient();
    let den = o.power(n).top_coefficient();
    Ok(num / den * binomial(n, m))
}

/// `S_1(χ)` relative to a nondegenerate reference via `½ tr(Ω^{-1} χ)`.
///
/// For the standard reference this is `Σ_i χ_{2i,2i+1}`; see
/// [`s1_standard`].
pub fn s1_trace(chi: &JRealTwoForm, omega: &JRealTwoForm) -> Result<Complex64> {
    check_reference(omega)?;
    let d = omega.dim();
    // Ω^{-1} via Gauss-Jordan on the small matrix
    let mut a = *omega.matrix();
    let mut inv = CMat::identity(d);
    for k in 0..d {
        let mut p = k;
        for i in k + 1..d {
            if a[(i, k)].norm() > a[(p, k)].norm() {
                p = i;
            }
        }
        for j in 0..d {
            let (x, y) = (a[(k, j)], a[(p, j)]);
            a[(k, j)] = y;
            a[(p, j)] = x;
            let (x, y) = (inv[(k, j)], inv[(p, j)]);
            inv[(k, j)] = y;
            inv[(p, j)] = x;
        }
        let piv = a[(k, k)];
        for j in 0..d {
            a[(k, j)] /= piv;
            inv[(k, j)] /= piv;
        }
        for i in 0..d {
            if i != k {
                let f = a[(i, k)];
                if f != ZERO {
                    for j in 0..d {
                        let akj = a[(k, j)];
                        let ikj = inv[(k, j)];
                        a[(i, j)] -= f * akj;
                        inv[(i, j)] -= f * ikj;
                    }
                }
            }
        }
    }
    Ok(0.5 * inv.mul(chi.matrix()).trace())
}

/// `S_1(χ)` against the standard form: `Σ_i χ_{2i,2i+1}`.
#[inline]
pub fn s1_standard(chi: &JRealTwoForm) -> Complex64 {
    (0..chi.n()).map(|i| chi.entry(2 * i, 2 * i + 1)).sum()
}

/// `α^n / Ω^n` through Pfaffians.
pub fn top_quotient(alpha: &JRealTwoForm, omega: &JRealTwoForm) -> Result<Complex64> {
    let pf_omega = check_reference(omega)?;
    if alpha.n() != omega.n() {
        return Err(Error::MismatchedGenerators {
            left: alpha.dim(),
            right: omega.dim(),
        });
    }
    Ok(pfaffian(alpha) / pf_omega)
}

/// `α^n / Ω^n` by exact exterior expansion; reference route for
/// [`top_quotient`].
pub fn top_quotient_exterior(alpha: &JRealTwoForm, omega: &JRealTwoForm) -> Result<Complex64> {
    check_reference(omega)?;
    let n = omega.n();
    let a = ExteriorElement::from_two_form(alpha)
        .power(n)
        .top_coefficient();
    let o = ExteriorElement::from_two_form(omega)
        .power(n)
        .top_coefficient();
    Ok(a / o)
}

/// Relative disagreement between the Pfaffian and exterior routes of
/// `α^n / Ω^n`.
pub fn top_quotient_cross_check(alpha: &JRealTwoForm, omega: &JRealTwoForm) -> Result<f64> {
    let fast = top_quotient(alpha, omega)?;
    let slow = top_quotient_exterior(alpha, omega)?;
    Ok((fast - slow).norm() / (1.0 + slow.norm()))
}

/// Positivity matrix without the Hermiticity check.
#[inline]
pub fn positivity_matrix_unchecked(alpha: &JRealTwoForm) -> CMat {
    // J ē_k = Σ_l E_{kl} e_l with E the standard block; α(e_j, J ē_k) = (α E^T)_{jk}
    let d = alpha.dim();
    let mut out = CMat::zeros(d);
    for j in 0..d {
        for i in 0..alpha.n() {
            // E^T has (2i+1, 2i) = 1 and (2i, 2i+1) = -1
            out[(j, 2 * i)] = alpha.entry(j, 2 * i + 1);
            out[(j, 2 * i + 1)] = -alpha.entry(j, 2 * i);
        }
    }
    out
}

/// `M_{jk} = α(e_j, J ē_k)`; errors if the result is not Hermitian, which
/// signals a form that is not J-real.
pub fn positivity_matrix(alpha: &JRealTwoForm) -> Result<HermitianPositivityMatrix> {
    let m = positivity_matrix_unchecked(alpha);
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL * alpha.max_abs().max(1.0) {
        return Err(Error::NotJReal { defect });
    }
    Ok(HermitianPositivityMatrix { m })
}

/// True iff the smallest eigenvalue of the positivity matrix exceeds `margin`.
pub fn is_strictly_positive(alpha: &JRealTwoForm, margin: f64) -> bool {
    match positivity_matrix(alpha) {
        Ok(m) => Cholesky::new(m.matrix(), margin).is_some(),
        Err(_) => false,
    }
}

/// `‖Jα − ᾱ‖_∞`.
pub fn j_reality_defect(alpha: &JRealTwoForm) -> f64 {
    alpha.apply_j().max_abs_diff(&alpha.matrix().conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn disjoint_monomials_wedge_to_sorted_product() {
        let a = ExteriorElement::monomial(4, &[0, 1], c(1.0)).unwrap();
        let b = ExteriorElement::monomial(4, &[2, 3], c(1.0)).unwrap();
        let w = wedge(&a, &b).unwrap();
        assert_eq!(w.top_coefficient(), c(1.0));
        assert_eq!(w.terms().count(), 1);
    }

    #[test]
    fn repeated_generator_wedges_to_zero() {
        let a = ExteriorElement::monomial(4, &[0, 1], c(1.0)).unwrap();
        let b = ExteriorElement::monomial(4, &[0, 3], c(1.0)).unwrap();
        assert_eq!(a.wedge(&b).unwrap(), ExteriorElement::zero(4));
    }

    #[test]
    fn odd_monomial_and_generator_mismatch_are_rejected() {
        assert!(matches!(
            ExteriorElement::monomial(4, &[0], c(1.0)),
            Err(Error::OddDegree { degree: 1 })
        ));
        let a = ExteriorElement::scalar(4, c(1.0));
        let b = ExteriorElement::scalar(6, c(1.0));
        assert!(matches!(
            a.wedge(&b),
            Err(Error::MismatchedGenerators { .. })
        ));
    }

    #[test]
    fn standard_pfaffian_is_one() {
        for n in 1..=4 {
            assert_eq!(pfaffian(&JRealTwoForm::standard(n)), c(1.0));
        }
    }

    #[test]
    fn pfaffian_of_four_by_four_matches_closed_form() {
        let mut a = JRealTwoForm::zero(2);
        let vals = [
            (0, 1, 1.5),
            (0, 2, -0.3),
            (0, 3, 2.0),
            (1, 2, 0.7),
            (1, 3, -1.1),
            (2, 3, 0.4),
        ];
        for &(j, k, v) in &vals {
            a.set(j, k, c(v));
        }
        // a01 a23 - a02 a13 + a03 a12
        let expected = 1.5 * 0.4 - (-0.3) * (-1.1) + 2.0 * 0.7;
        assert!((pfaffian(&a) - c(expected)).norm() < 1e-14);
    }

    #[test]
    fn s_m_of_reference_is_binomial() {
        let o = JRealTwoForm::standard(2);
        assert!((s_m(&o, &o, 0).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((s_m(&o, &o, 1).unwrap() - c(2.0)).norm() < 1e-15);
        assert!((s_m(&o, &o, 2).unwrap() - c(1.0)).norm() < 1e-15);
        let o3 = JRealTwoForm::standard(3);
        assert!((s_m(&o3, &o3, 2).unwrap() - c(3.0)).norm() < 1e-14);
    }

    #[test]
    fn s_m_of_blocks_is_elementary_symmetric() {
        let o = JRealTwoForm::standard(2);
        let chi = JRealTwoForm::block_diagonal(&[2.0, 3.0]);
        assert!((s_m(&chi, &o, 1).unwrap() - c(5.0)).norm() < 1e-14);
        assert!((s_m(&chi, &o, 2).unwrap() - c(6.0)).norm() < 1e-14);
        assert!((s1_standard(&chi) - c(5.0)).norm() < 1e-15);
        assert!((s1_trace(&chi, &o).unwrap() - c(5.0)).norm() < 1e-14);
    }

    #[test]
    fn s_m_errors() {
        let o = JRealTwoForm::standard(2);
        assert!(matches!(
            s_m(&o, &o, 3),
            Err(Error::DegreeOutOfRange { m: 3, n: 2 })
        ));
        assert!(matches!(
            s_m(&o, &JRealTwoForm::zero(2), 1),
            Err(Error::DegenerateOmega { .. })
        ));
    }

    #[test]
    fn top_quotient_homogeneity() {
        let o = JRealTwoForm::standard(2);
        assert!((top_quotient(&o, &o).unwrap() - c(1.0)).norm() < 1e-15);
        assert!((top_quotient(&o.scale(2.0), &o).unwrap() - c(4.0)).norm() < 1e-14);
        assert!((top_quotient_exterior(&o.scale(2.0), &o).unwrap() - c(4.0)).norm() < 1e-14);
    }

    #[test]
    fn positivity_matrix_calibration() {
        let o = JRealTwoForm::standard(3);
        let m = positivity_matrix(&o).unwrap();
        assert_eq!(*m.matrix(), CMat::identity(6));
        let neg = positivity_matrix(&o.scale(-1.0)).unwrap();
        assert_eq!(*neg.matrix(), CMat::identity(6).scale(c(-1.0)));
        assert!(is_strictly_positive(&o, 0.0));
        assert!(!is_strictly_positive(&o.scale(-1.0), 0.0));
        assert!(!is_strictly_positive(&o, 1.5));
    }

    #[test]
    fn mixed_blocks_are_not_positive() {
        let a = JRealTwoForm::block_diagonal(&[1.0, -0.5]);
        let eig = positivity_matrix(&a).unwrap().eigenvalues();
        let expected = [-0.5, -0.5, 1.0, 1.0];
        for (e, x) in eig.iter().zip(expected) {
            assert!((e - x).abs() < 1e-14);
        }
        assert!(!is_strictly_positive(&a, 0.0));

        // Ω − 1.5 dz^0 ∧ dz^1 pushes the first block to −0.5
        let mut pert = JRealTwoForm::zero(2);
        pert.set(0, 1, c(1.5));
        assert!(!is_strictly_positive(
            &JRealTwoForm::standard(2).sub(&pert),
            0.0
        ));
    }

    #[test]
    fn j_reality_defects() {
        assert_eq!(j_reality_defect(&JRealTwoForm::standard(2)), 0.0);
        let mut a = JRealTwoForm::zero(2);
        a.set(0, 2, c(1.0));
        assert!(j_reality_defect(&a) > 0.5);
        assert!(matches!(positivity_matrix(&a), Err(Error::NotJReal { .. })));
    }
}
