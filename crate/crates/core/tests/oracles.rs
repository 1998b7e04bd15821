//! Independent reference computations checked against the library.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use qmaflow::exterior::{
    is_strictly_positive, pfaffian_matrix, positivity_matrix, top_quotient, ExteriorElement,
    JRealTwoForm,
};
use qmaflow::linalg::{hermitian_eigenvalues, CMat};
use qmaflow::model::grid::partial_z;
use qmaflow::model::{sample, TorusGrid, TrigPolySpec};
use qmaflow::operators::{log_ratio_from_jet, omega_tilde, Jet};
use qmaflow::verification::{
    identity_grid, random_antisymmetric, random_instance, random_j_real, random_positive_j_real,
    trial_rng,
};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Pfaffian as a sum over perfect matchings, expanding along the first row.
fn pfaffian_by_matchings(a: &[Vec<Complex64>]) -> Complex64 {
    fn rec(a: &[Vec<Complex64>], rest: &[usize]) -> Complex64 {
        if rest.is_empty() {
            return c(1.0);
        }
        let first = rest[0];
        let mut total = c(0.0);
        for (pos, &j) in rest.iter().enumerate().skip(1) {
            let sign = if pos % 2 == 1 { 1.0 } else { -1.0 };
            let remaining: Vec<usize> = rest
                .iter()
                .copied()
                .filter(|&i| i != first && i != j)
                .collect();
            total += a[first][j] * sign * rec(a, &remaining);
        }
        total
    }
    let idx: Vec<usize> = (0..a.len()).collect();
    rec(a, &idx)
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    // Heap's algorithm with the parity tracked per swap
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    out.push((p.clone(), sign));
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                p.swap(0, i);
            } else {
                p.swap(c[i], i);
            }
            sign = -sign;
            out.push((p.clone(), sign));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Coefficient of `dz^0 ∧ ... ∧ dz^{2n−1}` in `α^n` for `α = Σ_{j<k} a_{jk} dz^j ∧ dz^k`,
/// summing the wedge over every permutation.
fn top_coefficient_by_permutations(a: &[Vec<Complex64>]) -> Complex64 {
    let d = a.len();
    let n = d / 2;
    // α = ½ Σ_{j,k} a_{jk} dz^j∧dz^k, so α^n = 2^{-n} Σ_σ sgn(σ) Π a_{σ(2i)σ(2i+1)}
    let sum: Complex64 = permutations(d)
        .into_iter()
        .map(|(p, s)| {
            (0..n)
                .map(|i| a[p[2 * i]][p[2 * i + 1]])
                .product::<Complex64>()
                * s
        })
        .sum();
    sum / 2f64.powi(n as i32)
}

fn rows(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn to_nalgebra(m: &CMat) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.dim(), m.dim(), |i, j| m[(i, j)])
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn pfaffian_agrees_with_matching_expansion_and_determinant() {
    for dim in [2, 4, 6, 8] {
        for trial in 0..25 {
            let mut rng = trial_rng(101, dim as u64, trial);
            let m = random_antisymmetric(&mut rng, dim);
            let pf = pfaffian_matrix(&m);
            let reference = pfaffian_by_matchings(&rows(&m));
            assert!(
                (pf - reference).norm() <= 1e-12 * (1.0 + reference.norm()),
                "dim {dim}"
            );
            let det = to_nalgebra(&m).determinant();
            assert!(
                (pf * pf - det).norm() <= 1e-11 * (1.0 + det.norm()),
                "dim {dim}"
            );
        }
    }
}

#[test]
fn odd_dimension_pfaffian_vanishes() {
    let mut rng = trial_rng(5, 0, 0);
    let m = random_antisymmetric(&mut rng, 3);
    assert_eq!(pfaffian_matrix(&m), c(0.0));
}

#[test]
fn top_power_matches_permutation_sum() {
    for n in [2, 3, 4] {
        for trial in 0..4 {
            let mut rng = trial_rng(202, n as u64, trial);
            let alpha = random_j_real(&mut rng, n);
            let brute = top_coefficient_by_permutations(&rows(alpha.matrix()));
            let exterior = ExteriorElement::from_two_form(&alpha)
                .power(n)
                .top_coefficient();
            assert!(
                (exterior - brute).norm() <= 1e-11 * (1.0 + brute.norm()),
                "n {n}"
            );
            let via_pf = pfaffian_matrix(alpha.matrix()) * factorial(n);
            assert!(
                (via_pf - brute).norm() <= 1e-11 * (1.0 + brute.norm()),
                "n {n}"
            );
        }
    }
}

#[test]
fn top_quotient_matches_permutation_ratio() {
    for n in [2, 3] {
        let omega = JRealTwoForm::standard(n);
        let mut rng = trial_rng(303, n as u64, 0);
        let alpha = random_positive_j_real(&mut rng, n, 0.1);
        let brute = top_coefficient_by_permutations(&rows(alpha.matrix()))
            / top_coefficient_by_permutations(&rows(omega.matrix()));
        let q = top_quotient(&alpha, &omega).unwrap();
        assert!((q - brute).norm() <= 1e-11 * brute.norm());
    }
}

#[test]
fn hermitian_eigenvalues_match_nalgebra() {
    for dim in [2, 4, 6, 8] {
        for trial in 0..20 {
            let mut rng = trial_rng(404, dim as u64, trial);
            let a = CMat::from_fn(dim, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let h = a.add(&a.adjoint());
            let ours = hermitian_eigenvalues(&h);
            let mut theirs: Vec<f64> = to_nalgebra(&h)
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect();
            theirs.sort_by(f64::total_cmp);
            for (x, y) in ours.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-12, "dim {dim}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn positivity_test_matches_nalgebra_spectrum() {
    for n in [2, 3, 4] {
        for trial in 0..30 {
            let mut rng = trial_rng(505, n as u64, trial);
            let alpha = random_j_real(&mut rng, n)
                .add(&JRealTwoForm::standard(n).scale(rng.random_range(0.0..3.0)));
            let m = positivity_matrix(&alpha).unwrap();
            let min = to_nalgebra(m.matrix()).symmetric_eigenvalues().min();
            if (min - 0.05).abs() > 1e-9 {
                assert_eq!(
                    is_strictly_positive(&alpha, 0.05),
                    min > 0.05,
                    "n {n} trial {trial}"
                );
            }
        }
    }
}

/// Evaluates `Σ a cos(k·x + φ)` off the grid, the active coordinates given in order.
fn eval_trig(spec: &TrigPolySpec, x: &[f64]) -> f64 {
    spec.terms
        .iter()
        .map(|t| {
            let phase: f64 = t.k.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
            t.amplitude * (phase + t.phase).cos()
        })
        .sum()
}

/// Fourth-order Richardson extrapolation of centered differences.
fn richardson(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

#[test]
fn spectral_wirtinger_derivative_matches_richardson() {
    // dims 0 and 4 are the real and imaginary parts of z^0 when n = 2
    let grid = TorusGrid::z0_plane(2, 16).unwrap();
    let spec = TrigPolySpec::zero()
        .with(vec![1, 0], 0.7, 0.2)
        .with(vec![2, -1], 0.3, -1.1)
        .with(vec![0, 3], 0.2, 0.4);
    let u = sample(&spec, &grid).unwrap();
    let dz = partial_z(&u, 0);
    let h = 1e-3;
    for p in (0..grid.len()).step_by(7) {
        let x = grid.coords(p);
        let (x0, y0) = (x[0], x[1]);
        let ux = richardson(|s| eval_trig(&spec, &[x0 + s, y0]), h);
        let uy = richardson(|s| eval_trig(&spec, &[x0, y0 + s]), h);
        let expected = Complex64::new(0.5 * ux, -0.5 * uy);
        assert!((dz.values()[p] - expected).norm() < 1e-9, "point {p}");
    }
}

#[test]
fn log_ratio_matches_determinant_of_positivity_matrix() {
    for n in [2, 3] {
        let grid = identity_grid(n).unwrap();
        for trial in 0..3 {
            let mut rng = trial_rng(606, n as u64, trial);
            let (_, u, oh) = random_instance(&mut rng, &grid).unwrap();
            let lr = log_ratio_from_jet(&Jet::new(&u), &oh, 0.0).unwrap();
            let ot = omega_tilde(&u, &oh).unwrap();
            for p in (0..grid.len()).step_by(37) {
                let m = positivity_matrix(ot.at(p)).unwrap();
                let det = to_nalgebra(m.matrix()).determinant().re;
                let reference = 0.5 * det.ln();
                assert!(
                    (lr.log_ratio.values()[p] - reference).abs() < 1e-12,
                    "n {n} point {p}"
                );
            }
        }
    }
}
