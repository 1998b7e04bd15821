use num_complex::Complex64;
use proptest::prelude::*;

use qmaflow::cli::{read_snapshot, write_snapshot};
use qmaflow::exterior::{pfaffian_matrix, positivity_matrix, s_m, ExteriorElement, JRealTwoForm};
use qmaflow::flow::{normalize, run_to_steady, FlowSettings};
use qmaflow::linalg::CMat;
use qmaflow::model::{build_model, build_omega_h, sample, ScalarField, TorusGrid, TrigPolySpec};
use qmaflow::operators::{log_ratio_from_jet, Jet};
use qmaflow::verification::{build_manufactured, random_j_real, trial_rng};

fn antisymmetric(dim: usize, entries: &[(f64, f64)]) -> CMat {
    let mut m = CMat::zeros(dim);
    let mut it = entries.iter();
    for i in 0..dim {
        for j in i + 1..dim {
            let &(re, im) = it.next().unwrap();
            m[(i, j)] = Complex64::new(re, im);
            m[(j, i)] = -Complex64::new(re, im);
        }
    }
    m
}

fn z0_field(coeffs: &[(i64, i64, f64, f64)], size: usize) -> ScalarField {
    let grid = TorusGrid::z0_plane(2, size).unwrap();
    let spec = coeffs
        .iter()
        .fold(TrigPolySpec::zero(), |s, &(a, b, amp, ph)| {
            s.with(vec![a, b], amp, ph)
        });
    sample(&spec, &grid).unwrap()
}

fn mode() -> impl Strategy<Value = (i64, i64, f64, f64)> {
    (-3i64..=3, -3i64..=3, -0.05f64..0.05, -3.0f64..3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pfaffian_squared_is_determinant(
        half in 1usize..=4,
        entries in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 28),
    ) {
        let dim = 2 * half;
        let m = antisymmetric(dim, &entries);
        let pf = pfaffian_matrix(&m);
        let det = m.determinant();
        prop_assert!((pf * pf - det).norm() <= 1e-10 * (1.0 + det.norm()));
    }

    #[test]
    fn pfaffian_is_homogeneous(
        half in 1usize..=4,
        entries in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 28),
        s in -3.0f64..3.0,
    ) {
        let m = antisymmetric(2 * half, &entries);
        let lhs = pfaffian_matrix(&m.scale(Complex64::new(s, 0.0)));
        let rhs = pfaffian_matrix(&m) * s.powi(half as i32);
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn j_real_forms_have_hermitian_positivity_and_real_s_m(n in 2usize..=4, seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0, 0);
        let alpha = random_j_real(&mut rng, n);
        prop_assert!(positivity_matrix(&alpha).is_ok());
        let omega = JRealTwoForm::standard(n);
        for m in 0..=n {
            let v = s_m(&alpha, &omega, m).unwrap();
            prop_assert!(v.im.abs() <= 1e-12 * (1.0 + v.re.abs()));
        }
    }

    #[test]
    fn two_form_monomials_commute_and_repeated_indices_vanish(
        a in 0usize..8, b in 0usize..8, c in 0usize..8, d in 0usize..8,
        x in -2.0f64..2.0, y in -2.0f64..2.0,
    ) {
        prop_assume!(a != b && c != d);
        let p = ExteriorElement::monomial(8, &[a, b], Complex64::new(x, 0.0)).unwrap();
        let q = ExteriorElement::monomial(8, &[c, d], Complex64::new(y, 0.0)).unwrap();
        let pq = p.wedge(&q).unwrap();
        prop_assert_eq!(&pq, &q.wedge(&p).unwrap());
        if a == c || a == d || b == c || b == d {
            prop_assert_eq!(pq, ExteriorElement::zero(8));
        }
    }

    #[test]
    fn standard_form_squares_to_minus_one(n in 2usize..=4) {
        let model = build_model(n).unwrap();
        let j = model.real_j();
        let jj = j.mul(&j);
        prop_assert!(jj.max_abs_diff(&qmaflow::model::RealMatrix::identity(4 * n).scale(-1.0)) == 0.0);
    }

    #[test]
    fn trig_spec_json_round_trip(modes in prop::collection::vec(mode(), 0..5)) {
        let spec = modes.iter().fold(TrigPolySpec::zero(), |s, &(a, b, amp, ph)| s.with(vec![a, b], amp, ph));
        let json = serde_json::to_string(&spec).unwrap();
        let back: TrigPolySpec = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, spec);
    }

    #[test]
    fn sampling_is_linear(a in prop::collection::vec(mode(), 1..4), b in prop::collection::vec(mode(), 1..4)) {
        let both: Vec<_> = a.iter().chain(&b).copied().collect();
        let sum = z0_field(&a, 16).add(&z0_field(&b, 16)).unwrap();
        prop_assert!(z0_field(&both, 16).max_abs_diff(&sum).unwrap() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn log_ratio_ignores_constants(modes in prop::collection::vec(mode(), 1..4), c in -5.0f64..5.0) {
        let u = z0_field(&modes, 16);
        let oh = build_omega_h(1.0, &TrigPolySpec::zero(), u.grid()).unwrap();
        let a = log_ratio_from_jet(&Jet::new(&u), &oh, 0.0).unwrap().log_ratio;
        let b = log_ratio_from_jet(&Jet::new(&u.shift(c)), &oh, 0.0).unwrap().log_ratio;
        prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-11);
    }

    #[test]
    fn normalization_has_zero_mean_and_is_idempotent(modes in prop::collection::vec(mode(), 1..4), c in -50.0f64..50.0) {
        let u = z0_field(&modes, 16).shift(c);
        let v = normalize(&u);
        prop_assert!(v.mean().abs() < 1e-13);
        prop_assert!(normalize(&v).max_abs_diff(&v).unwrap() < 1e-13);
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact(values in prop::collection::vec(any::<f64>(), 64), t in any::<f64>()) {
        let grid = TorusGrid::z0_plane(2, 8).unwrap();
        let field = ScalarField::new(grid, values.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.snap");
        write_snapshot(&path, &field, if t.is_finite() { t } else { 0.0 }, "u").unwrap();
        let back = read_snapshot(&path).unwrap();
        prop_assert_eq!(back.values.len(), values.len());
        for (a, b) in back.values.iter().zip(&values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn diagnostics_are_strictly_increasing(a in 0.01f64..0.08, phase in -3.0f64..3.0) {
        let grid = TorusGrid::z0_plane(2, 8).unwrap();
        let oh = build_omega_h(1.0, &TrigPolySpec::zero(), &grid).unwrap();
        let mp = build_manufactured(&TrigPolySpec::zero().with(vec![1, 1], a, phase), &oh, &grid).unwrap();
        let settings = FlowSettings { t_max: 0.5, ..FlowSettings::default() };
        let r = run_to_steady(&mp.flow_problem(), ScalarField::zeros(&grid), &settings).unwrap();
        prop_assert!(r.history.len() > 2);
        for w in r.history.windows(2) {
            prop_assert!(w[1].t > w[0].t);
            prop_assert!(w[1].step > w[0].step);
        }
    }
}
