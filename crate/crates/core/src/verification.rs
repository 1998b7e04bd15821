//! Randomized identity checks, manufactured stationary problems and the
//! finite-difference check of the linearized operator.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior::{
    j_reality_defect, pfaffian, positivity_matrix_unchecked, s1_standard, top_quotient,
    top_quotient_exterior, JRealTwoForm,
};
use crate::linalg::{hermitian_eigenvalues, CMat, Cholesky};
use crate::model::{
    build_model, build_omega_h, sample, ScalarField, TorusGrid, TrigPolySpec, TrigTerm,
};
use crate::operators::{
    apply_linearized, beta, beta_wedge, del_del_j, flow_rhs, log_ratio_from_jet, omega_tilde,
    omega_u, omega_u_from_hessian, reconstruct_hessian, s1_field, volume_form_defect,
    volume_identity_sides, Jet, TwoFormField,
};

/// Tolerance for identities between grid fields.
pub const FIELD_TOL: f64 = 1e-10;
/// Tolerance for pointwise algebraic identities.
pub const POINTWISE_TOL: f64 = 1e-12;
/// Positivity margin kept by random instances.
pub const INSTANCE_MARGIN: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: String,
    pub n: usize,
    pub trials: usize,
    pub max_relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Field,
    Pointwise,
}

const IDENTITIES: &[(&str, Kind)] = &[
    ("hyperhermitian_form_two_paths", Kind::Field),
    ("trace_splitting", Kind::Field),
    ("hessian_reconstruction", Kind::Field),
    ("s1_quarter_laplacian", Kind::Field),
    ("s1_single_mode", Kind::Field),
    ("hessian_j_reality", Kind::Field),
    ("gradient_wedge_vs_metric", Kind::Field),
    ("real_volume_ratio", Kind::Field),
    ("pfaffian_squared_is_determinant", Kind::Pointwise),
    ("top_quotient_pfaffian_vs_wedge", Kind::Pointwise),
    ("s_m_real_for_j_real", Kind::Pointwise),
    ("holomorphic_vs_real_volume", Kind::Pointwise),
];

/// Relative error `|a − b| / (1 + |b|)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

fn rel_c(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (1.0 + b.norm())
}

fn field_rel(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (&x, &y)| m.max(relative_error(x, y)))
}

fn matrix_rel(a: &CMat, b: &CMat) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            m = m.max(rel_c(a[(i, j)], b[(i, j)]));
        }
    }
    m
}

/// Generator for trial `trial` of stream `stream`, independent of the order
/// in which trials run.
pub fn trial_rng(seed: u64, stream: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 32) | trial);
    rng
}

/// Random band-limited polynomial with `terms` cosines, wavevectors in
/// `[−kmax, kmax]^dims` (never all zero) and amplitudes in `[−amp, amp]`.
pub fn random_trig_poly(
    rng: &mut impl Rng,
    dims: usize,
    kmax: i64,
    terms: usize,
    amp: f64,
) -> TrigPolySpec {
    let mut out = TrigPolySpec::zero();
    for _ in 0..terms {
        let k = loop {
            let k: Vec<i64> = (0..dims).map(|_| rng.random_range(-kmax..=kmax)).collect();
            if k.iter().any(|&x| x != 0) {
                break k;
            }
        };
        out.terms.push(TrigTerm {
            k,
            amplitude: rng.random_range(-amp..=amp),
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        });
    }
    out
}

/// Random antisymmetric complex matrix with entries in the unit square.
pub fn random_antisymmetric(rng: &mut impl Rng, dim: usize) -> CMat {
    let mut m = CMat::zeros(dim);
    for j in 0..dim {
        for k in j + 1..dim {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(j, k)] = z;
            m[(k, j)] = -z;
        }
    }
    m
}

/// Random J-real form `½(X + conj(Tᵀ X T))`.
pub fn random_j_real(rng: &mut impl Rng, n: usize) -> JRealTwoForm {
    let x = JRealTwoForm::from_matrix_unchecked(random_antisymmetric(rng, 2 * n));
    let jx = x.apply_j().conj();
    JRealTwoForm::from_matrix_unchecked(x.matrix().add(&jx).scale(Complex64::new(0.5, 0.0)))
}

/// Random strictly positive J-real form near `c·Ω` with margin at least `margin`.
pub fn random_positive_j_real(rng: &mut impl Rng, n: usize, margin: f64) -> JRealTwoForm {
    let c = rng.random_range(0.5..2.0);
    let mut p = random_j_real(rng, n);
    loop {
        let a = JRealTwoForm::standard(n).scale(c).add(&p);
        if hermitian_eigenvalues(&positivity_matrix_unchecked(&a))[0] > margin {
            return a;
        }
        p = p.scale(0.5);
    }
}

/// Active dimensions used for field identities in dimension `n`: both real
/// directions of `z^0` and one of each of two further coordinates.
pub fn identity_grid(n: usize) -> Result<Arc<TorusGrid>> {
    let dims = match n {
        2 => vec![0, 1, 4, 7],
        3 => vec![0, 3, 7, 10],
        _ => {
            return Err(Error::Config(format!(
                "field identities run for n = 2 or 3, not {n}"
            )))
        }
    };
    TorusGrid::new(n, dims, vec![8; 4])
}

fn clears_margin(alpha: &TwoFormField, margin: f64) -> bool {
    alpha
        .forms()
        .iter()
        .all(|a| Cholesky::new(&positivity_matrix_unchecked(a), margin).is_some())
}

fn min_eig_field(alpha: &TwoFormField) -> f64 {
    alpha
        .forms()
        .iter()
        .map(|a| hermitian_eigenvalues(&positivity_matrix_unchecked(a))[0])
        .fold(f64::INFINITY, f64::min)
}

/// `(u, Ω_h)` with `Ω_h = cΩ + ∂∂_J ρ`, amplitudes halved until both `Ω_h`
/// and `Ω̃(u)` keep `INSTANCE_MARGIN`.
pub fn random_instance(
    rng: &mut impl Rng,
    grid: &Arc<TorusGrid>,
) -> Result<(TrigPolySpec, ScalarField, TwoFormField)> {
    let dims = grid.sizes().len();
    let kmax = (*grid.sizes().iter().min().unwrap() / 4) as i64;
    let c = rng.random_range(0.5..2.0);
    let mut u_spec = random_trig_poly(rng, dims, kmax, 3, 0.2);
    let mut rho_spec = random_trig_poly(rng, dims, kmax, 2, 0.2);
    for _ in 0..60 {
        let oh = build_omega_h(c, &rho_spec, grid);
        let oh = match oh {
            Ok(oh) if clears_margin(&oh, INSTANCE_MARGIN) => oh,
            _ => {
                rho_spec = rho_spec.scaled(0.5);
                continue;
            }
        };
        let u = sample(&u_spec, grid)?;
        if clears_margin(&omega_tilde(&u, &oh)?, INSTANCE_MARGIN) {
            return Ok((u_spec, u, oh));
        }
        u_spec = u_spec.scaled(0.5);
    }
    Err(Error::Config(
        "could not draw a positive random instance".into(),
    ))
}

/// `Σ_k u_{kk̄} = ¼Δu` evaluated term by term from the polynomial.
pub fn analytic_quarter_laplacian(
    spec: &TrigPolySpec,
    grid: &Arc<TorusGrid>,
) -> Result<ScalarField> {
    let scaled = TrigPolySpec::new(
        spec.terms
            .iter()
            .map(|t| TrigTerm {
                amplitude: -0.25 * t.amplitude * t.k.iter().map(|&k| (k * k) as f64).sum::<f64>(),
                ..t.clone()
            })
            .collect(),
    );
    sample(&scaled, grid)
}

fn field_trial(n: usize, seed: u64, trial: usize) -> Result<Vec<f64>> {
    let grid = identity_grid(n)?;
    let mut rng = trial_rng(seed, n as u64, trial as u64);
    let (u_spec, u, oh) = random_instance(&mut rng, &grid)?;
    let q = del_del_j(&u);
    let ot = omega_tilde(&u, &oh)?;

    let wa = omega_u(&u, &oh)?;
    let wb = omega_u_from_hessian(&u, &oh)?;
    let paths = (0..grid.len())
        .map(|p| matrix_rel(wb.at(p).matrix(), wa.at(p).matrix()))
        .fold(0.0, f64::max);

    let mut split: f64 = 0.0;
    let mut recon: f64 = 0.0;
    let mut jdef: f64 = 0.0;
    for p in 0..grid.len() {
        let ds = s1_standard(ot.at(p)) - s1_standard(oh.at(p));
        split = split.max(rel_c(ds, s1_standard(q.at(p))));
        let r = reconstruct_hessian(ot.at(p), oh.at(p));
        recon = recon.max(matrix_rel(r.matrix(), q.at(p).matrix()));
        jdef = jdef.max(j_reality_defect(q.at(p)));
    }

    let lap = field_rel(&s1_field(&q), &analytic_quarter_laplacian(&u_spec, &grid)?);

    let single = TrigPolySpec::new(vec![u_spec.terms[0].clone()]);
    let us = sample(&single, &grid)?;
    let lap1 = field_rel(
        &s1_field(&del_del_j(&us)),
        &analytic_quarter_laplacian(&single, &grid)?,
    );

    let gw = field_rel(&beta_wedge(&u)?, &beta(&u));

    let lr = log_ratio_from_jet(&Jet::new(&u), &oh, 0.0)?;
    let vol = volume_form_defect(&wa, &lr.log_ratio);

    Ok(vec![paths, split, recon, lap, lap1, jdef, gw, vol])
}

fn pointwise_trial(n: usize, seed: u64, trial: usize) -> Result<Vec<f64>> {
    let mut rng = trial_rng(seed, 16 + n as u64, trial as u64);
    let x = random_antisymmetric(&mut rng, 2 * n);
    let pf = crate::exterior::pfaffian_matrix(&x);
    let det = x.determinant();
    let pf_det = rel_c(pf * pf, det);

    let omega = JRealTwoForm::standard(n);
    let a = random_j_real(&mut rng, n);
    let tq = rel_c(
        top_quotient(&a, &omega)?,
        top_quotient_exterior(&a, &omega)?,
    );

    let mut imag: f64 = 0.0;
    for m in 0..=n {
        let s = crate::exterior::s_m(&a, &omega, m)?;
        imag = imag.max(s.im.abs() / (1.0 + s.norm()));
    }

    let pos = random_positive_j_real(&mut rng, n, INSTANCE_MARGIN);
    let (lhs, rhs) = volume_identity_sides(&pos)?;
    let vol = rel_c(lhs, rhs);
    debug_assert!(pfaffian(&pos).re > 0.0);
    Ok(vec![pf_det, tq, imag, vol])
}

/// Runs every identity `trials` times with seeded random instances.
///
/// Field identities run for `n ∈ {2, 3}`; pointwise identities also for `n = 4`.
pub fn run_identity_suite(n: usize, trials: usize, seed: u64) -> Result<Vec<IdentityReport>> {
    build_model(n)?;
    let with_fields = n <= 3;
    let field_errors: Vec<Vec<f64>> = if with_fields {
        (0..trials)
            .into_par_iter()
            .map(|t| field_trial(n, seed, t))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let point_errors: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| pointwise_trial(n, seed, t))
        .collect::<Result<_>>()?;
    let reduce = |rows: &[Vec<f64>], i: usize| {
        rows.iter().map(|r| r[i]).fold(
            0.0,
            |m: f64, e| if e.is_nan() { f64::NAN } else { m.max(e) },
        )
    };
    let mut reports = Vec::new();
    let (mut fi, mut pi) = (0, 0);
    for &(name, kind) in IDENTITIES {
        let (err, tol) = match kind {
            Kind::Field => {
                let i = fi;
                fi += 1;
                if !with_fields {
                    continue;
                }
                (reduce(&field_errors, i), FIELD_TOL)
            }
            Kind::Pointwise => {
                let i = pi;
                pi += 1;
                (reduce(&point_errors, i), POINTWISE_TOL)
            }
        };
        reports.push(IdentityReport {
            identity: name.to_string(),
            n,
            trials,
            max_relative_error: err,
            tolerance: tol,
            pass: err <= tol,
            seed,
        });
    }
    Ok(reports)
}

/// A stationary problem built backwards from a chosen `u*`.
#[derive(Clone, Debug)]
pub struct ManufacturedProblem {
    pub u_star: ScalarField,
    pub f: ScalarField,
    pub omega_h: TwoFormField,
    /// Smallest positivity-matrix eigenvalue of `Ω̃(u*)`.
    pub margin: f64,
}

impl ManufacturedProblem {
    pub fn flow_problem(&self) -> crate::flow::FlowProblem {
        crate::flow::FlowProblem {
            omega_h: self.omega_h.clone(),
            f: self.f.clone(),
        }
    }
}

/// Largest `s ∈ [0, 1]` (to 1e−6) with `Ω̃(s·u)` strictly positive.
fn admissible_scale(u: &ScalarField, omega_h: &TwoFormField) -> f64 {
    let positive = |s: f64| {
        omega_tilde(&u.scale(s), omega_h)
            .map(|ot| clears_margin(&ot, 0.0))
            .unwrap_or(false)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if positive(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `f := log(Ω̃(u*)^n/Ω^n)`, so that `u*` is stationary with `b̃ = 0`.
pub fn build_manufactured(
    u_star_spec: &TrigPolySpec,
    omega_h: &TwoFormField,
    grid: &Arc<TorusGrid>,
) -> Result<ManufacturedProblem> {
    let u_star = sample(u_star_spec, grid)?;
    let ot = omega_tilde(&u_star, omega_h)?;
    let margin = min_eig_field(&ot);
    if !(margin > 0.0) {
        return Err(Error::AmplitudeTooLarge {
            min_eig: margin,
            max_scale: admissible_scale(&u_star, omega_h),
        });
    }
    let f = log_ratio_from_jet(&Jet::new(&u_star), omega_h, 0.0)?.log_ratio;
    Ok(ManufacturedProblem {
        u_star,
        f,
        omega_h: omega_h.clone(),
        margin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizationReport {
    pub epsilons: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log e` against `log ε`; infinite when every
    /// error vanishes.
    pub order: f64,
}

/// Compares `(N(u+εv) − N(u−εv))/2ε` with `L_u v` for each `ε`.
pub fn linearization_order_check(
    u: &ScalarField,
    v: &ScalarField,
    omega_h: &TwoFormField,
    epsilons: &[f64],
) -> Result<LinearizationReport> {
    let lv = apply_linearized(u, v, omega_h)?;
    let zero = ScalarField::zeros(u.grid());
    let errors = epsilons
        .iter()
        .map(|&eps| {
            let plus = flow_rhs(&u.axpy(eps, v)?, omega_h, &zero)?;
            let minus = flow_rhs(&u.axpy(-eps, v)?, omega_h, &zero)?;
            let fd = plus.sub(&minus)?.scale(0.5 / eps);
            fd.max_abs_diff(&lv)
        })
        .collect::<Result<Vec<f64>>>()?;
    let order = if errors.iter().all(|&e| e == 0.0) {
        f64::INFINITY
    } else {
        log_log_slope(epsilons, &errors)
    };
    Ok(LinearizationReport {
        epsilons: epsilons.to_vec(),
        errors,
        order,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Ordinary least squares `y ≈ a x + b`; returns `(a, b, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (a, b, r2)
}
