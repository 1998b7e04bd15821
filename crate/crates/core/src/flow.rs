//! Explicit time integration of `u_t = log(Ω̃(u)^n / Ω^n) − f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::model::ScalarField;
use crate::operators::{
    candidate_positivity_at, log_ratio_from_jet, positivity_bounds, Jet, TwoFormField,
};

/// Smallest eigenvalue of the positivity matrix an accepted state may have.
pub const POSITIVITY_MARGIN: f64 = 1e-8;
/// Step halvings attempted before giving up.
pub const MAX_HALVINGS: usize = 20;
/// Accepted steps in a row before `dt` is allowed to grow.
pub const GROWTH_STREAK: usize = 10;
pub const GROWTH_FACTOR: f64 = 1.1;

/// Ω_h and f on a common grid.
#[derive(Clone, Debug)]
pub struct FlowProblem {
    pub omega_h: TwoFormField,
    pub f: ScalarField,
}

impl FlowProblem {
    pub fn new(omega_h: TwoFormField, f: ScalarField) -> Result<Self> {
        if **omega_h.grid() != **f.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { omega_h, f })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSettings {
    /// CFL safety factor.
    pub sigma: f64,
    /// Steady once `max u_t − min u_t` drops below this.
    pub tol_steady: f64,
    pub t_max: f64,
    pub margin: f64,
    /// Initial step; the CFL step when absent.
    pub dt0: Option<f64>,
}

impl Default for FlowSettings {
    fn default() -> Self {
        Self {
            sigma: 0.2,
            tol_steady: 1e-8,
            t_max: 200.0,
            margin: POSITIVITY_MARGIN,
            dt0: None,
        }
    }
}

/// Right-hand side at a state together with the quantities monitored along
/// the flow.
#[derive(Clone, Debug)]
pub struct Evaluation {
    /// `u_t`.
    pub rhs: ScalarField,
    /// `max_x Σ_i 1/λ_i(x)`.
    pub kappa: f64,
    pub min_eig: f64,
    pub max_beta: f64,
    pub max_eta: f64,
    pub spectral_tail: f64,
}

/// Smallest positivity-matrix eigenvalue of `Ω̃` over the grid and where it
/// occurs. Gershgorin bounds skip points that cannot hold the minimum.
pub fn min_positivity_eigenvalue(jet: &Jet, omega_h: &TwoFormField) -> (f64, usize) {
    min_eigenvalue_with_bounds(jet, omega_h, &positivity_bounds(jet, omega_h))
}

/// Same scan with precomputed Gershgorin bounds; only points whose lower
/// bound undercuts the smallest diagonal entry are diagonalized.
fn min_eigenvalue_with_bounds(
    jet: &Jet,
    omega_h: &TwoFormField,
    bounds: &[(f64, f64)],
) -> (f64, usize) {
    let (mut at, mut best) = bounds
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (p, b)| if b.1 < acc.1 { (p, b.1) } else { acc },
        );
    let mut order: Vec<usize> = (0..bounds.len()).filter(|&p| bounds[p].0 < best).collect();
    order.sort_by(|&a, &b| bounds[a].0.total_cmp(&bounds[b].0).then(a.cmp(&b)));
    let exact_at_best = bounds[at].0 == bounds[at].1;
    if !exact_at_best {
        best = f64::INFINITY;
        order.push(at);
    }
    for p in order {
        let (lower, upper) = bounds[p];
        if lower >= best {
            break;
        }
        let eig = if lower == upper {
            lower
        } else {
            hermitian_eigenvalues(&candidate_positivity_at(jet, omega_h, p))[0]
        };
        if eig < best {
            best = eig;
            at = p;
        }
    }
    (best, at)
}

/// Evaluates `u_t` at `u`, failing unless Ω̃ clears `margin` everywhere.
/// With `monitors` the eigenvalue scan and derivative maxima are filled in.
pub fn evaluate(
    problem: &FlowProblem,
    u: &ScalarField,
    margin: f64,
    monitors: bool,
) -> Result<Evaluation> {
    if let Some(point) = u.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { point });
    }
    let jet = if monitors {
        Jet::new(u)
    } else {
        Jet::second_order(u)
    };
    let lr = log_ratio_from_jet(&jet, &problem.omega_h, margin)?;
    let rhs = lr.log_ratio.sub(&problem.f)?;
    if let Some(point) = rhs.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { point });
    }
    let mut ev = Evaluation {
        rhs,
        kappa: lr.kappa,
        min_eig: f64::NAN,
        max_beta: f64::NAN,
        max_eta: f64::NAN,
        spectral_tail: jet.spectral_tail(),
    };
    if monitors {
        ev.min_eig = min_eigenvalue_with_bounds(&jet, &problem.omega_h, &lr.bounds).0;
        let len = u.grid().len();
        ev.max_beta = (0..len)
            .map(|p| 0.25 * jet.gradient_norm_sqr(p))
            .fold(0.0, f64::max);
        ev.max_eta = (0..len)
            .map(|p| jet.laplacian_quarter(p))
            .fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(ev)
}

/// `σ h_min² / κ`.
pub fn cfl_from_kappa(sigma: f64, h_min: f64, kappa: f64) -> f64 {
    sigma * h_min * h_min / kappa
}

/// CFL step for the flow at `u`.
pub fn cfl_dt(u: &ScalarField, omega_h: &TwoFormField, sigma: f64) -> Result<f64> {
    let lr = log_ratio_from_jet(&Jet::second_order(u), omega_h, 0.0)?;
    Ok(cfl_from_kappa(sigma, u.grid().min_spacing(), lr.kappa))
}

/// `ũ = u − mean(u)`; the volume form of the flat torus is constant.
pub fn normalize(u: &ScalarField) -> ScalarField {
    u.shift(-u.mean())
}

#[derive(Clone, Debug)]
pub struct FlowState {
    pub u: ScalarField,
    pub t: f64,
    pub dt: f64,
    pub step_count: usize,
    streak: usize,
    eval: Evaluation,
}

impl FlowState {
    /// Starts the flow at `u0`; fails if `Ω̃(u0)` is not positive.
    pub fn new(problem: &FlowProblem, u0: ScalarField, settings: &FlowSettings) -> Result<Self> {
        if **u0.grid() != **problem.f.grid() {
            return Err(Error::GridMismatch);
        }
        let eval = evaluate(problem, &u0, settings.margin, true)?;
        let cap = cfl_from_kappa(settings.sigma, u0.grid().min_spacing(), eval.kappa);
        Ok(Self {
            u: u0,
            t: 0.0,
            dt: settings.dt0.unwrap_or(cap),
            step_count: 0,
            streak: 0,
            eval,
        })
    }

    /// Evaluation at the current `u`.
    pub fn evaluation(&self) -> &Evaluation {
        &self.eval
    }

    pub fn u_t(&self) -> &ScalarField {
        &self.eval.rhs
    }

    pub fn record(&self) -> DiagnosticsRecord {
        let ut = &self.eval.rhs;
        DiagnosticsRecord {
            step: self.step_count,
            t: self.t,
            dt: self.dt,
            sup_abs_ut: ut.max_abs(),
            osc_u: self.u.oscillation(),
            max_beta: self.eval.max_beta,
            max_eta: self.eval.max_eta,
            min_eig_omega_tilde: self.eval.min_eig,
            osc_ut: ut.oscillation(),
            spectral_tail: self.eval.spectral_tail,
        }
    }
}

fn recoverable(e: &Error) -> bool {
    matches!(e, Error::Positivity { .. } | Error::NonFinite { .. })
}

/// One Heun step, halving `dt` on positivity loss or non-finite values.
pub fn step(
    state: &FlowState,
    problem: &FlowProblem,
    settings: &FlowSettings,
) -> Result<FlowState> {
    let k1 = &state.eval.rhs;
    let mut dt = state.dt;
    for _ in 0..=MAX_HALVINGS {
        let attempt = (|| -> Result<(ScalarField, Evaluation)> {
            let pred = state.u.axpy(dt, k1)?;
            let k2 = evaluate(problem, &pred, settings.margin, false)?.rhs;
            let slope = k1.add(&k2)?;
            let next = state.u.axpy(0.5 * dt, &slope)?;
            let eval = evaluate(problem, &next, settings.margin, true)?;
            Ok((next, eval))
        })();
        match attempt {
            Ok((u, eval)) => {
                let rejected = dt < state.dt;
                let mut streak = if rejected { 0 } else { state.streak + 1 };
                let mut next_dt = dt;
                if streak >= GROWTH_STREAK {
                    let cap = cfl_from_kappa(settings.sigma, u.grid().min_spacing(), eval.kappa);
                    if dt < cap {
                        next_dt = (dt * GROWTH_FACTOR).min(cap);
                    }
                    streak = 0;
                }
                return Ok(FlowState {
                    u,
                    t: state.t + dt,
                    dt: next_dt,
                    step_count: state.step_count + 1,
                    streak,
                    eval,
                });
            }
            Err(e) if recoverable(&e) => dt *= 0.5,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Stiffness {
        t: state.t,
        dt,
        rejections: MAX_HALVINGS + 1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub sup_abs_ut: f64,
    pub osc_u: f64,
    pub max_beta: f64,
    pub max_eta: f64,
    pub min_eig_omega_tilde: f64,
    pub osc_ut: f64,
    pub spectral_tail: f64,
}

#[derive(Clone, Debug)]
pub struct SteadyResult {
    /// `ũ_∞`.
    pub u_normalized: ScalarField,
    pub u_final: ScalarField,
    pub b_tilde: f64,
    /// `osc(u_t)` at the final state.
    pub residual: f64,
    pub converged: bool,
    pub t: f64,
    pub history: Vec<DiagnosticsRecord>,
}

/// Integrates until `osc(u_t) < tol_steady` or `t ≥ t_max`.
pub fn run_to_steady(
    problem: &FlowProblem,
    u0: ScalarField,
    settings: &FlowSettings,
) -> Result<SteadyResult> {
    run_to_steady_with(problem, u0, settings, |_| {})
}

/// [`run_to_steady`] calling `observer` on the initial and every accepted state.
pub fn run_to_steady_with(
    problem: &FlowProblem,
    u0: ScalarField,
    settings: &FlowSettings,
    mut observer: impl FnMut(&FlowState),
) -> Result<SteadyResult> {
    let mut state = FlowState::new(problem, u0, settings)?;
    let mut history = vec![state.record()];
    observer(&state);
    let converged = loop {
        if state.eval.rhs.oscillation() < settings.tol_steady {
            break true;
        }
        if state.t >= settings.t_max {
            break false;
        }
        state = step(&state, problem, settings)?;
        history.push(state.record());
        observer(&state);
    };
    Ok(SteadyResult {
        u_normalized: normalize(&state.u),
        b_tilde: state.eval.rhs.mean(),
        residual: state.eval.rhs.oscillation(),
        converged,
        t: state.t,
        u_final: state.u,
        history,
    })
}

/// True iff `sup|u_t|` never exceeds its initial value by more than `1e−7`
/// and never grows by more than `1e−9` between records. Needs two records.
pub fn monitor_maximum_principle(history: &[DiagnosticsRecord]) -> bool {
    if history.len() < 2 {
        return false;
    }
    let s0 = history[0].sup_abs_ut;
    history.iter().all(|r| r.sup_abs_ut <= s0 + 1e-7)
        && history
            .windows(2)
            .all(|w| w[1].sup_abs_ut <= w[0].sup_abs_ut + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::{positivity_matrix_unchecked, JRealTwoForm};
    use crate::model::{sample, TorusGrid, TrigPolySpec};
    use std::sync::Arc;

    fn flat(grid: &Arc<TorusGrid>, c: f64) -> FlowProblem {
        FlowProblem::new(TwoFormField::standard(grid), ScalarField::constant(grid, c)).unwrap()
    }

    #[test]
    fn constant_forcing_is_integrated_exactly() {
        let g = TorusGrid::z0_plane(2, 16).unwrap();
        let pb = flat(&g, 0.3);
        let settings = FlowSettings::default();
        let mut s = FlowState::new(&pb, ScalarField::zeros(&g), &settings).unwrap();
        for _ in 0..50 {
            s = step(&s, &pb, &settings).unwrap();
        }
        let want = -0.3 * s.t;
        assert!(s.u.values().iter().all(|v| (v - want).abs() < 1e-12));
    }

    #[test]
    fn cfl_scaling() {
        let g = TorusGrid::z0_plane(2, 64).unwrap();
        let h = 2.0 * std::f64::consts::PI / 64.0;
        let u = ScalarField::zeros(&g);
        let dt = cfl_dt(&u, &TwoFormField::standard(&g), 0.2).unwrap();
        assert!((dt - 0.2 * h * h / 2.0).abs() < 1e-15);
        let two = TwoFormField::constant(&g, &JRealTwoForm::standard(2).scale(2.0));
        let dt2 = cfl_dt(&u, &two, 0.2).unwrap();
        assert!((dt2 - 2.0 * dt).abs() < 1e-15);
    }

    #[test]
    fn normalize_is_idempotent() {
        let g = TorusGrid::z0_plane(2, 16).unwrap();
        let u = sample(&TrigPolySpec::zero().with(vec![1, 2], 0.3, 0.2), &g)
            .unwrap()
            .shift(1.7);
        let a = normalize(&u);
        assert!(a.mean().abs() < 1e-13);
        assert!(normalize(&a).max_abs_diff(&a).unwrap() < 1e-13);
        assert_eq!(normalize(&ScalarField::constant(&g, 2.5)).max_abs(), 0.0);
    }

    #[test]
    fn huge_step_is_rejected_and_halved() {
        let g = TorusGrid::z0_plane(2, 32).unwrap();
        let pb = flat(&g, 0.0);
        let u0 = sample(&TrigPolySpec::zero().with(vec![3, 2], 0.05, 0.0), &g).unwrap();
        let settings = FlowSettings {
            dt0: Some(50.0),
            ..FlowSettings::default()
        };
        let s = FlowState::new(&pb, u0, &settings).unwrap();
        let next = step(&s, &pb, &settings).unwrap();
        assert!(next.t < 50.0);
        assert!(next.evaluation().min_eig > POSITIVITY_MARGIN);
    }

    #[test]
    fn maximum_principle_monitor_flags_jumps() {
        let rec = |s: f64| DiagnosticsRecord {
            step: 0,
            t: 0.0,
            dt: 0.0,
            sup_abs_ut: s,
            osc_u: 0.0,
            max_beta: 0.0,
            max_eta: 0.0,
            min_eig_omega_tilde: 1.0,
            osc_ut: 0.0,
            spectral_tail: 0.0,
        };
        assert!(monitor_maximum_principle(&[rec(0.3), rec(0.3), rec(0.3)]));
        assert!(monitor_maximum_principle(&[rec(0.3), rec(0.2), rec(0.1)]));
        assert!(!monitor_maximum_principle(&[rec(0.3), rec(0.2), rec(0.25)]));
        assert!(!monitor_maximum_principle(&[rec(0.3)]));
    }

    #[test]
    fn trivial_run_reports_b_tilde() {
        let g = TorusGrid::z0_plane(2, 16).unwrap();
        let res = run_to_steady(
            &flat(&g, 0.3),
            ScalarField::zeros(&g),
            &FlowSettings::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert!((res.b_tilde + 0.3).abs() < 1e-12);
        assert!(res.u_normalized.max_abs() < 1e-12);
    }

    #[test]
    fn min_eigenvalue_scan_matches_brute_force() {
        let g = TorusGrid::new(2, vec![0, 1, 4, 7], vec![8, 8, 8, 8]).unwrap();
        let u = sample(
            &TrigPolySpec::zero().with(vec![1, 0, 1, 0], 0.2, 0.3).with(
                vec![0, 1, -1, 1],
                0.15,
                1.3,
            ),
            &g,
        )
        .unwrap();
        let oh = TwoFormField::standard(&g);
        let jet = Jet::new(&u);
        let (fast, _) = min_positivity_eigenvalue(&jet, &oh);
        let ot = crate::operators::omega_tilde(&u, &oh).unwrap();
        let slow = (0..g.len())
            .map(|p| hermitian_eigenvalues(&positivity_matrix_unchecked(ot.at(p)))[0])
            .fold(f64::INFINITY, f64::min);
        assert!((fast - slow).abs() < 1e-13);
        let problem = FlowProblem::new(oh.clone(), ScalarField::zeros(&g)).unwrap();
        let ev = evaluate(&problem, &u, 0.0, true).unwrap();
        assert!((ev.min_eig - slow).abs() < 1e-13);
    }
}
