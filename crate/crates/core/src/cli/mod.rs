//! Command-line front end: `identities`, `flow` and `check`.

pub mod config;
pub mod snapshot;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{run_to_steady_with, DiagnosticsRecord};
use crate::model::ScalarField;
use crate::operators::{log_ratio_from_jet, Jet};
use crate::verification::run_identity_suite;

pub use config::RunConfig;
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotHeader};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_POSITIVITY: i32 = 3;
pub const EXIT_STIFF: i32 = 4;

fn fail(code: i32, err: &Error) -> i32 {
    eprintln!("error: {err}");
    code
}

/// Runs the identity suite, writes the JSON report and prints a table.
pub fn cmd_identities(
    n: usize,
    trials: usize,
    seed: u64,
    output: &Path,
    out: &mut impl Write,
) -> i32 {
    let reports = match run_identity_suite(n, trials, seed) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_INVALID, &e),
    };
    let written = serde_json::to_string_pretty(&reports)
        .map_err(Error::from)
        .and_then(|json| std::fs::write(output, json + "\n").map_err(Error::from));
    if let Err(e) = written {
        return fail(EXIT_INVALID, &e);
    }
    let _ = writeln!(
        out,
        "{:<34} {:>6} {:>12} {:>9}  result",
        "identity", "trials", "max rel err", "tol"
    );
    for r in &reports {
        let _ = writeln!(
            out,
            "{:<34} {:>6} {:>12.3e} {:>9.0e}  {}",
            r.identity,
            r.trials,
            r.max_relative_error,
            r.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    if reports.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

#[derive(Serialize)]
struct CsvRow {
    step: usize,
    t: f64,
    dt: f64,
    sup_abs_ut: f64,
    osc_u: f64,
    max_beta: f64,
    max_eta: f64,
    min_eig: f64,
    osc_ut: f64,
    spectral_tail: f64,
}

impl From<&DiagnosticsRecord> for CsvRow {
    fn from(r: &DiagnosticsRecord) -> Self {
        Self {
            step: r.step,
            t: r.t,
            dt: r.dt,
            sup_abs_ut: r.sup_abs_ut,
            osc_u: r.osc_u,
            max_beta: r.max_beta,
            max_eta: r.max_eta,
            min_eig: r.min_eig_omega_tilde,
            osc_ut: r.osc_ut,
            spectral_tail: r.spectral_tail,
        }
    }
}

#[derive(Serialize)]
struct FlowResultFile {
    converged: bool,
    b_tilde: f64,
    residual: f64,
    t: f64,
    steps: usize,
    wall_time_s: f64,
    final_snapshot: PathBuf,
}

/// Integrates the configured flow to steady state.
pub fn cmd_flow(config_path: &Path, out: &mut impl Write) -> i32 {
    let cfg = match RunConfig::from_path(config_path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INVALID, &e),
    };
    let run = match cfg.prepare() {
        Ok(r) => r,
        Err(e) => return fail(EXIT_INVALID, &e),
    };
    let dir = &cfg.output_dir;
    if let Err(e) = std::fs::create_dir_all(dir) {
        return fail(EXIT_INVALID, &e.into());
    }
    let mut csv = match csv::Writer::from_path(dir.join("diagnostics.csv")) {
        Ok(w) => w,
        Err(e) => return fail(EXIT_INVALID, &e.into()),
    };
    let started = Instant::now();
    let mut io_error: Option<Error> = None;
    let interval = cfg.snapshot_interval;
    let result = run_to_steady_with(&run.problem, run.u0.clone(), &run.settings, |state| {
        if io_error.is_some() {
            return;
        }
        let mut emit = || -> Result<()> {
            csv.serialize(CsvRow::from(&state.record()))?;
            if interval > 0 && state.step_count % interval == 0 {
                let name = format!("u_{:08}.snap", state.step_count);
                write_snapshot(&dir.join(name), &state.u, state.t, "u")?;
            }
            Ok(())
        };
        if let Err(e) = emit() {
            io_error = Some(e);
        }
    });
    let res = match result {
        Ok(r) => r,
        Err(e @ Error::Positivity { .. }) => return fail(EXIT_POSITIVITY, &e),
        Err(e @ Error::Stiffness { .. }) => return fail(EXIT_STIFF, &e),
        Err(e) => return fail(EXIT_INVALID, &e),
    };
    if let Some(e) = io_error {
        return fail(EXIT_INVALID, &e);
    }
    let final_snapshot = dir.join("u_final.snap");
    let mut finish = || -> Result<()> {
        csv.flush()?;
        write_snapshot(&final_snapshot, &res.u_final, res.t, "u")?;
        write_snapshot(
            &dir.join("u_normalized.snap"),
            &res.u_normalized,
            res.t,
            "u_normalized",
        )?;
        let file = FlowResultFile {
            converged: res.converged,
            b_tilde: res.b_tilde,
            residual: res.residual,
            t: res.t,
            steps: res.history.len() - 1,
            wall_time_s: started.elapsed().as_secs_f64(),
            final_snapshot: final_snapshot.clone(),
        };
        std::fs::write(
            dir.join("result.json"),
            serde_json::to_string_pretty(&file)? + "\n",
        )?;
        Ok(())
    };
    if let Err(e) = finish() {
        return fail(EXIT_INVALID, &e);
    }
    let _ = writeln!(
        out,
        "converged={} t={:.6} steps={} b_tilde={:.12e} residual={:.3e}",
        res.converged,
        res.t,
        res.history.len() - 1,
        res.b_tilde,
        res.residual
    );
    if res.converged {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

/// Elliptic residual `osc(log(Ω̃^n/Ω^n) − f)` and implied `b̃` of a snapshot.
pub fn check_residual(cfg: &RunConfig, snapshot: &Snapshot) -> Result<(f64, f64)> {
    let grid = cfg.build_grid()?;
    let h = &snapshot.header;
    if h.n != grid.n() || h.active_dims != grid.active_dims() || h.shape != grid.sizes() {
        return Err(Error::ShapeMismatch {
            expected: grid.sizes().to_vec(),
            found: h.shape.clone(),
        });
    }
    let problem = cfg.build_problem(&grid)?;
    let u = ScalarField::new(grid, snapshot.values.clone())?;
    let lr = log_ratio_from_jet(&Jet::new(&u), &problem.omega_h, 0.0)?;
    let r = lr.log_ratio.sub(&problem.f)?;
    Ok((r.oscillation(), r.mean()))
}

/// Checks a snapshot against the stationary equation of a config.
pub fn cmd_check(config_path: &Path, snapshot_path: &Path, out: &mut impl Write) -> i32 {
    let cfg = match RunConfig::from_path(config_path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INVALID, &e),
    };
    let snap = match read_snapshot(snapshot_path) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_INVALID, &e),
    };
    match check_residual(&cfg, &snap) {
        Ok((residual, b_tilde)) => {
            let _ = writeln!(
                out,
                "residual={residual:.6e} b_tilde={b_tilde:.12e} tol={:.1e}",
                cfg.tol_steady
            );
            if residual <= cfg.tol_steady {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e @ Error::Positivity { .. }) => fail(EXIT_POSITIVITY, &e),
        Err(e) => fail(EXIT_INVALID, &e),
    }
}
