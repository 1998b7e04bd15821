//! JSON run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowProblem, FlowSettings};
use crate::model::{build_model, build_omega_h, sample, ScalarField, TorusGrid, TrigPolySpec};
use crate::operators::TwoFormField;
use crate::verification::build_manufactured;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub active_dims: Vec<usize>,
    pub sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaHConfig {
    pub c: f64,
    #[serde(default)]
    pub rho: TrigPolySpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedConfig {
    pub u_star: TrigPolySpec,
}

/// Either an explicit `f` or one reverse-engineered from a stationary `u*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    Spec(TrigPolySpec),
    Manufactured(ManufacturedConfig),
}

fn default_sigma() -> f64 {
    0.2
}
fn default_tol() -> f64 {
    1e-8
}
fn default_t_max() -> f64 {
    200.0
}
fn default_output() -> PathBuf {
    PathBuf::from("qmaflow-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub grid: GridConfig,
    pub omega_h: OmegaHConfig,
    pub f: ForcingConfig,
    #[serde(default)]
    pub u0: TrigPolySpec,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_tol")]
    pub tol_steady: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Steps between snapshots of `u`; zero writes only the final state.
    #[serde(default)]
    pub snapshot_interval: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

/// Everything a run needs, checked and sampled.
#[derive(Clone, Debug)]
pub struct PreparedRun {
    pub grid: Arc<TorusGrid>,
    pub problem: FlowProblem,
    pub u0: ScalarField,
    pub settings: FlowSettings,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn check_scalars(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("sigma", self.sigma)?;
        positive("tol_steady", self.tol_steady)?;
        positive("t_max", self.t_max)
    }

    pub fn settings(&self) -> FlowSettings {
        FlowSettings {
            sigma: self.sigma,
            tol_steady: self.tol_steady,
            t_max: self.t_max,
            ..FlowSettings::default()
        }
    }

    pub fn build_grid(&self) -> Result<Arc<TorusGrid>> {
        build_model(self.n)?;
        TorusGrid::new(
            self.n,
            self.grid.active_dims.clone(),
            self.grid.sizes.clone(),
        )
    }

    /// Builds Ω_h and f; every failure here is a configuration error.
    pub fn build_problem(&self, grid: &Arc<TorusGrid>) -> Result<FlowProblem> {
        self.check_scalars()?;
        let omega_h: TwoFormField = build_omega_h(self.omega_h.c, &self.omega_h.rho, grid)?;
        let f = match &self.f {
            ForcingConfig::Spec(spec) => sample(spec, grid)?,
            ForcingConfig::Manufactured(m) => build_manufactured(&m.u_star, &omega_h, grid)?.f,
        };
        FlowProblem::new(omega_h, f)
    }

    pub fn prepare(&self) -> Result<PreparedRun> {
        let grid = self.build_grid()?;
        let problem = self.build_problem(&grid)?;
        let u0 = sample(&self.u0, &grid)?;
        Ok(PreparedRun {
            grid,
            problem,
            u0,
            settings: self.settings(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let text = r#"{
            "n": 2,
            "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
            "omega_h": {"c": 1.0},
            "f": {"spec": [{"k": [0, 0], "amplitude": 0.3}]}
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.sigma, 0.2);
        assert_eq!(cfg.tol_steady, 1e-8);
        let run = cfg.prepare().unwrap();
        assert!(run.problem.f.values().iter().all(|&v| v == 0.3));
        assert_eq!(run.u0.max_abs(), 0.0);
    }

    #[test]
    fn manufactured_forcing() {
        let text = r#"{
            "n": 2,
            "grid": {"active_dims": [0, 4], "sizes": [16, 16]},
            "omega_h": {"c": 1.0, "rho": []},
            "f": {"manufactured": {"u_star": [{"k": [1, 0], "amplitude": 0.1, "phase": 0.0}]}}
        }"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        let run = cfg.prepare().unwrap();
        assert!(run.problem.f.max_abs() > 0.0);
    }

    #[test]
    fn rejects_bad_dimension_and_unknown_fields() {
        let text = r#"{"n": 1, "grid": {"active_dims": [0], "sizes": [8]},
                       "omega_h": {"c": 1.0}, "f": {"spec": []}}"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert!(matches!(
            cfg.prepare(),
            Err(Error::UnsupportedDimension { n: 1 })
        ));
        let bad = r#"{"n": 2, "grid": {"active_dims": [0], "sizes": [8]},
                      "omega_h": {"c": 1.0}, "f": {"spec": []}, "colour": 3}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
    }
}
