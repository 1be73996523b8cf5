//! Run configuration: one structured JSON document drives every CLI
//! subcommand, so a run is reproducible from its config file alone.

use crate::error::{Error, Result};
use crate::potentials::{admissible_window, AdmissibleWindow, CentralPotential, PotentialSpec};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub window: WindowSpec,
    #[serde(default)]
    pub scan: ScanSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expand: Option<ExpandSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actionmap: Option<ActionMapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub r_lo: f64,
    pub r_hi: f64,
    #[serde(default = "default_window_grid")]
    pub grid_size: usize,
}

fn default_window_grid() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default = "default_scan_grid")]
    pub n_grid: usize,
}

impl Default for ScanSpec {
    fn default() -> ScanSpec {
        ScanSpec {
            n_grid: default_scan_grid(),
        }
    }
}

fn default_scan_grid() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpandSpec {
    pub i2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionMapSpec {
    pub i1_min: f64,
    pub i1_max: f64,
    pub i1_count: usize,
    pub i2_min: f64,
    pub i2_max: f64,
    pub i2_count: usize,
}

impl ActionMapSpec {
    pub fn grid(&self) -> Vec<(f64, f64)> {
        let mut points = Vec::with_capacity(self.i1_count * self.i2_count);
        for a in 0..self.i1_count {
            let i1 = if self.i1_count == 1 {
                self.i1_min
            } else {
                self.i1_min + (self.i1_max - self.i1_min) * a as f64 / (self.i1_count - 1) as f64
            };
            for b in 0..self.i2_count {
                let i2 = if self.i2_count == 1 {
                    self.i2_min
                } else {
                    self.i2_min + (self.i2_max - self.i2_min) * b as f64 / (self.i2_count - 1) as f64
                };
                points.push((i1, i2));
            }
        }
        points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PerturbationSpec {
    /// f(q) = q_axis (1-based axis index in the config, default 1).
    CoordinatePull {
        #[serde(default = "default_axis")]
        axis: usize,
    },
    /// f(q) = q1 q2 / (1 + |q|^2).
    BoundedProduct,
}

fn default_axis() -> usize {
    1
}

impl PerturbationSpec {
    pub fn build(&self) -> Result<Box<dyn crate::dynamics::Perturbation>> {
        match self {
            PerturbationSpec::CoordinatePull { axis } => {
                if !(1..=3).contains(axis) {
                    return Err(Error::InvalidConfig(format!(
                        "perturbation axis must be 1, 2 or 3, got {axis}"
                    )));
                }
                Ok(Box::new(crate::dynamics::CoordinatePull::new(axis - 1)))
            }
            PerturbationSpec::BoundedProduct => Ok(Box::new(crate::dynamics::BoundedProduct)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    pub perturbation: PerturbationSpec,
    pub epsilons: Vec<f64>,
    pub n_periods: f64,
    #[serde(default = "default_steps_per_period")]
    pub steps_per_period: usize,
    #[serde(default = "default_sample_stride")]
    pub sample_stride: usize,
    /// Radius (in I2 units) of the neighborhood excluded around each
    /// exceptional I2 value.
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub initial_i1: f64,
    pub initial_i2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<[f64; 3]>,
    #[serde(default = "default_true")]
    pub check_exceptional: bool,
    #[serde(default)]
    pub write_trajectories: bool,
}

fn default_steps_per_period() -> usize {
    400
}

fn default_sample_stride() -> usize {
    400
}

fn default_rho() -> f64 {
    0.05
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window.r_lo > 0.0 && self.window.r_lo < self.window.r_hi) {
            return Err(Error::InvalidConfig(format!(
                "window requires 0 < r_lo < r_hi, got ({}, {})",
                self.window.r_lo, self.window.r_hi
            )));
        }
        if self.window.grid_size < 2 {
            return Err(Error::InvalidConfig("window grid_size must be >= 2".into()));
        }
        if self.scan.n_grid < 2 {
            return Err(Error::InvalidConfig("scan n_grid must be >= 2".into()));
        }
        if let Some(map) = &self.actionmap {
            if map.i1_count == 0 || map.i2_count == 0 {
                return Err(Error::InvalidConfig("actionmap grid counts must be positive".into()));
            }
            if map.i1_min < 0.0 || map.i1_min > map.i1_max || map.i2_min > map.i2_max {
                return Err(Error::InvalidConfig("actionmap grid bounds out of order".into()));
            }
        }
        if let Some(dyn_spec) = &self.dynamics {
            if dyn_spec.epsilons.is_empty() {
                return Err(Error::InvalidConfig("dynamics needs at least one epsilon".into()));
            }
            for &eps in &dyn_spec.epsilons {
                if !(eps > 0.0) || !eps.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "epsilon values must be positive and finite, got {eps}"
                    )));
                }
            }
            let mut sorted = dyn_spec.epsilons.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidConfig("epsilon values must be distinct".into()));
            }
            if !(dyn_spec.n_periods > 0.0) {
                return Err(Error::InvalidConfig("n_periods must be positive".into()));
            }
            if dyn_spec.steps_per_period == 0 {
                return Err(Error::InvalidConfig("steps_per_period must be positive".into()));
            }
            if !(dyn_spec.rho > 0.0) {
                return Err(Error::InvalidConfig("rho must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn build_potential(&self) -> Result<Box<dyn CentralPotential>> {
        self.potential.build()
    }

    pub fn build_window(&self, potential: &dyn CentralPotential) -> Result<AdmissibleWindow> {
        admissible_window(
            potential,
            self.window.r_lo,
            self.window.r_hi,
            self.window.grid_size,
        )
    }
}
