//! Experiment manifest: structured sections of key = value, with flags only
//! overriding.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

use iia_core::flow::{FlowConfig, Scheme};
use iia_core::lattice::Grid;
use iia_core::stability::PerturbationTerm;

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundSpec {
    /// Isotropic points per axis; ignored when `dims` is given.
    pub grid_n: usize,
    /// Per-axis point counts (powers of two).
    pub dims: Option<[usize; 6]>,
    /// Torus period per axis.
    pub length: f64,
    /// Cap on total grid points.
    pub max_points: usize,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        BackgroundSpec {
            grid_n: 8,
            dims: None,
            length: TAU,
            max_points: iia_core::lattice::DEFAULT_MAX_POINTS,
        }
    }
}

impl BackgroundSpec {
    pub fn grid(&self) -> Result<Grid> {
        let dims = self.dims.unwrap_or([self.grid_n; 6]);
        Ok(Grid::with_cap(dims, self.length, self.max_points)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSpec {
    pub scheme: String,
    pub dt_safety: f64,
    pub t_max: f64,
    pub monitor_stride: usize,
    pub reparametrized: bool,
    pub stop_tol: f64,
    pub max_steps: usize,
    pub store_fields: bool,
    pub track_gauge: bool,
}

impl Default for FlowSpec {
    fn default() -> Self {
        FlowSpec {
            scheme: "rk4".into(),
            dt_safety: 0.8,
            t_max: 1.0,
            monitor_stride: 8,
            reparametrized: true,
            stop_tol: 0.0,
            max_steps: usize::MAX,
            store_fields: true,
            track_gauge: false,
        }
    }
}

impl FlowSpec {
    pub fn config(&self) -> Result<FlowConfig> {
        if self.scheme != "rk4" {
            bail!("unknown scheme `{}` (only rk4 is provided)", self.scheme);
        }
        if !(0.0 < self.dt_safety && self.dt_safety <= 1.0) {
            bail!("dt_safety must lie in (0, 1]");
        }
        Ok(FlowConfig {
            scheme: Scheme::Rk4,
            dt_safety: self.dt_safety,
            t_max: self.t_max,
            monitor_stride: self.monitor_stride.max(1),
            reparametrized: self.reparametrized,
            stop_tol: self.stop_tol,
            max_steps: self.max_steps,
            store_fields: self.store_fields,
            track_gauge: self.track_gauge,
        })
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearizeSpec {
    pub seed_start: u64,
    pub seed_count: u64,
    pub mode_budget: usize,
    pub eps: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySpec {
    pub s_steps: usize,
    pub k_max: usize,
    pub cross_validate: bool,
}

impl Default for StabilitySpec {
    fn default() -> Self {
        StabilitySpec {
            s_steps: 64,
            k_max: 2,
            cross_validate: true,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSpec {
    /// Structures for the pointwise identity sweep.
    pub structures: usize,
    /// Seeds for the variational finite-difference sweep.
    pub variation_seeds: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Manifest {
    pub background: BackgroundSpec,
    #[serde(rename = "perturbation")]
    pub perturbations: Vec<PerturbationTerm>,
    pub flow: FlowSpec,
    pub linearize: LinearizeSpec,
    pub stability: StabilitySpec,
    pub check: CheckSpec,
    pub output: OutputSpec,
    /// Input trajectory directory (decay-report).
    pub input: Option<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let m: Manifest = toml::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        Ok(m)
    }
}
