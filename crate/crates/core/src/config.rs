//! Run configuration: one TOML file drives every command. Parsing is
//! strict (unknown keys are errors) and `print-config` emits the fully
//! populated form so runs are self-documenting.

use crate::error::{Error, Result};
use crate::fields::BoundaryData;
use crate::grid::{GridGeometry, SpatialGrid};
use crate::kernel::{InteractionKernel, KernelFamily, KernelSpec};
use crate::potential::PotentialParams;
use crate::solver::SolverConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DataUnits {
    /// Literal values.
    #[default]
    Absolute,
    /// Multiples of the equilibrium magnetization.
    SStar,
    /// Multiples of the admissible terminal bound `(1/2 beta) Phi'(s_star)`.
    GBound,
}

/// Initial/terminal data as an expression over `z` or a field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Constant {
        value: f64,
        #[serde(default)]
        units: DataUnits,
    },
    /// Axis-aligned band: `inside` within torus distance `halfwidth` of
    /// `center` along `axis`, `outside` elsewhere.
    Step {
        axis: usize,
        center: f64,
        halfwidth: f64,
        inside: f64,
        outside: f64,
        #[serde(default)]
        units: DataUnits,
    },
    /// Disk indicator around `center`.
    Disk {
        center: Vec<f64>,
        radius: f64,
        inside: f64,
        outside: f64,
        #[serde(default)]
        units: DataUnits,
    },
    File {
        path: String,
    },
}

impl DataSpec {
    pub fn evaluate(&self, grid: SpatialGrid, params: &PotentialParams) -> Result<Vec<f64>> {
        let scale = |units: &DataUnits| match units {
            DataUnits::Absolute => 1.0,
            DataUnits::SStar => params.s_star(),
            DataUnits::GBound => params.g_bound(),
        };
        let torus_dist = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(1.0);
            d.min(1.0 - d)
        };
        match self {
            DataSpec::Constant { value, units } => Ok(vec![value * scale(units); grid.len()]),
            DataSpec::Step { axis, center, halfwidth, inside, outside, units } => {
                if *axis >= grid.d {
                    return Err(Error::Config(format!("data.step.axis = {axis} out of range")));
                }
                let k = scale(units);
                Ok((0..grid.len())
                    .map(|idx| {
                        let c = grid.coords(idx);
                        if torus_dist(c[*axis], *center) < *halfwidth {
                            inside * k
                        } else {
                            outside * k
                        }
                    })
                    .collect())
            }
            DataSpec::Disk { center, radius, inside, outside, units } => {
                if center.len() != grid.d {
                    return Err(Error::Config("data.disk.center length must match dimension".into()));
                }
                let k = scale(units);
                Ok((0..grid.len())
                    .map(|idx| {
                        let c = grid.coords(idx);
                        let mut r2 = 0.0;
                        for (axis, &ctr) in center.iter().enumerate() {
                            let d = torus_dist(c[axis], ctr);
                            r2 += d * d;
                        }
                        if r2.sqrt() < *radius {
                            inside * k
                        } else {
                            outside * k
                        }
                    })
                    .collect())
            }
            DataSpec::File { path } => {
                let (geometry, values, _) = crate::fields::load_field(std::path::Path::new(path))?;
                if geometry.space != grid || geometry.nt != 1 {
                    return Err(Error::Config(format!(
                        "data file {path} must hold a single slice on the run grid"
                    )));
                }
                Ok(values)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(flatten)]
    pub family: KernelFamily,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anisotropy: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `beta = 1 / beta_inv`; the paper-style temperature knob.
    pub beta_inv: f64,
    pub lambda: f64,
    pub t_horizon: f64,
    pub dimension: usize,
    pub nx: usize,
    pub nt: usize,
    pub kernel: KernelConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub s0: DataSpec,
    pub g: DataSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: String,
    #[serde(default = "yes")]
    pub write_fields: bool,
    #[serde(default)]
    pub per_slice_csv: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_thread")]
    pub threads: usize,
    pub model: ModelConfig,
    pub data: DataConfig,
    #[serde(default = "default_solver")]
    pub solver: SolverConfig,
    pub outputs: OutputConfig,
}

fn one_thread() -> usize {
    1
}

fn default_solver() -> SolverConfig {
    SolverConfig::default()
}

impl Default for RunConfig {
    /// The two-dimensional reference configuration: Gaussian kernel,
    /// `beta_inv = 0.9`, `lambda = 1/40`, horizon 1.5 on an 80^2 grid with
    /// 300 time nodes, two-phase initial band and an opposing terminal
    /// cost.
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 1,
            model: ModelConfig {
                beta_inv: 0.9,
                lambda: 0.025,
                t_horizon: 1.5,
                dimension: 2,
                nx: 80,
                nt: 300,
                kernel: KernelConfig {
                    family: KernelFamily::Gaussian { sigma: 1.0 },
                    mass: 1.0,
                    anisotropy: None,
                },
            },
            data: DataConfig {
                s0: DataSpec::Step {
                    axis: 0,
                    center: 0.5,
                    halfwidth: 0.25,
                    inside: 1.0,
                    outside: -1.0,
                    units: DataUnits::SStar,
                },
                g: DataSpec::Step {
                    axis: 0,
                    center: 0.5,
                    halfwidth: 0.25,
                    inside: 0.5,
                    outside: -0.5,
                    units: DataUnits::GBound,
                },
            },
            solver: SolverConfig::default(),
            outputs: OutputConfig {
                directory: "runs/out".to_string(),
                write_fields: true,
                per_slice_csv: false,
            },
        }
    }
}

/// Everything a command needs, resolved from the configuration: the grid,
/// the kernel with its discrete mass, the parameters built from that mass,
/// and validated boundary data.
pub struct ResolvedModel {
    pub geometry: GridGeometry,
    pub kernel: InteractionKernel,
    pub params: PotentialParams,
    pub bdata: BoundaryData,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse failure: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if !(m.beta_inv > 0.0) {
            return Err(Error::Config(format!("model.beta_inv must be positive, got {}", m.beta_inv)));
        }
        if !(m.lambda > 0.0) {
            return Err(Error::Config(format!("model.lambda must be positive, got {}", m.lambda)));
        }
        if !(m.t_horizon > 0.0) {
            return Err(Error::Config("model.t_horizon must be positive".into()));
        }
        if m.dimension != 1 && m.dimension != 2 {
            return Err(Error::Config(format!("model.dimension must be 1 or 2, got {}", m.dimension)));
        }
        if m.nx < 2 || m.nt < 2 {
            return Err(Error::Config("model.nx and model.nt must be at least 2".into()));
        }
        if !(m.kernel.mass > 0.0) {
            return Err(Error::Config("model.kernel.mass must be positive".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.solver.validate().map_err(|e| Error::Config(format!("solver: {e}")))?;
        Ok(())
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        KernelSpec {
            family: self.model.kernel.family.clone(),
            dimension: self.model.dimension,
            anisotropy: self.model.kernel.anisotropy.clone(),
            mass: self.model.kernel.mass,
        }
    }

    /// Build the grid, kernel, parameters and boundary data. The
    /// parameters take `j_hat` from the discrete kernel mass so that
    /// equilibrium constants are exact on the grid.
    pub fn resolve(&self) -> Result<ResolvedModel> {
        let grid = SpatialGrid::new(self.model.dimension, self.model.nx)?;
        let geometry = GridGeometry::new(grid, self.model.nt, self.model.t_horizon, self.model.lambda)?;
        let kernel = crate::kernel::build(&self.kernel_spec(), self.model.lambda, grid)?;
        let params = PotentialParams::new(1.0 / self.model.beta_inv, kernel.j_hat)?;
        let s0 = self.data.s0.evaluate(grid, &params)?;
        let g = self.data.g.evaluate(grid, &params)?;
        let bdata = BoundaryData::new(s0, g, grid, &params)
            .map_err(|e| Error::Config(format!("data: {e}")))?;
        Ok(ResolvedModel { geometry, kernel, params, bdata })
    }

    /// Commands solving two-phase problems reject subcritical parameters.
    pub fn require_supercritical(&self) -> Result<()> {
        if self.model.beta_inv >= self.model.kernel.mass {
            return Err(Error::Config(format!(
                "beta j_hat = {} <= 1: two phases require supercritical parameters",
                self.model.kernel.mass / self.model.beta_inv
            )));
        }
        Ok(())
    }
}
