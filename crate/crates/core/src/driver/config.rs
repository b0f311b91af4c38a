//! TOML simulation configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::fields::log_uniform_field;
use super::timestep::TimeStepController;
use crate::assembly::{BoundaryCondition, FlowModel};
use crate::constitutive::{FluidParams, VanGenuchtenParams, SECONDS_PER_DAY, SECONDS_PER_YEAR};
use crate::error::{param, Error, Result};
use crate::linalg::GmresConfig;
use crate::mesh::{read_raster, BoundarySide, CartesianMesh, RockField};
use crate::nonlinear::NewtonConfig;
use crate::state::StateVector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    Second,
    Day,
    Year,
}

impl TimeUnit {
    pub fn seconds(self) -> f64 {
        match self {
            TimeUnit::Second => 1.0,
            TimeUnit::Day => SECONDS_PER_DAY,
            TimeUnit::Year => SECONDS_PER_YEAR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub dims: [usize; 3],
    /// Domain size (m); cell sizes are `extent / dims`.
    pub extent: [f64; 3],
    #[serde(default)]
    pub origin: [f64; 3],
}

impl MeshSpec {
    pub fn build(&self) -> Result<CartesianMesh> {
        let mut size = [0.0; 3];
        for a in 0..3 {
            if self.dims[a] == 0 {
                return Err(Error::Mesh(format!("dimension {a} has zero cells")));
            }
            size[a] = self.extent[a] / self.dims[a] as f64;
        }
        CartesianMesh::new(self.dims, size, self.origin)
    }
}

/// A per-cell property: a constant, a raster file (optionally scaled) or a
/// seeded synthetic log-uniform field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Constant(f64),
    File {
        file: PathBuf,
        #[serde(default = "unit_scale")]
        scale: f64,
    },
    Synthetic {
        seed: u64,
        min: f64,
        max: f64,
        #[serde(default = "default_correlation")]
        correlation_cells: usize,
    },
}

fn unit_scale() -> f64 {
    1.0
}

fn default_correlation() -> usize {
    2
}

impl FieldSpec {
    pub fn values(&self, dims: [usize; 3], base_dir: Option<&Path>) -> Result<Vec<f64>> {
        let n = dims.iter().product();
        match self {
            FieldSpec::Constant(v) => Ok(vec![*v; n]),
            FieldSpec::File { file, scale } => {
                let path = match base_dir {
                    Some(b) if file.is_relative() => b.join(file),
                    _ => file.clone(),
                };
                Ok(read_raster(&path, n)?.into_iter().map(|v| v * scale).collect())
            }
            FieldSpec::Synthetic {
                seed,
                min,
                max,
                correlation_cells,
            } => log_uniform_field(dims, *seed, *min, *max, *correlation_cells),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RockSpec {
    pub permeability: FieldSpec,
    pub porosity: FieldSpec,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FluxUnit {
    #[default]
    #[serde(rename = "kg/m2/s")]
    PerSecond,
    #[serde(rename = "kg/m2/day")]
    PerDay,
    #[serde(rename = "kg/m2/year")]
    PerYear,
}

impl FluxUnit {
    pub fn to_si(self, v: f64) -> f64 {
        match self {
            FluxUnit::PerSecond => v,
            FluxUnit::PerDay => v / SECONDS_PER_DAY,
            FluxUnit::PerYear => v / SECONDS_PER_YEAR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConditionSpec {
    /// Mass fluxes, positive into the domain.
    Neumann {
        #[serde(default)]
        water: f64,
        #[serde(default)]
        hydrogen: f64,
        #[serde(default)]
        unit: FluxUnit,
    },
    Dirichlet { p_l: f64, s_l: f64, rho_lh: f64 },
}

impl ConditionSpec {
    pub fn to_condition(self) -> BoundaryCondition {
        match self {
            ConditionSpec::Neumann { water, hydrogen, unit } => BoundaryCondition::NeumannFlux {
                water: unit.to_si(water),
                hydrogen: unit.to_si(hydrogen),
            },
            ConditionSpec::Dirichlet { p_l, s_l, rho_lh } => BoundaryCondition::Dirichlet { p_l, s_l, rho_lh },
        }
    }
}

/// Condition applied to the faces of `side` whose centers lie in the box
/// `[lower, upper]` (the whole side by default). Later entries override
/// earlier ones; unlisted faces are impervious.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub side: BoundarySide,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<[f64; 3]>,
    #[serde(flatten)]
    pub condition: ConditionSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub p_l: f64,
    pub s_l: f64,
    pub rho_lh: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(default)]
    pub unit: TimeUnit,
    pub initial_dt: f64,
    pub end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
}

impl TimeSpec {
    pub fn controller(&self) -> Result<TimeStepController> {
        let u = self.unit.seconds();
        let dt0 = self.initial_dt * u;
        let end = self.end * u;
        let dt_min = self.dt_min.map_or(1e-3 * dt0, |v| v * u);
        let dt_max = self.dt_max.map_or((0.25 * end).max(dt0), |v| v * u);
        TimeStepController::new(dt0, dt_min, dt_max, end)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Where the ledger and snapshots are written; nothing is written when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    /// Snapshot times in the `[time]` unit. The final state is always
    /// written.
    #[serde(default)]
    pub snapshots: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub mesh: MeshSpec,
    pub rock: RockSpec,
    pub fluid: FluidParams,
    pub van_genuchten: VanGenuchtenParams,
    #[serde(default)]
    pub gravity: [f64; 3],
    #[serde(default)]
    pub boundary: Vec<BoundarySpec>,
    pub initial: InitialSpec,
    #[serde(default)]
    pub solver: NewtonConfig,
    #[serde(default)]
    pub linear: GmresConfig,
    pub time: TimeSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory that relative file paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl SimulationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that can be checked without running, including
    /// that referenced files exist and match the mesh.
    pub fn validate(&self) -> Result<()> {
        self.build_model()?;
        self.solver.validate()?;
        self.linear.validate()?;
        self.time.controller()?;
        let init = self.initial;
        if !(init.p_l.is_finite() && init.s_l.is_finite() && init.rho_lh.is_finite()) {
            return Err(param("initial", "must be finite"));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<FlowModel> {
        let mesh = self.mesh.build()?;
        let dims = mesh.dims();
        let base = self.base_dir.as_deref();
        let rock = RockField::new(
            self.rock.permeability.values(dims, base)?,
            self.rock.porosity.values(dims, base)?,
        )?;
        let mut bcs = vec![BoundaryCondition::IMPERVIOUS; mesh.boundary_faces().len()];
        for spec in &self.boundary {
            let lower = spec.lower.unwrap_or([f64::NEG_INFINITY; 3]);
            let upper = spec.upper.unwrap_or([f64::INFINITY; 3]);
            let faces = mesh.boundary_faces_in(spec.side, lower, upper);
            if faces.is_empty() {
                return Err(Error::Config(format!("boundary entry on {:?} selects no faces", spec.side)));
            }
            for f in faces {
                bcs[f] = spec.condition.to_condition();
            }
        }
        FlowModel::new(mesh, rock, self.fluid, self.van_genuchten, self.gravity, bcs)
    }

    pub fn initial_state(&self) -> StateVector {
        let n = self.mesh.dims.iter().product();
        StateVector::uniform(n, self.initial.p_l, self.initial.s_l, self.initial.rho_lh)
    }

    pub fn controller(&self) -> Result<TimeStepController> {
        let u = self.time.unit.seconds();
        let stops: Vec<f64> = self.output.snapshots.iter().map(|t| t * u).collect();
        Ok(self.time.controller()?.with_stops(&stops))
    }
}
