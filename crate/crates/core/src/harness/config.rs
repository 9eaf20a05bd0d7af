//! Experiment configuration: a TOML file plus `section.key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corrector::CorrectorConfig;
use crate::error::{Error, Result};
use crate::fem::ProblemId;
use crate::grf::PriorConfig;
use crate::network::{NetConfig, TrainConfig};
use crate::solver::NewtonConfig;
use crate::topopt::TopOptConfig;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "NEUROCORR_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    /// `n × n` quadrilaterals on the unit square.
    UnitSquare { n: usize },
    /// Structured triangles on the square with the two circular voids.
    Voided { h: f64 },
    /// Gmsh 2.2 ASCII file, boundary classified against the problem's domain.
    Gmsh { path: PathBuf },
}

impl MeshSpec {
    pub fn default_for(problem: ProblemId) -> Self {
        match problem {
            ProblemId::P1 => MeshSpec::UnitSquare { n: 64 },
            ProblemId::P2 => MeshSpec::Voided { h: 0.01 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Training samples `N`; the test split holds `⌊0.25 N⌋` more.
    pub n_samples: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { n_samples: 256 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Number of test samples to evaluate; `0` means all of them.
    pub n_samples: usize,
    /// Test sample used by `correct` and `probe`.
    pub sample: usize,
    /// Seed of the random direction used by `probe`.
    pub probe_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_samples: 0,
            sample: 0,
            probe_seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub linear_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let newton = NewtonConfig::default();
        Self {
            newton_tol: newton.residual_tol,
            newton_max_iter: newton.max_iter,
            linear_tol: newton.linear.rel_tol,
        }
    }
}

impl SolverConfig {
    pub fn newton(&self) -> NewtonConfig {
        let mut cfg = NewtonConfig {
            residual_tol: self.newton_tol,
            max_iter: self.newton_max_iter,
            ..Default::default()
        };
        cfg.linear.rel_tol = self.linear_tol;
        cfg
    }

    pub fn corrector(&self) -> CorrectorConfig {
        let mut cfg = CorrectorConfig {
            converged_tol: self.newton_tol,
            ..Default::default()
        };
        cfg.linear.rel_tol = self.linear_tol;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    /// `None` selects [`MeshSpec::default_for`] the problem.
    pub mesh: Option<MeshSpec>,
    /// The prior seed is the data seed.
    pub prior: PriorConfig,
    pub data: DataConfig,
    pub network: NetConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub solver: SolverConfig,
    pub topopt: TopOptConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemId::P1,
            mesh: None,
            prior: PriorConfig::default(),
            data: DataConfig::default(),
            network: NetConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            solver: SolverConfig::default(),
            topopt: TopOptConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn mesh_spec(&self) -> MeshSpec {
        self.mesh.clone().unwrap_or_else(|| MeshSpec::default_for(self.problem))
    }

    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        self.network.validate()?;
        self.train.validate()?;
        self.topopt.validate()?;
        if self.data.n_samples == 0 {
            return Err(Error::Config("data.n_samples must be at least 1".into()));
        }
        match self.mesh_spec() {
            MeshSpec::UnitSquare { .. } if self.problem == ProblemId::P2 => {
                Err(Error::Config("problem p2 needs a voided or gmsh mesh".into()))
            }
            MeshSpec::Voided { .. } if self.problem == ProblemId::P1 => {
                Err(Error::Config("problem p1 needs a unit_square or gmsh mesh".into()))
            }
            _ => Ok(()),
        }
    }

    /// Parse TOML text, apply overrides, validate.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load `path` (defaults when `None`), apply overrides and the output-directory variable.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut cfg = Self::from_toml(&text, overrides)?;
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            cfg.output_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

/// Set `section.key = value` in `table`; the value is read as TOML and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = keys.split_last().expect("at least one key");
    let mut node = table;
    for k in parents {
        let entry = node
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{k}` in `{path}` is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}
