//! TOML run configuration.
//!
//! ```toml
//! problem = "example1"
//! scheme = "aligned5"
//! grid = [[32, 32], [64, 64]]      # or a single [I, J]
//! epsilon = [1.0, 1e-6]            # or a single value
//! substeps_per_cell = 20
//!
//! [output]
//! csv = "example1.csv"
//!
//! [flags]
//! dump_solution = false
//! ```
//!
//! For the tanh profile cases, `epsilon` may instead be a table
//! `{ eps_min = ..., x0 = ..., a_steep = ... }`; plain values are `eps_min`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::anisotropy::TanhEpsProfile;
use crate::error::{Error, Result};
use crate::problems::{PROFILE_STEEPNESS, PROFILE_X0};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Aligned5,
    General9,
    Naive5,
    Naive9,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Aligned5 => "aligned5",
            Scheme::General9 => "general9",
            Scheme::Naive5 => "naive5",
            Scheme::Naive9 => "naive9",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "aligned5" => Ok(Scheme::Aligned5),
            "general9" => Ok(Scheme::General9),
            "naive5" => Ok(Scheme::Naive5),
            "naive9" => Ok(Scheme::Naive9),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }

    pub fn is_aligned(self) -> bool {
        matches!(self, Scheme::Aligned5 | Scheme::Naive5)
    }

    pub fn is_naive(self) -> bool {
        matches!(self, Scheme::Naive5 | Scheme::Naive9)
    }

    /// The other member of the AP / baseline pair on the same stencil.
    pub fn counterpart(self) -> Scheme {
        match self {
            Scheme::Aligned5 => Scheme::Naive5,
            Scheme::Naive5 => Scheme::Aligned5,
            Scheme::General9 => Scheme::Naive9,
            Scheme::Naive9 => Scheme::General9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TanhSpec {
    pub eps_min: OneOrMany<f64>,
    #[serde(default = "default_x0")]
    pub x0: f64,
    #[serde(default = "default_steepness")]
    pub a_steep: f64,
}

fn default_x0() -> f64 {
    PROFILE_X0
}

fn default_steepness() -> f64 {
    PROFILE_STEEPNESS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSpec {
    Values(OneOrMany<f64>),
    Tanh(TanhSpec),
}

impl EpsilonSpec {
    /// `(epsilon, profile)` per sweep entry.
    pub fn expand(&self) -> Vec<(f64, Option<TanhEpsProfile>)> {
        match self {
            EpsilonSpec::Values(v) => v.to_vec().into_iter().map(|e| (e, None)).collect(),
            EpsilonSpec::Tanh(t) => t
                .eps_min
                .to_vec()
                .into_iter()
                .map(|e| (e, Some(TanhEpsProfile::new(e, t.x0, t.a_steep))))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub solution: Option<PathBuf>,
    pub field_lines: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default = "yes")]
    pub condition: bool,
    #[serde(default)]
    pub dump_solution: bool,
    #[serde(default)]
    pub dump_field_lines: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Self {
            condition: true,
            dump_solution: false,
            dump_field_lines: false,
        }
    }
}

fn yes() -> bool {
    true
}

fn default_substeps() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: String,
    pub scheme: Scheme,
    pub grid: OneOrMany<[usize; 2]>,
    pub epsilon: EpsilonSpec,
    #[serde(default = "default_substeps")]
    pub substeps_per_cell: usize,
    /// Example 3 only: impose zero Neumann data instead of the exact flux.
    #[serde(default)]
    pub homogeneous_flux: bool,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub flags: Flags,
}

impl RunConfig {
    pub fn new(problem: &str, scheme: Scheme, grids: Vec<[usize; 2]>, eps: Vec<f64>) -> Self {
        Self {
            problem: problem.into(),
            scheme,
            grid: OneOrMany::Many(grids),
            epsilon: EpsilonSpec::Values(OneOrMany::Many(eps)),
            substeps_per_cell: default_substeps(),
            homogeneous_flux: false,
            output: OutputPaths::default(),
            flags: Flags::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !crate::problems::NAMES.contains(&self.problem.as_str()) {
            return Err(Error::Config(format!("unknown problem '{}'", self.problem)));
        }
        let grids = self.grid.to_vec();
        if grids.is_empty() {
            return Err(Error::Config("grid list is empty".into()));
        }
        if let Some(g) = grids.iter().find(|g| g[0] < 2 || g[1] < 2) {
            return Err(Error::Config(format!("grid {}x{} needs at least 2 cells per side", g[0], g[1])));
        }
        let eps = self.epsilon.expand();
        if eps.is_empty() {
            return Err(Error::Config("epsilon list is empty".into()));
        }
        if let Some((e, _)) = eps.iter().find(|(e, _)| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Config(format!("epsilon must be positive, got {e}")));
        }
        if self.substeps_per_cell == 0 {
            return Err(Error::Config("substeps_per_cell must be positive".into()));
        }
        Ok(())
    }
}
