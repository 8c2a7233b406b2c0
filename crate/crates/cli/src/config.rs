//! Numeric defaults for every command, in one place.

use std::path::Path;

use penner_core::lamsolve::PolarGrid;
use penner_core::GeometryParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Deepest census the CLI will build. Depth 8 on the running example is about nine million strands.
pub const MAX_DEPTH: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryParams,
    /// Twist profile width for geomlab.
    pub epsilon: f64,
    /// Finite-difference step for symplecticity checks.
    pub step: f64,
    pub grid: PolarGrid,
    pub depth: usize,
    pub tolerance: f64,
    pub samples: usize,
    pub seed: u64,
    /// Strand budget for census-based commands.
    pub strand_limit: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometry: GeometryParams::default(),
            epsilon: 0.5,
            step: 1e-5,
            grid: PolarGrid::default(),
            depth: 3,
            tolerance: 1e-9,
            samples: 100,
            seed: 7,
            strand_limit: 20_000_000,
        }
    }
}

/// Command-line overrides, applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub r0: Option<f64>,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub trivial_scale: Option<f64>,
    pub trivial_radius: Option<f64>,
    pub epsilon: Option<f64>,
    pub nr: Option<usize>,
    pub ntheta: Option<usize>,
    pub depth: Option<usize>,
    pub tolerance: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, o: &Overrides) -> Result<Self, CliError> {
        let mut c = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Input {
                    path: p.display().to_string(),
                    msg: e.to_string(),
                })?;
                serde_json::from_str(&text).map_err(|e| CliError::Input {
                    path: p.display().to_string(),
                    msg: e.to_string(),
                })?
            }
            None => RunConfig::default(),
        };
        let g = &mut c.geometry;
        set(&mut g.r0, o.r0);
        set(&mut g.r1, o.r1);
        set(&mut g.r2, o.r2);
        set(&mut g.trivial_scale, o.trivial_scale);
        set(&mut g.trivial_radius, o.trivial_radius);
        set(&mut c.epsilon, o.epsilon);
        set(&mut c.grid.nr, o.nr);
        set(&mut c.grid.ntheta, o.ntheta);
        set(&mut c.depth, o.depth);
        set(&mut c.tolerance, o.tolerance);
        set(&mut c.samples, o.samples);
        set(&mut c.seed, o.seed);
        c.validate()?;
        Ok(c)
    }

    /// Every admissibility inequality, checked before any command runs.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = self.geometry.violations();
        if !(self.epsilon > 0.0) {
            problems.push(format!("epsilon = {} must be positive", self.epsilon));
        }
        if !(self.step > 0.0 && self.step < 1e-2) {
            problems.push(format!("step = {} must lie in (0, 0.01)", self.step));
        }
        if let Err(e) = self.grid.validate() {
            problems.push(e.to_string());
        }
        if self.depth > MAX_DEPTH {
            problems.push(format!("depth = {} exceeds {MAX_DEPTH}", self.depth));
        }
        if !(self.tolerance > 0.0) {
            problems.push(format!("tolerance = {} must be positive", self.tolerance));
        }
        if self.samples == 0 {
            problems.push("samples must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems.join("; ")))
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}
