//! TOML scenario configuration: named measure constructors, diffusion,
//! solve grid, simulation parameters, and declared verification checks.
//! One committed config file fully determines an acceptance run; outputs
//! carry the config hash for provenance.

use std::collections::BTreeMap;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::diffusion::DiffusionSpec;
use crate::measure::{self, Measure, MeasureError};
use crate::solver::SolveGrid;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown measure name `{0}`")]
    UnknownMeasure(String),
    #[error("measure definition cycle through `{0}`")]
    Cycle(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureDef {
    Dirac { loc: f64 },
    Uniform { a: f64, b: f64 },
    TwoPoint { x0: f64, w0: f64, x1: f64, w1: f64 },
    Gaussian { mean: f64, var: f64 },
    Tent { lambda: f64, p: f64, a: f64, b: f64 },
    Mixture { of: String, a: f64, b: f64, n_cells: usize },
    Restrict { of: String, a: f64, b: f64 },
    Scale { of: String, w: f64 },
    Normalize { of: String },
    Sum { of: Vec<String> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub struct DiffusionDef {
    pub kind: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub domain: Option<[f64; 2]>,
    pub k: Option<f64>,
}

impl DiffusionDef {
    pub fn build(&self) -> Result<DiffusionSpec, ConfigError> {
        let mut spec = match self.kind.as_str() {
            "brownian" => DiffusionSpec::brownian(),
            "geometric" => DiffusionSpec::geometric(),
            "affine" => {
                let alpha = self.alpha.ok_or_else(|| {
                    ConfigError::Invalid("affine diffusion requires `alpha`".into())
                })?;
                let beta = self.beta.ok_or_else(|| {
                    ConfigError::Invalid("affine diffusion requires `beta`".into())
                })?;
                DiffusionSpec {
                    kind: crate::diffusion::SigmaKind::Affine { alpha, beta },
                    domain: (f64::NEG_INFINITY, f64::INFINITY),
                    k: alpha.abs().max(beta.abs()).max(1.0),
                }
            }
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown diffusion kind `{other}` (expected brownian, geometric, affine)"
                )))
            }
        };
        if let Some([lo, hi]) = self.domain {
            spec.domain = (lo, hi);
        }
        if let Some(k) = self.k {
            spec.k = k;
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDef {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub t_cap: f64,
    pub n_t: usize,
    pub theta: Option<f64>,
    pub psor_tol: Option<f64>,
    pub psor_max_iters: Option<usize>,
    /// also dump the full value surface CSV on `solve`
    #[serde(default)]
    pub write_surface: bool,
}

impl GridDef {
    pub fn build(&self) -> Result<SolveGrid, ConfigError> {
        for (name, v) in [
            ("t_cap", self.t_cap),
            ("x_max - x_min", self.x_max - self.x_min),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::Invalid(format!("grid.{name} must be positive")));
            }
        }
        let mut g = SolveGrid::new(self.x_min, self.x_max, self.n_x, self.t_cap, self.n_t);
        if let Some(theta) = self.theta {
            g.theta = theta;
        }
        if let Some(tol) = self.psor_tol {
            g.psor_tol = tol;
        }
        if let Some(it) = self.psor_max_iters {
            g.psor_max_iters = it;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDef {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub t_cap: f64,
    /// evaluate the law at a fixed time instead of at tau
    pub t_eval: Option<f64>,
    /// fail `embed` when the KS distance to the target exceeds this
    pub ks_threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckDef {
    CorridorMonotonicity {
        x: f64,
        y: f64,
        t: f64,
        #[serde(default)]
        seeds: Vec<u64>,
    },
    CorridorBound {
        x: f64,
        y: f64,
        s: f64,
        t: f64,
        a: Vec<[f64; 2]>,
        #[serde(default)]
        seeds: Vec<u64>,
    },
    ScanRight {
        measure: String,
        y: Vec<f64>,
        eps: Vec<f64>,
        #[serde(default)]
        use_embedding: bool,
        /// all ratios must stay >= this value
        min_ratio: Option<f64>,
    },
    ScanSym {
        measure: String,
        y: Vec<f64>,
        eps: Vec<f64>,
        #[serde(default)]
        use_embedding: bool,
        min_ratio: Option<f64>,
    },
    AtomConsistency {},
    TailZero { x: f64 },
    TailZeroBelow { x: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDef {
    pub initial: String,
    pub target: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleDef {
    pub x: f64,
    pub n_intervals: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremDef {
    /// n_x (= n_t) sizes of the refinement ladder, e.g. [300, 600]
    pub grid_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub output_dir: std::path::PathBuf,
    #[serde(default)]
    pub measures: BTreeMap<String, MeasureDef>,
    pub problem: ProblemDef,
    pub diffusion: DiffusionDef,
    pub grid: GridDef,
    pub sim: Option<SimDef>,
    #[serde(default)]
    pub checks: Vec<CheckDef>,
    pub counterexample: Option<CounterexampleDef>,
    pub theorem: Option<TheoremDef>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for name in [&self.problem.initial, &self.problem.target] {
            if !self.measures.contains_key(name) {
                return Err(ConfigError::UnknownMeasure(name.clone()));
            }
        }
        let any_mc = self.checks.iter().any(|c| {
            matches!(
                c,
                CheckDef::CorridorMonotonicity { .. } | CheckDef::CorridorBound { .. }
            )
        });
        if any_mc && self.sim.is_none() {
            return Err(ConfigError::Invalid(
                "Monte Carlo checks declared but no [sim] block (seed required)".into(),
            ));
        }
        if let Some(sim) = &self.sim {
            if !(sim.dt > 0.0) || sim.n_paths == 0 || !(sim.t_cap > 0.0) {
                return Err(ConfigError::Invalid(
                    "sim.dt, sim.n_paths, sim.t_cap must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Resolve a named measure, following references with cycle detection.
    pub fn measure(&self, name: &str) -> Result<Measure, ConfigError> {
        self.resolve(name, &mut Vec::new())
    }

    fn resolve(&self, name: &str, stack: &mut Vec<String>) -> Result<Measure, ConfigError> {
        if stack.iter().any(|s| s == name) {
            return Err(ConfigError::Cycle(name.to_string()));
        }
        let def = self
            .measures
            .get(name)
            .ok_or_else(|| ConfigError::UnknownMeasure(name.to_string()))?;
        stack.push(name.to_string());
        let m = match def {
            MeasureDef::Dirac { loc } => Measure::dirac(*loc),
            MeasureDef::Uniform { a, b } => Measure::uniform(*a, *b)?,
            MeasureDef::TwoPoint { x0, w0, x1, w1 } => Measure::two_point(*x0, *w0, *x1, *w1)?,
            MeasureDef::Gaussian { mean, var } => Measure::gaussian_spline(*mean, *var)?,
            MeasureDef::Tent { lambda, p, a, b } => measure::tent_measure(*lambda, *p, *a, *b)?,
            MeasureDef::Mixture { of, a, b, n_cells } => {
                let nu = self.resolve(of, stack)?;
                measure::mixture_measure(&nu, *a, *b, *n_cells)?
            }
            MeasureDef::Restrict { of, a, b } => self.resolve(of, stack)?.restrict(*a, *b)?,
            MeasureDef::Scale { of, w } => self.resolve(of, stack)?.scale(*w)?,
            MeasureDef::Normalize { of } => self.resolve(of, stack)?.normalize()?,
            MeasureDef::Sum { of } => {
                let parts: Vec<Measure> = of
                    .iter()
                    .map(|n| self.resolve(n, stack))
                    .collect::<Result<_, _>>()?;
                let refs: Vec<&Measure> = parts.iter().collect();
                Measure::sum(&refs)?
            }
        };
        stack.pop();
        Ok(m)
    }
}

/// Short hex digest of the raw config text, embedded in every output file.
pub fn config_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}
