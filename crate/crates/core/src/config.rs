//! JSON experiment files.
//!
//! ```json
//! {
//!   "structure": "series(c1,parallel(c2,c3))",
//!   "components": [{"shape": 2, "scale": 2.5}, {"shape": 2, "scale": 1}, {"shape": 2, "scale": 1}],
//!   "eta": 0.05, "n": 15, "reps": 1000, "seed": 1,
//!   "methods": ["system-ple", "plugin", "shrink-analytic", "shrink-bootstrap"],
//!   "bootstrap": {"B": 200, "grid": "0.5:2:0.01"},
//!   "c_bounds": [0.2, 5.0], "tol": 1e-5,
//!   "loss": {"panels": 2000, "u_lo": 1e-6, "u_hi": 0.999},
//!   "sweep": {"axis": "eta", "values": [0.01, 0.05, 0.1]}
//! }
//! ```
//!
//! Everything after `n` is optional.

use serde::{Deserialize, Serialize};

use crate::cstar::{step_grid, AnalyticOptions, BootstrapOptions};
use crate::datagen::{CensoringSpec, WeibullSpec};
use crate::error::{Error, Result};
use crate::experiments::{Method, ScenarioConfig, SweepAxis};
use crate::risk::LossConfig;
use crate::structure::StructureTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSection {
    #[serde(rename = "B", default = "default_b")]
    pub resamples: usize,
    #[serde(default = "default_grid")]
    pub grid: String,
}

fn default_b() -> usize {
    200
}

fn default_grid() -> String {
    "0.5:2:0.01".into()
}

impl Default for BootstrapSection {
    fn default() -> Self {
        Self {
            resamples: default_b(),
            grid: default_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub structure: String,
    pub components: Vec<WeibullSpec>,
    pub eta: f64,
    pub n: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub bootstrap: BootstrapSection,
    #[serde(default = "default_bounds")]
    pub c_bounds: (f64, f64),
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn default_reps() -> usize {
    1000
}

fn default_seed() -> u64 {
    1
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_bounds() -> (f64, f64) {
    (0.2, 5.0)
}

fn default_tol() -> f64 {
    1e-5
}

/// `LO:HI:STEP`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("grid `{spec}` is not LO:HI:STEP")))?;
    match nums.as_slice() {
        &[lo, hi, step] if lo > 0.0 => step_grid(lo, hi, step),
        _ => Err(Error::Config(format!(
            "grid `{spec}` is not LO:HI:STEP with LO > 0"
        ))),
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn scenario(&self) -> Result<ScenarioConfig> {
        let structure = StructureTree::parse(&self.structure)?;
        let (lo, hi) = self.c_bounds;
        if !(0.0 < lo && lo < hi) {
            return Err(Error::Config(format!(
                "c_bounds must satisfy 0 < lo < hi (got {lo}, {hi})"
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        let cfg = ScenarioConfig {
            structure,
            components: self.components.clone(),
            censoring: CensoringSpec::new(self.eta)?,
            n: self.n,
            reps: self.reps,
            seed: self.seed,
            methods: self.methods.clone(),
            bootstrap: BootstrapOptions {
                resamples: self.bootstrap.resamples,
                grid: parse_grid(&self.bootstrap.grid)?,
                tol: self.tol,
            },
            analytic: AnalyticOptions {
                bounds: self.c_bounds,
                tol: self.tol,
                profile_grid: None,
            },
            loss: self.loss,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
