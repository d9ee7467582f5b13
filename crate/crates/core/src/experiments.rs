//! Monte Carlo harness: replications, scenario aggregation and sweeps.
//!
//! Every replication draws from its own derived streams and results are
//! reduced in replication order, so output is identical for any number of
//! worker threads.

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cstar::{cstar_bootstrap, select_analytic, AnalyticOptions, BootstrapOptions};
use crate::datagen::{generate, AutopsyDataset, CensoringSpec, Generated, TrueSystem, WeibullSpec};
use crate::error::{Error, Result};
use crate::estimators::{plugin_curve, system_ple, SystemCurveEstimate};
use crate::risk::{ContinuousReference, LossConfig};
use crate::streams::{derive_seed, stream, Purpose};
use crate::structure::{Kind, StructureTree};
use crate::survival::km_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SystemPle,
    Plugin,
    ShrinkAnalytic,
    ShrinkBootstrap,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::SystemPle,
        Method::Plugin,
        Method::ShrinkAnalytic,
        Method::ShrinkBootstrap,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::SystemPle => "system-ple",
            Method::Plugin => "plugin",
            Method::ShrinkAnalytic => "shrink-analytic",
            Method::ShrinkBootstrap => "shrink-bootstrap",
        }
    }

    pub fn is_shrinkage(&self) -> bool {
        matches!(self, Method::ShrinkAnalytic | Method::ShrinkBootstrap)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub structure: StructureTree,
    pub components: Vec<WeibullSpec>,
    pub censoring: CensoringSpec,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub bootstrap: BootstrapOptions,
    pub analytic: AnalyticOptions,
    pub loss: LossConfig,
}

impl ScenarioConfig {
    /// Defaults for everything but the design itself: all four methods,
    /// 1000 replications, seed 1.
    pub fn new(
        structure: StructureTree,
        components: Vec<WeibullSpec>,
        eta: f64,
        n: usize,
    ) -> Result<Self> {
        let cfg = Self {
            structure,
            components,
            censoring: CensoringSpec::new(eta)?,
            n,
            reps: 1000,
            seed: 1,
            methods: Method::ALL.to_vec(),
            bootstrap: BootstrapOptions::default(),
            analytic: AnalyticOptions::default(),
            loss: LossConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("n must be >= 2".into()));
        }
        if self.reps < 1 {
            return Err(Error::Config("reps must be >= 1".into()));
        }
        if self.components.len() != self.structure.k() {
            return Err(Error::Config(format!(
                "structure has {} components but {} specs were given",
                self.structure.k(),
                self.components.len()
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        self.components.iter().try_for_each(WeibullSpec::validate)?;
        self.loss.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    pub risk: f64,
    pub c_star: Option<f64>,
}

/// One replication. `outcomes` is `Err` when any requested estimator failed;
/// such replications are excluded from the means.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub index: u64,
    pub system_events: usize,
    pub component_events: Vec<usize>,
    pub outcomes: std::result::Result<Vec<MethodOutcome>, Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_risk: f64,
    pub sd_risk: f64,
    pub mean_cstar: Option<f64>,
    pub sd_cstar: Option<f64>,
    /// `100 (plugin - this) / plugin` for shrinkage methods when the plug-in ran.
    pub risk_efficiency_pct: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub summaries: Vec<MethodSummary>,
    pub pct_complete_system: f64,
    pub pct_complete_components: Vec<f64>,
    pub included: usize,
    pub excluded: usize,
    pub replications: Vec<ReplicationRecord>,
    pub elapsed: Duration,
}

impl ScenarioResult {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    /// Per-replication risks of `method` over included replications.
    pub fn risks(&self, method: Method) -> Vec<f64> {
        self.replications
            .iter()
            .filter_map(|r| r.outcomes.as_ref().ok())
            .filter_map(|o| o.iter().find(|m| m.method == method).map(|m| m.risk))
            .collect()
    }
}

/// Scenario state shared by all replications: the true curve and its
/// quadrature nodes.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    cfg: ScenarioConfig,
    truth: TrueSystem,
    reference: ContinuousReference,
}

impl PreparedScenario {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let truth = TrueSystem::new(cfg.structure.clone(), cfg.components.clone())?;
        let reference = ContinuousReference::new(&truth, &cfg.loss)?;
        Ok(Self {
            cfg: cfg.clone(),
            truth,
            reference,
        })
    }

    pub fn truth(&self) -> &TrueSystem {
        &self.truth
    }

    pub fn generate(&self, rep: u64) -> Generated {
        let cfg = &self.cfg;
        let mut rng = stream(cfg.seed, rep, Purpose::Data);
        generate(
            &cfg.structure,
            &cfg.components,
            &cfg.censoring,
            cfg.n,
            &mut rng,
        )
        .expect("config validated")
    }

    /// True loss of an estimate against the known system curve.
    pub fn true_loss(&self, est: &SystemCurveEstimate) -> f64 {
        self.reference.loss(est)
    }

    pub fn replication(&self, rep: u64) -> ReplicationRecord {
        let g = self.generate(rep);
        let k = self.cfg.structure.k();
        ReplicationRecord {
            index: rep,
            system_events: g.system.records().iter().filter(|r| r.event).count(),
            component_events: (0..k)
                .map(|j| {
                    (0..g.autopsy.n())
                        .filter(|&i| g.autopsy.system(i)[j].event)
                        .count()
                })
                .collect(),
            outcomes: self.estimate_all(&g, rep),
        }
    }

    fn estimate_all(&self, g: &Generated, rep: u64) -> Result<Vec<MethodOutcome>> {
        let cfg = &self.cfg;
        let tree = &cfg.structure;
        let curves: Vec<_> = (0..tree.k())
            .map(|j| km_fit(&g.autopsy.component(j)))
            .collect();
        let plugin = plugin_curve(tree, &curves, 1.0)?;
        cfg.methods
            .iter()
            .map(|&method| {
                let (est, c_star) = match method {
                    Method::SystemPle => (system_ple(&g.system), None),
                    Method::Plugin => (plugin.clone(), None),
                    Method::ShrinkAnalytic => {
                        let r = select_analytic(tree, &curves, &cfg.loss, &cfg.analytic)?;
                        (plugin.shrink(r.c_star)?, Some(r.c_star))
                    }
                    Method::ShrinkBootstrap => {
                        let r = self.bootstrap(&g.autopsy, rep)?;
                        (plugin.shrink(r)?, Some(r))
                    }
                };
                let risk = self.true_loss(&est);
                if !risk.is_finite() {
                    return Err(Error::NonFiniteObjective);
                }
                Ok(MethodOutcome {
                    method,
                    risk,
                    c_star,
                })
            })
            .collect()
    }

    fn bootstrap(&self, data: &AutopsyDataset, rep: u64) -> Result<f64> {
        let cfg = &self.cfg;
        let mut rng = stream(cfg.seed, rep, Purpose::Bootstrap);
        Ok(cstar_bootstrap(data, &cfg.structure, &cfg.loss, &cfg.bootstrap, &mut rng)?.c_star)
    }
}

pub fn run_replication(cfg: &ScenarioConfig, rep: u64) -> Result<ReplicationRecord> {
    Ok(PreparedScenario::new(cfg)?.replication(rep))
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    let start = Instant::now();
    let prepared = PreparedScenario::new(cfg)?;
    let replications: Vec<ReplicationRecord> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|rep| prepared.replication(rep))
        .collect();
    let mut result = aggregate(cfg, replications)?;
    result.elapsed = start.elapsed();
    Ok(result)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn aggregate(cfg: &ScenarioConfig, replications: Vec<ReplicationRecord>) -> Result<ScenarioResult> {
    let ok: Vec<&Vec<MethodOutcome>> = replications
        .iter()
        .filter_map(|r| r.outcomes.as_ref().ok())
        .collect();
    if ok.is_empty() {
        return Err(Error::AllReplicationsFailed(cfg.reps));
    }
    let mut summaries: Vec<MethodSummary> = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(idx, &method)| {
            let risks: Vec<f64> = ok.iter().map(|o| o[idx].risk).collect();
            let (mean_risk, sd_risk) = mean_sd(&risks);
            let cs: Vec<f64> = ok.iter().filter_map(|o| o[idx].c_star).collect();
            let (mean_cstar, sd_cstar) = if cs.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_sd(&cs);
                (Some(m), Some(s))
            };
            MethodSummary {
                method,
                mean_risk,
                sd_risk,
                mean_cstar,
                sd_cstar,
                risk_efficiency_pct: None,
            }
        })
        .collect();
    if let Some(plug) = summaries
        .iter()
        .find(|s| s.method == Method::Plugin)
        .map(|s| s.mean_risk)
    {
        for s in summaries.iter_mut().filter(|s| s.method.is_shrinkage()) {
            s.risk_efficiency_pct = Some(100.0 * (plug - s.mean_risk) / plug);
        }
    }
    let total = (cfg.reps * cfg.n) as f64;
    let k = cfg.structure.k();
    let sys_events: usize = replications.iter().map(|r| r.system_events).sum();
    let pct_complete_components = (0..k)
        .map(|j| {
            100.0
                * replications
                    .iter()
                    .map(|r| r.component_events[j])
                    .sum::<usize>() as f64
                / total
        })
        .collect();
    Ok(ScenarioResult {
        summaries,
        pct_complete_system: 100.0 * sys_events as f64 / total,
        pct_complete_components,
        included: ok.len(),
        excluded: replications.len() - ok.len(),
        replications,
        elapsed: Duration::ZERO,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    N,
    Eta,
    K,
}

impl SweepAxis {
    fn tag(&self) -> u64 {
        match self {
            SweepAxis::N => 1,
            SweepAxis::Eta => 2,
            SweepAxis::K => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::Eta => "eta",
            SweepAxis::K => "k",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub label: String,
    pub value: f64,
    pub config: ScenarioConfig,
    pub result: ScenarioResult,
}

/// Config for one sweep point; the seed derives from `(seed, axis, value)`.
pub fn sweep_config(base: &ScenarioConfig, axis: SweepAxis, value: f64) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    let as_count = |v: f64| -> Result<usize> {
        if v.fract() == 0.0 && v >= 1.0 {
            Ok(v as usize)
        } else {
            Err(Error::Config(format!(
                "{} sweep value {v} is not a positive integer",
                axis.name()
            )))
        }
    };
    match axis {
        SweepAxis::N => cfg.n = as_count(value)?,
        SweepAxis::Eta => cfg.censoring = CensoringSpec::new(value)?,
        SweepAxis::K => {
            let k = as_count(value)?;
            let kind = base.structure.homogeneous_kind().ok_or_else(|| {
                Error::Config("K sweep needs a homogeneous series or parallel structure".into())
            })?;
            cfg.structure = match kind {
                Kind::Series => StructureTree::series(k)?,
                Kind::Parallel => StructureTree::parallel(k)?,
            };
            cfg.components = vec![base.components[0]; k];
        }
    }
    cfg.seed = derive_seed(base.seed, &[axis.tag(), value.to_bits()]);
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_sweep(
    base: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|&value| {
            let config = sweep_config(base, axis, value)?;
            let result = run_scenario(&config)?;
            Ok(SweepPoint {
                label: format!("{}={}", axis.name(), value),
                value,
                config,
                result,
            })
        })
        .collect()
}
