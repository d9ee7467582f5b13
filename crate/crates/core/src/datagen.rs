//! Simulated autopsy data: Weibull component lifetimes observed under an
//! exponential monitoring time and masked by the system failure.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::StructureTree;
use crate::survival::{CensoredSample, Observation};

/// Weibull with survival `exp(-(t/scale)^shape)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullSpec {
    pub shape: f64,
    pub scale: f64,
}

impl WeibullSpec {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        let s = Self { shape, scale };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.shape) || !ok(self.scale) {
            return Err(Error::InvalidParameter(format!(
                "Weibull shape and scale must be finite and positive (got {}, {})",
                self.shape, self.scale
            )));
        }
        Ok(())
    }

    pub fn reliability(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            (-(t / self.scale).powf(self.shape)).exp()
        }
    }

    /// Inverse-CDF draw from a uniform in `(0, 1]`.
    pub fn from_uniform(&self, u: f64) -> f64 {
        self.scale * (-u.ln()).powf(1.0 / self.shape)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.from_uniform(open_unit(rng))
    }
}

/// Exponential monitoring time with rate `eta`; `eta == 0` means never.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoringSpec {
    pub eta: f64,
}

impl CensoringSpec {
    pub fn new(eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "censoring rate must be >= 0, got {eta}"
            )));
        }
        Ok(Self { eta })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.eta == 0.0 {
            f64::INFINITY
        } else {
            -open_unit(rng).ln() / self.eta
        }
    }
}

/// Uniform on `(0, 1]`.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

pub fn sample_weibull<R: Rng + ?Sized>(
    spec: &WeibullSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    Ok((0..n).map(|_| spec.sample(rng)).collect())
}

/// `n` systems by `K` components of `(Z_ij, delta_ij)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AutopsyDataset {
    k: usize,
    records: Vec<Observation>,
}

impl AutopsyDataset {
    pub fn new(k: usize, records: Vec<Observation>) -> Result<Self> {
        if k == 0 || records.is_empty() {
            return Err(Error::EmptySample);
        }
        if !records.len().is_multiple_of(k) {
            return Err(Error::LengthMismatch {
                expected: records.len().div_ceil(k) * k,
                actual: records.len(),
            });
        }
        if let Some(bad) = records.iter().find(|r| !r.time.is_finite() || r.time < 0.0) {
            return Err(Error::InvalidTime(bad.time));
        }
        Ok(Self { k, records })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.records.len() / self.k
    }

    pub fn system(&self, i: usize) -> &[Observation] {
        &self.records[i * self.k..(i + 1) * self.k]
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    /// Records of the zero-based component `j` across all systems.
    pub fn component(&self, j: usize) -> CensoredSample {
        let recs = (0..self.n())
            .map(|i| self.records[i * self.k + j])
            .collect();
        CensoredSample::new(recs).expect("validated on construction")
    }

    /// Dataset made of the given systems, in order (bootstrap resampling).
    pub fn select(&self, rows: &[usize]) -> Self {
        let records = rows
            .iter()
            .flat_map(|&i| self.system(i).iter().copied())
            .collect();
        Self { k: self.k, records }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDataset {
    records: Vec<Observation>,
}

impl SystemDataset {
    pub fn new(records: Vec<Observation>) -> Result<Self> {
        CensoredSample::new(records.clone())?;
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn sample(&self) -> CensoredSample {
        CensoredSample::new(self.records.clone()).expect("validated on construction")
    }
}

/// Both datasets from one set of draws, plus the raw draws.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub autopsy: AutopsyDataset,
    pub system: SystemDataset,
    /// Row-major `n x K` component lifetimes.
    pub lifetimes: Vec<f64>,
    pub monitoring: Vec<f64>,
    pub system_lifetimes: Vec<f64>,
}

/// What is observed for one system given its component lifetimes and
/// monitoring time. Returns the component records and the system record.
pub fn observe(
    tree: &StructureTree,
    lifetimes: &[f64],
    monitoring: f64,
) -> Result<(Vec<Observation>, Observation)> {
    let s = tree.system_lifetime(lifetimes)?;
    if monitoring.is_nan() || monitoring < 0.0 {
        return Err(Error::InvalidTime(monitoring));
    }
    Ok(observe_unchecked(lifetimes, monitoring, s))
}

fn observe_unchecked(
    lifetimes: &[f64],
    monitoring: f64,
    s: f64,
) -> (Vec<Observation>, Observation) {
    let cut = monitoring.min(s);
    let comps = lifetimes
        .iter()
        .map(|&t| {
            if t <= cut {
                Observation::new(t, true)
            } else {
                Observation::new(cut, false)
            }
        })
        .collect();
    (comps, Observation::new(s.min(monitoring), s <= monitoring))
}

/// Draws `n` systems. Per system: `K` component lifetimes in index order,
/// then the monitoring time.
pub fn generate<R: Rng + ?Sized>(
    tree: &StructureTree,
    specs: &[WeibullSpec],
    cens: &CensoringSpec,
    n: usize,
    rng: &mut R,
) -> Result<Generated> {
    let k = tree.k();
    if specs.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: specs.len(),
        });
    }
    specs.iter().try_for_each(WeibullSpec::validate)?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    let mut lifetimes = Vec::with_capacity(n * k);
    let mut monitoring = Vec::with_capacity(n);
    let mut system_lifetimes = Vec::with_capacity(n);
    let mut comp_records = Vec::with_capacity(n * k);
    let mut sys_records = Vec::with_capacity(n);
    for _ in 0..n {
        let start = lifetimes.len();
        lifetimes.extend(specs.iter().map(|s| s.sample(rng)));
        let c = cens.sample(rng);
        let row = &lifetimes[start..];
        let s = tree.lifetime_unchecked(row);
        let (comps, sys) = observe_unchecked(row, c, s);
        comp_records.extend(comps);
        sys_records.push(sys);
        monitoring.push(c);
        system_lifetimes.push(s);
    }
    Ok(Generated {
        autopsy: AutopsyDataset {
            k,
            records: comp_records,
        },
        system: SystemDataset {
            records: sys_records,
        },
        lifetimes,
        monitoring,
        system_lifetimes,
    })
}

/// Percentage of uncensored records.
pub fn completeness_system(data: &SystemDataset) -> f64 {
    pct(
        data.records.iter().filter(|r| r.event).count(),
        data.records.len(),
    )
}

/// Percentage of uncensored records per component.
pub fn completeness_components(data: &AutopsyDataset) -> Vec<f64> {
    (0..data.k)
        .map(|j| {
            let events = (0..data.n())
                .filter(|&i| data.records[i * data.k + j].event)
                .count();
            pct(events, data.n())
        })
        .collect()
}

fn pct(count: usize, total: usize) -> f64 {
    100.0 * count as f64 / total as f64
}

/// Known system reliability `h(R_1(t), ..., R_K(t))` for Weibull components.
#[derive(Debug, Clone)]
pub struct TrueSystem {
    tree: StructureTree,
    specs: Vec<WeibullSpec>,
}

impl TrueSystem {
    pub fn new(tree: StructureTree, specs: Vec<WeibullSpec>) -> Result<Self> {
        if specs.len() != tree.k() {
            return Err(Error::LengthMismatch {
                expected: tree.k(),
                actual: specs.len(),
            });
        }
        specs.iter().try_for_each(WeibullSpec::validate)?;
        Ok(Self { tree, specs })
    }

    pub fn tree(&self) -> &StructureTree {
        &self.tree
    }

    pub fn specs(&self) -> &[WeibullSpec] {
        &self.specs
    }

    pub fn reliability(&self, t: f64) -> f64 {
        let p: Vec<f64> = self.specs.iter().map(|s| s.reliability(t)).collect();
        self.tree.reliability(&p)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.reliability(t)
    }

    /// `F^{-1}(u)` for `u` in `(0, 1)` by bisection on the monotone CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        let target = 1.0 - u;
        let mut hi = self.specs.iter().map(|s| s.scale).fold(0.0, f64::max);
        while self.reliability(hi) > target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.reliability(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
