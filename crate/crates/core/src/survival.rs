//! Product-limit estimation for right-censored samples.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub time: f64,
    /// `true` when the failure was observed, `false` when censored.
    pub event: bool,
}

impl Observation {
    pub fn new(time: f64, event: bool) -> Self {
        Self { time, event }
    }
}

/// Non-empty collection of `(Z, delta)` records with finite, non-negative times.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample {
    records: Vec<Observation>,
}

impl CensoredSample {
    pub fn new(records: Vec<Observation>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(bad) = records.iter().find(|r| !r.time.is_finite() || r.time < 0.0) {
            return Err(Error::InvalidTime(bad.time));
        }
        Ok(Self { records })
    }

    pub fn from_pairs(times: &[f64], events: &[bool]) -> Result<Self> {
        if times.len() != events.len() {
            return Err(Error::LengthMismatch {
                expected: times.len(),
                actual: events.len(),
            });
        }
        Self::new(
            times
                .iter()
                .zip(events)
                .map(|(&t, &e)| Observation::new(t, e))
                .collect(),
        )
    }

    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Right-continuous step estimate of a reliability function.
///
/// `value(t)` is 1 before the first jump and carried flat past the last
/// observation. The per-jump variance is Greenwood's estimate of
/// `Var[R(t)]` (no `n` scaling).
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    times: Vec<f64>,
    values: Vec<f64>,
    variances: Vec<f64>,
    at_risk: Vec<usize>,
    deaths: Vec<usize>,
    n: usize,
    last_time: f64,
}

/// Product-limit fit. Ties among failures form one jump; censorings tied
/// with a failure time stay in that time's risk set.
pub fn km_fit(sample: &CensoredSample) -> SurvivalCurve {
    let mut recs = sample.records.clone();
    recs.sort_by(|a, b| a.time.total_cmp(&b.time));
    fit_sorted(&recs)
}

/// `recs` must be sorted by time.
pub(crate) fn fit_sorted(recs: &[Observation]) -> SurvivalCurve {
    let n = recs.len();
    let mut curve = SurvivalCurve {
        times: Vec::new(),
        values: Vec::new(),
        variances: Vec::new(),
        at_risk: Vec::new(),
        deaths: Vec::new(),
        n,
        last_time: recs.last().map_or(0.0, |r| r.time),
    };
    let mut surv = 1.0;
    let mut gw_sum = 0.0;
    let mut i = 0;
    while i < n {
        let t = recs[i].time;
        let at_risk = n - i;
        let mut d = 0;
        let mut j = i;
        while j < n && recs[j].time == t {
            if recs[j].event {
                d += 1;
            }
            j += 1;
        }
        if d > 0 {
            surv *= 1.0 - d as f64 / at_risk as f64;
            if d < at_risk {
                gw_sum += d as f64 / (at_risk as f64 * (at_risk - d) as f64);
            }
            curve.times.push(t);
            curve.values.push(surv);
            curve.variances.push(surv * surv * gw_sum);
            curve.at_risk.push(at_risk);
            curve.deaths.push(d);
        }
        i = j;
    }
    curve
}

impl SurvivalCurve {
    pub fn jump_times(&self) -> &[f64] {
        &self.times
    }

    pub fn jump_values(&self) -> &[f64] {
        &self.values
    }

    pub fn jump_variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn at_risk(&self) -> &[usize] {
        &self.at_risk
    }

    pub fn deaths(&self) -> &[usize] {
        &self.deaths
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    pub fn last_time(&self) -> f64 {
        self.last_time
    }

    /// True when no failure was observed (the curve is identically 1).
    pub fn is_flat(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of jumps at or before `t`.
    fn steps_through(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        Ok(self.value_at(t))
    }

    /// Unchecked lookup; `t < 0` yields 1.
    pub fn value_at(&self, t: f64) -> f64 {
        match self.steps_through(t) {
            0 => 1.0,
            m => self.values[m - 1],
        }
    }

    /// Greenwood variance of the estimate at `t`; 0 before the first jump.
    pub fn greenwood_var(&self, t: f64) -> f64 {
        match self.steps_through(t) {
            0 => 0.0,
            m => self.variances[m - 1],
        }
    }

    /// `-ln R(t)`, `+inf` where the estimate has reached zero.
    pub fn cumulative_hazard(&self, t: f64) -> Result<f64> {
        check_t(t)?;
        let r = self.value_at(t);
        Ok(if r > 0.0 { -r.ln() } else { f64::INFINITY })
    }

    /// Copy with every variance set to zero.
    pub fn without_variance(&self) -> Self {
        let mut out = self.clone();
        out.variances.iter_mut().for_each(|v| *v = 0.0);
        out
    }
}

fn check_t(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidTime(t));
    }
    Ok(())
}
