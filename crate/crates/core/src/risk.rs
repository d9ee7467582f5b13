//! Weighted Cramér–von Mises loss and the empirical risk of the shrinkage
//! family.
//!
//! The loss weights squared curve discrepancies by `1 / (R (1 - R))` and
//! integrates against the failure distribution `dF = -dR`. The weight is
//! singular at both ends, so step references skip tiny denominators and
//! continuous references integrate over a clamped `u = F(t)` range.

use serde::{Deserialize, Serialize};

use crate::datagen::TrueSystem;
use crate::error::{Error, Result};
use crate::estimators::{power, SystemCurveEstimate};
use crate::structure::StructureTree;
use crate::survival::SurvivalCurve;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// Denominators `R (1 - R)` below this are dropped from step sums.
    pub eps_den: f64,
    /// Midpoint panels for continuous references.
    pub panels: usize,
    pub u_lo: f64,
    pub u_hi: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            eps_den: 1e-8,
            panels: 2000,
            u_lo: 1e-6,
            u_hi: 1.0 - 1e-3,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.u_lo && self.u_lo < self.u_hi && self.u_hi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < u_lo < u_hi < 1 (got {}, {})",
                self.u_lo, self.u_hi
            )));
        }
        if self.panels < 10 {
            return Err(Error::InvalidParameter(
                "quadrature needs at least 10 panels".into(),
            ));
        }
        if !(self.eps_den > 0.0) {
            return Err(Error::InvalidParameter("eps_den must be positive".into()));
        }
        Ok(())
    }
}

/// Jump points of a step reference with their loss weights
/// `dF / (R (1 - R))`, evaluated after the jump.
#[derive(Debug, Clone)]
pub struct StepReference {
    times: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl StepReference {
    pub fn new(reference: &SystemCurveEstimate, cfg: &LossConfig) -> Result<Self> {
        cfg.validate()?;
        let mut out = Self {
            times: Vec::new(),
            values: Vec::new(),
            weights: Vec::new(),
        };
        for (t, r, w) in weighted_jumps(reference, cfg.eps_den) {
            out.times.push(t);
            out.values.push(r);
            out.weights.push(w);
        }
        Ok(out)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn loss(&self, est: &SystemCurveEstimate) -> f64 {
        self.loss_with(|t| est.value_at(t))
    }

    pub fn loss_with(&self, est: impl Fn(f64) -> f64) -> f64 {
        self.times
            .iter()
            .zip(&self.values)
            .zip(&self.weights)
            .map(|((&t, &r), &w)| {
                let d = r - est(t);
                w * d * d
            })
            .sum()
    }

    /// Loss against estimate values already evaluated at `times()`.
    pub fn loss_at_points(&self, est_values: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .zip(est_values)
            .map(|((&r, &w), &e)| w * (r - e) * (r - e))
            .sum()
    }
}

/// `(t, R(t), dF(t) / (R (1 - R)))` at every point where the curve drops,
/// skipping denominators below `eps`.
fn weighted_jumps(
    curve: &SystemCurveEstimate,
    eps: f64,
) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    let mut prev = 1.0;
    curve
        .times()
        .iter()
        .zip(curve.values())
        .filter_map(move |(&t, &r)| {
            let df = prev - r;
            prev = r;
            let den = r * (1.0 - r);
            (df > 0.0 && den >= eps).then(|| (t, r, df / den))
        })
}

/// Step-reference loss between two curves.
pub fn cvm_loss_step(
    reference: &SystemCurveEstimate,
    est: &SystemCurveEstimate,
    cfg: &LossConfig,
) -> Result<f64> {
    Ok(StepReference::new(reference, cfg)?.loss(est))
}

/// Midpoint rule in `u = F(t)` over `[u_lo, u_hi]`, with nodes mapped back
/// through the true quantile function once.
#[derive(Debug, Clone)]
pub struct ContinuousReference {
    u: Vec<f64>,
    t: Vec<f64>,
    du: f64,
}

impl ContinuousReference {
    pub fn new(truth: &TrueSystem, cfg: &LossConfig) -> Result<Self> {
        Self::from_quantile(|u| truth.quantile(u), cfg)
    }

    /// `quantile` must be non-decreasing in `u`.
    pub fn from_quantile(quantile: impl Fn(f64) -> f64, cfg: &LossConfig) -> Result<Self> {
        cfg.validate()?;
        let du = (cfg.u_hi - cfg.u_lo) / cfg.panels as f64;
        let u: Vec<f64> = (0..cfg.panels)
            .map(|i| cfg.u_lo + (i as f64 + 0.5) * du)
            .collect();
        let t = u.iter().map(|&x| quantile(x)).collect();
        Ok(Self { u, t, du })
    }

    pub fn loss_with(&self, est: impl Fn(f64) -> f64) -> f64 {
        self.u
            .iter()
            .zip(&self.t)
            .map(|(&u, &t)| {
                let d = (1.0 - u) - est(t);
                d * d / (u * (1.0 - u))
            })
            .sum::<f64>()
            * self.du
    }

    /// Same as `loss_with(|t| est.value_at(t))`, walking the step function
    /// alongside the increasing nodes.
    pub fn loss(&self, est: &SystemCurveEstimate) -> f64 {
        let times = est.times();
        let values = est.values();
        let mut k = 0;
        let mut sum = 0.0;
        for (&u, &t) in self.u.iter().zip(&self.t) {
            while k < times.len() && times[k] <= t {
                k += 1;
            }
            let e = if k == 0 { 1.0 } else { values[k - 1] };
            let d = (1.0 - u) - e;
            sum += d * d / (u * (1.0 - u));
        }
        sum * self.du
    }
}

/// Coefficients of `A c^2 + 2B c^2 (c - 1) + D (c - 1)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadCoefficients {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl QuadCoefficients {
    pub fn new(a: f64, b: f64, d: f64) -> Result<Self> {
        let q = Self { a, b, d };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        let Self { a, b, d } = *self;
        if !(a >= 0.0 && b <= 0.0 && d >= 0.0) {
            return Err(Error::SignViolation { a, b, d });
        }
        Ok(())
    }

    pub fn risk(&self, c: f64) -> f64 {
        let cm1 = c - 1.0;
        self.a * c * c + 2.0 * self.b * c * c * cm1 + self.d * cm1 * cm1
    }

    /// Stationary point of the cubic that is a local minimum, or `None` when
    /// the discriminant is negative.
    pub fn stationary_min(&self) -> Option<f64> {
        let Self { a, b, d } = *self;
        if b.abs() < 1e-12 * (a + d + 1.0) {
            return Some(if a + d == 0.0 { 1.0 } else { d / (a + d) });
        }
        let lin = 2.0 * b - a - d;
        let disc = lin * lin + 12.0 * b * d;
        if disc < 0.0 {
            return None;
        }
        Some((lin + disc.sqrt()) / (6.0 * b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Interior(f64),
    /// The stationary point was outside the bounds; holds the clamped value.
    Clamped(f64),
    /// Negative discriminant; minimize numerically instead.
    Fallback,
}

impl ClosedForm {
    pub fn value(&self) -> Option<f64> {
        match *self {
            ClosedForm::Interior(c) | ClosedForm::Clamped(c) => Some(c),
            ClosedForm::Fallback => None,
        }
    }
}

pub fn cstar_closed_form(q: &QuadCoefficients, bounds: (f64, f64)) -> Result<ClosedForm> {
    q.validate()?;
    Ok(match q.stationary_min() {
        None => ClosedForm::Fallback,
        Some(c) if c < bounds.0 => ClosedForm::Clamped(bounds.0),
        Some(c) if c > bounds.1 => ClosedForm::Clamped(bounds.1),
        Some(c) => ClosedForm::Interior(c),
    })
}

#[derive(Debug, Clone)]
struct RiskPoint {
    weight: f64,
    importance: Vec<f64>,
    /// Component estimate floored at `1 / (2n)`.
    r: Vec<f64>,
    log_r: Vec<f64>,
    var: Vec<f64>,
}

/// Empirical risk approximation for the shrinkage family, precomputed on
/// the jump points of the `c = 1` plug-in estimate.
#[derive(Debug, Clone)]
pub struct AnalyticRiskModel {
    points: Vec<RiskPoint>,
}

impl AnalyticRiskModel {
    pub fn new(
        tree: &StructureTree,
        curves: &[SurvivalCurve],
        weight_curve: &SystemCurveEstimate,
        cfg: &LossConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let k = tree.k();
        if curves.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                actual: curves.len(),
            });
        }
        let floors: Vec<f64> = curves
            .iter()
            .map(|c| 0.5 / c.sample_size() as f64)
            .collect();
        let mut raw = vec![0.0; k];
        let points = weighted_jumps(weight_curve, cfg.eps_den)
            .map(|(t, _, weight)| {
                for (slot, c) in raw.iter_mut().zip(curves) {
                    *slot = c.value_at(t);
                }
                let mut importance = vec![0.0; k];
                tree.importances(&raw, &mut importance);
                let r: Vec<f64> = raw.iter().zip(&floors).map(|(&v, &f)| v.max(f)).collect();
                RiskPoint {
                    weight,
                    importance,
                    log_r: r.iter().map(|v| v.ln()).collect(),
                    r,
                    var: curves.iter().map(|c| c.greenwood_var(t)).collect(),
                }
            })
            .collect();
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Variance-plus-bias risk at exponent `c`; finite and non-negative.
    pub fn risk(&self, c: f64) -> Result<f64> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::NonPositiveCoefficient(c));
        }
        Ok(self.risk_unchecked(c))
    }

    fn risk_unchecked(&self, c: f64) -> f64 {
        self.points
            .iter()
            .map(|p| {
                let mut var = 0.0;
                let mut bias = 0.0;
                for j in 0..p.r.len() {
                    let i = p.importance[j];
                    let rc = power(p.r[j], c);
                    if p.var[j] > 0.0 {
                        // r^(2c-2) = exp((2c-2) ln r)
                        var += i * i * c * c * ((2.0 * c - 2.0) * p.log_r[j]).exp() * p.var[j];
                    }
                    bias += i * (rc - p.r[j]);
                }
                p.weight * (var + bias * bias)
            })
            .sum()
    }

    pub fn quad_coefficients(&self) -> QuadCoefficients {
        let mut q = QuadCoefficients {
            a: 0.0,
            b: 0.0,
            d: 0.0,
        };
        for p in &self.points {
            let mut lin = 0.0;
            for j in 0..p.r.len() {
                let i2v = p.importance[j] * p.importance[j] * p.var[j];
                q.a += p.weight * i2v;
                q.b += p.weight * i2v * p.log_r[j];
                lin += p.importance[j] * p.r[j] * p.log_r[j];
            }
            q.d += p.weight * lin * lin;
        }
        q
    }
}

pub fn analytic_risk(
    c: f64,
    tree: &StructureTree,
    curves: &[SurvivalCurve],
    weight_curve: &SystemCurveEstimate,
    cfg: &LossConfig,
) -> Result<f64> {
    AnalyticRiskModel::new(tree, curves, weight_curve, cfg)?.risk(c)
}

pub fn quad_coefficients(
    tree: &StructureTree,
    curves: &[SurvivalCurve],
    weight_curve: &SystemCurveEstimate,
    cfg: &LossConfig,
) -> Result<QuadCoefficients> {
    Ok(AnalyticRiskModel::new(tree, curves, weight_curve, cfg)?.quad_coefficients())
}

/// Outcome of a grid scan plus golden-section refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMinimum {
    pub x: f64,
    pub fx: f64,
    /// `(x, f(x))` at every grid point, in grid order.
    pub profile: Vec<(f64, f64)>,
}

pub const SCAN_POINTS: usize = 50;

/// `n` evenly spaced points on `[lo, hi]` including both ends.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect()
}

pub fn minimize_scalar(
    f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<ScalarMinimum> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need lo < hi and tol > 0 (got [{lo}, {hi}], {tol})"
        )));
    }
    refine_on_grid(f, &uniform_grid(lo, hi, SCAN_POINTS), tol)
}

/// Scans `grid` (sorted ascending), then golden-section searches between
/// the neighbours of the best grid point. Non-finite values count as `+inf`.
pub fn refine_on_grid(
    mut f: impl FnMut(f64) -> f64,
    grid: &[f64],
    tol: f64,
) -> Result<ScalarMinimum> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let profile: Vec<(f64, f64)> = grid.iter().map(|&x| (x, eval(x))).collect();
    let (best_i, &(mut best_x, mut best_f)) = profile
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty");
    if best_f == f64::INFINITY {
        return Err(Error::NonFiniteObjective);
    }
    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(grid.len() - 1)];
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    if b - a > tol {
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut f1 = eval(x1);
        let mut f2 = eval(x2);
        for (x, fx) in [(x1, f1), (x2, f2)] {
            if fx < best_f {
                best_x = x;
                best_f = fx;
            }
        }
        while b - a > tol {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = eval(x1);
                if f1 < best_f {
                    best_x = x1;
                    best_f = f1;
                }
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = eval(x2);
                if f2 < best_f {
                    best_x = x2;
                    best_f = f2;
                }
            }
        }
    }
    Ok(ScalarMinimum {
        x: best_x,
        fx: best_f,
        profile,
    })
}
