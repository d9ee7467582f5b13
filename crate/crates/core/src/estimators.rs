//! System reliability estimates: the system-level product-limit curve and
//! the component plug-in family `h(R_1(t)^c, ..., R_K(t)^c)`.

use std::sync::Arc;

use crate::datagen::SystemDataset;
use crate::error::{Error, Result};
use crate::structure::StructureTree;
use crate::survival::{km_fit, SurvivalCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    SystemPle,
    Plugin,
    Shrink,
}

#[derive(Debug)]
struct Components {
    tree: StructureTree,
    curves: Vec<SurvivalCurve>,
}

/// Right-continuous step function with `times[0] == 0` and `values[0] == 1`.
#[derive(Debug, Clone)]
pub struct SystemCurveEstimate {
    times: Vec<f64>,
    values: Vec<f64>,
    variances: Option<Vec<f64>>,
    kind: EstimateKind,
    c: f64,
    components: Option<Arc<Components>>,
}

impl SystemCurveEstimate {
    pub fn kind(&self) -> EstimateKind {
        self.kind
    }

    pub fn coefficient(&self) -> f64 {
        self.c
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Greenwood variances on the grid, for system-level estimates.
    pub fn variances(&self) -> Option<&[f64]> {
        self.variances.as_deref()
    }

    pub fn component_curves(&self) -> Option<&[SurvivalCurve]> {
        self.components.as_deref().map(|c| c.curves.as_slice())
    }

    pub fn tree(&self) -> Option<&StructureTree> {
        self.components.as_deref().map(|c| &c.tree)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self.times.partition_point(|&s| s <= t) {
            0 => 1.0,
            m => self.values[m - 1],
        }
    }

    /// Re-evaluates the plug-in composition at exponent `c_star`.
    pub fn shrink(&self, c_star: f64) -> Result<Self> {
        let comps = self
            .components
            .as_ref()
            .ok_or(Error::MissingComponentCurves)?;
        let mut out = build_plugin(Arc::clone(comps), c_star)?;
        out.kind = if c_star == 1.0 && self.kind == EstimateKind::Plugin {
            EstimateKind::Plugin
        } else {
            EstimateKind::Shrink
        };
        Ok(out)
    }
}

pub fn system_ple(data: &SystemDataset) -> SystemCurveEstimate {
    let curve = km_fit(&data.sample());
    let mut times = vec![0.0];
    let mut values = vec![1.0];
    let mut variances = vec![0.0];
    for ((&t, &v), &var) in curve
        .jump_times()
        .iter()
        .zip(curve.jump_values())
        .zip(curve.jump_variances())
    {
        if t == 0.0 {
            // Failure at time zero replaces the initial point.
            values[0] = v;
            variances[0] = var;
        } else {
            times.push(t);
            values.push(v);
            variances.push(var);
        }
    }
    SystemCurveEstimate {
        times,
        values,
        variances: Some(variances),
        kind: EstimateKind::SystemPle,
        c: 1.0,
        components: None,
    }
}

/// Union of `{0}` and every component jump time, sorted and deduplicated.
pub fn merged_grid(curves: &[SurvivalCurve]) -> Vec<f64> {
    let mut grid: Vec<f64> = std::iter::once(0.0)
        .chain(curves.iter().flat_map(|c| c.jump_times().iter().copied()))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

pub fn plugin_curve(
    tree: &StructureTree,
    curves: &[SurvivalCurve],
    c: f64,
) -> Result<SystemCurveEstimate> {
    if curves.len() != tree.k() {
        return Err(Error::LengthMismatch {
            expected: tree.k(),
            actual: curves.len(),
        });
    }
    let comps = Arc::new(Components {
        tree: tree.clone(),
        curves: curves.to_vec(),
    });
    build_plugin(comps, c)
}

fn build_plugin(comps: Arc<Components>, c: f64) -> Result<SystemCurveEstimate> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::NonPositiveCoefficient(c));
    }
    let times = merged_grid(&comps.curves);
    let mut p = vec![0.0; comps.curves.len()];
    let values = times
        .iter()
        .map(|&t| {
            for (slot, curve) in p.iter_mut().zip(&comps.curves) {
                *slot = power(curve.value_at(t), c);
            }
            comps.tree.reliability(&p)
        })
        .collect();
    Ok(SystemCurveEstimate {
        times,
        values,
        variances: None,
        kind: if c == 1.0 {
            EstimateKind::Plugin
        } else {
            EstimateKind::Shrink
        },
        c,
        components: Some(comps),
    })
}

/// `r^c` for `r` in `[0, 1]` and `c > 0`, exact at `c == 1`.
#[inline]
pub(crate) fn power(r: f64, c: f64) -> f64 {
    if c == 1.0 {
        r
    } else {
        r.powf(c)
    }
}
