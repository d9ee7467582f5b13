//! Selection of the shrinkage coefficient `c*` from autopsy data.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::AutopsyDataset;
use crate::error::{Error, Result};
use crate::estimators::plugin_curve;
use crate::risk::{
    cstar_closed_form, minimize_scalar, refine_on_grid, AnalyticRiskModel, ClosedForm, LossConfig,
    QuadCoefficients, StepReference,
};
use crate::structure::StructureTree;
use crate::survival::{km_fit, SurvivalCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Analytic,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CStarResult {
    pub c_star: f64,
    pub method: Selector,
    pub bounds: (f64, f64),
    /// `(c, estimated risk)` samples.
    pub profile: Vec<(f64, f64)>,
    /// Analytic: coefficients of the cubic approximation.
    pub quad: Option<QuadCoefficients>,
    /// Analytic: stationary point of the cubic approximation. `c_star`
    /// itself minimizes the full risk.
    pub closed_form: Option<ClosedForm>,
    /// Bootstrap: resamples used and skipped as degenerate.
    pub resamples_used: usize,
    pub resamples_skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticOptions {
    pub bounds: (f64, f64),
    pub tol: f64,
    /// Points at which to record the risk profile; defaults to the scan grid.
    pub profile_grid: Option<Vec<f64>>,
}

impl Default for AnalyticOptions {
    fn default() -> Self {
        Self {
            bounds: (0.2, 5.0),
            tol: 1e-5,
            profile_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapOptions {
    pub resamples: usize,
    pub grid: Vec<f64>,
    pub tol: f64,
}

/// `lo, lo + step, ..., hi` (inclusive up to rounding).
pub fn step_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bad grid {lo}:{hi}:{step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            resamples: 200,
            grid: step_grid(0.5, 2.0, 0.01).expect("valid default grid"),
            tol: 1e-5,
        }
    }
}

fn component_curves(data: &AutopsyDataset) -> Vec<SurvivalCurve> {
    (0..data.k()).map(|j| km_fit(&data.component(j))).collect()
}

pub fn cstar_analytic(
    data: &AutopsyDataset,
    tree: &StructureTree,
    cfg: &LossConfig,
    opts: &AnalyticOptions,
) -> Result<CStarResult> {
    if data.k() != tree.k() {
        return Err(Error::LengthMismatch {
            expected: tree.k(),
            actual: data.k(),
        });
    }
    select_analytic(tree, &component_curves(data), cfg, opts)
}

/// Analytic selector on already fitted component curves. When no jump
/// carries weight the risk is identically zero and `c* = 1`.
pub fn select_analytic(
    tree: &StructureTree,
    curves: &[SurvivalCurve],
    cfg: &LossConfig,
    opts: &AnalyticOptions,
) -> Result<CStarResult> {
    let (lo, hi) = opts.bounds;
    if !(0.0 < lo && lo < hi) {
        return Err(Error::InvalidParameter(format!("bad bounds [{lo}, {hi}]")));
    }
    if curves.iter().all(SurvivalCurve::is_flat) {
        return Err(Error::NoInformation);
    }
    let weight = plugin_curve(tree, curves, 1.0)?;
    let model = AnalyticRiskModel::new(tree, curves, &weight, cfg)?;
    let quad = model.quad_coefficients();
    let risk = |c: f64| model.risk(c).unwrap_or(f64::INFINITY);

    let closed = cstar_closed_form(&quad, opts.bounds)?;
    let mut m = minimize_scalar(risk, lo, hi, opts.tol)?;
    if model.is_empty() {
        m.x = 1.0_f64.clamp(lo, hi);
    }
    let profile = match &opts.profile_grid {
        Some(grid) => grid.iter().map(|&c| (c, risk(c))).collect(),
        None => m.profile,
    };
    Ok(CStarResult {
        c_star: m.x,
        method: Selector::Analytic,
        bounds: opts.bounds,
        profile,
        quad: Some(quad),
        closed_form: Some(closed),
        resamples_used: 0,
        resamples_skipped: 0,
    })
}

/// One bootstrap resample, evaluated at the reference jump points.
struct Resample {
    /// Row-major `points x K` component estimates.
    values: Vec<f64>,
}

pub fn cstar_bootstrap<R: Rng + ?Sized>(
    data: &AutopsyDataset,
    tree: &StructureTree,
    cfg: &LossConfig,
    opts: &BootstrapOptions,
    rng: &mut R,
) -> Result<CStarResult> {
    if opts.resamples < 1 {
        return Err(Error::InvalidParameter(
            "bootstrap needs at least one resample".into(),
        ));
    }
    let mut grid = opts.grid.clone();
    if grid.is_empty() || grid.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter(
            "grid must be non-empty with positive entries".into(),
        ));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let k = tree.k();
    if data.k() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            actual: data.k(),
        });
    }

    let original = component_curves(data);
    let reference = StepReference::new(&plugin_curve(tree, &original, 1.0)?, cfg)?;
    let points = reference.times();

    let n = data.n();
    let mut rows = vec![0usize; n];
    let mut resamples = Vec::with_capacity(opts.resamples);
    let mut skipped = 0;
    for _ in 0..opts.resamples {
        rows.iter_mut().for_each(|r| *r = rng.random_range(0..n));
        let boot = data.select(&rows);
        let curves = component_curves(&boot);
        if curves.iter().all(SurvivalCurve::is_flat) {
            skipped += 1;
            continue;
        }
        let values = points
            .iter()
            .flat_map(|&t| curves.iter().map(move |c| c.value_at(t)))
            .collect();
        resamples.push(Resample { values });
    }
    if 2 * skipped > opts.resamples {
        return Err(Error::TooManyDegenerateResamples {
            skipped,
            total: opts.resamples,
        });
    }

    let used = resamples.len();
    let mut p = vec![0.0; k];
    let mut est = vec![0.0; points.len()];
    let mut mean_loss = |c: f64| {
        let mut total = 0.0;
        for rs in &resamples {
            for (m, slot) in est.iter_mut().enumerate() {
                for (pj, &v) in p.iter_mut().zip(&rs.values[m * k..(m + 1) * k]) {
                    *pj = crate::estimators::power(v, c);
                }
                *slot = tree.reliability(&p);
            }
            total += reference.loss_at_points(&est);
        }
        total / used as f64
    };
    let mut m = refine_on_grid(&mut mean_loss, &grid, opts.tol)?;
    if points.is_empty() {
        m.x = grid
            .iter()
            .copied()
            .min_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs()))
            .expect("non-empty");
    }
    Ok(CStarResult {
        c_star: m.x,
        method: Selector::Bootstrap,
        bounds: (grid[0], grid[grid.len() - 1]),
        profile: m.profile,
        quad: None,
        closed_form: None,
        resamples_used: used,
        resamples_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, CensoringSpec, WeibullSpec};
    use crate::streams::{stream, Purpose};
    use crate::survival::Observation;

    fn serpar_data(seed: u64, n: usize) -> (StructureTree, AutopsyDataset) {
        let tree = StructureTree::parse("series(c1,parallel(c2,c3))").unwrap();
        let specs = [(2.0, 2.5), (2.0, 1.0), (2.0, 1.0)]
            .iter()
            .map(|&(k, l)| WeibullSpec::new(k, l).unwrap())
            .collect::<Vec<_>>();
        let mut rng = stream(seed, 0, Purpose::Data);
        let g = generate(
            &tree,
            &specs,
            &CensoringSpec::new(0.05).unwrap(),
            n,
            &mut rng,
        )
        .unwrap();
        (tree, g.autopsy)
    }

    #[test]
    fn step_grid_counts() {
        assert_eq!(step_grid(1.0, 1.0, 1.0).unwrap(), vec![1.0]);
        assert_eq!(step_grid(0.5, 2.0, 0.01).unwrap().len(), 151);
        assert!(step_grid(1.0, 0.5, 0.1).is_err());
    }

    #[test]
    fn analytic_within_bounds_and_near_one() {
        let (tree, data) = serpar_data(5, 15);
        let r = cstar_analytic(
            &data,
            &tree,
            &LossConfig::default(),
            &AnalyticOptions::default(),
        )
        .unwrap();
        assert!(r.c_star >= 0.2 && r.c_star <= 5.0);
        assert!((r.c_star - 1.0).abs() < 0.2, "{}", r.c_star);
        assert!(!r.profile.is_empty());
        let q = r.quad.unwrap();
        assert!(q.a >= 0.0 && q.b <= 0.0 && q.d >= 0.0);
    }

    #[test]
    fn zero_variance_selects_one() {
        let (tree, data) = serpar_data(9, 15);
        let curves: Vec<SurvivalCurve> = (0..3)
            .map(|j| km_fit(&data.component(j)).without_variance())
            .collect();
        let r = select_analytic(
            &tree,
            &curves,
            &LossConfig::default(),
            &AnalyticOptions::default(),
        )
        .unwrap();
        assert!((r.c_star - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn no_information_is_an_error() {
        let tree = StructureTree::parse("parallel(c1,c2)").unwrap();
        let recs = vec![Observation::new(1.0, false); 4];
        let data = AutopsyDataset::new(2, recs).unwrap();
        assert_eq!(
            cstar_analytic(
                &data,
                &tree,
                &LossConfig::default(),
                &AnalyticOptions::default()
            ),
            Err(Error::NoInformation)
        );
        let mut rng = stream(1, 0, Purpose::Bootstrap);
        let r = cstar_bootstrap(
            &data,
            &tree,
            &LossConfig::default(),
            &BootstrapOptions::default(),
            &mut rng,
        );
        assert!(matches!(r, Err(Error::TooManyDegenerateResamples { .. })));
    }

    #[test]
    fn bootstrap_singleton_grid() {
        let (tree, data) = serpar_data(2, 15);
        let opts = BootstrapOptions {
            resamples: 20,
            grid: vec![1.0],
            tol: 1e-5,
        };
        let mut rng = stream(2, 0, Purpose::Bootstrap);
        let r = cstar_bootstrap(&data, &tree, &LossConfig::default(), &opts, &mut rng).unwrap();
        assert_eq!(r.c_star, 1.0);
        assert_eq!(r.profile.len(), 1);
    }

    #[test]
    fn bootstrap_is_deterministic_and_bounded() {
        let (tree, data) = serpar_data(3, 15);
        let opts = BootstrapOptions {
            resamples: 50,
            ..Default::default()
        };
        let run = || {
            let mut rng = stream(3, 0, Purpose::Bootstrap);
            cstar_bootstrap(&data, &tree, &LossConfig::default(), &opts, &mut rng).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        assert!(a.c_star >= 0.5 && a.c_star <= 2.0);
        assert_eq!(a.profile.len(), 151);
        assert_eq!(a.resamples_used + a.resamples_skipped, 50);
    }

    #[test]
    fn bootstrap_rejects_bad_options() {
        let (tree, data) = serpar_data(3, 15);
        let mut rng = stream(3, 0, Purpose::Bootstrap);
        let cfg = LossConfig::default();
        let zero = BootstrapOptions {
            resamples: 0,
            ..Default::default()
        };
        assert!(cstar_bootstrap(&data, &tree, &cfg, &zero, &mut rng).is_err());
        let empty = BootstrapOptions {
            grid: vec![],
            ..Default::default()
        };
        assert!(cstar_bootstrap(&data, &tree, &cfg, &empty, &mut rng).is_err());
    }
}
