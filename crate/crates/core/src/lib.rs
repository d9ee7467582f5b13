//! Nonparametric reliability estimation for coherent systems from
//! right-censored component-level (autopsy) data.
//!
//! Component reliability curves are product-limit estimates; the system
//! curve is their composition through the structure function, optionally
//! with every component curve raised to a common power `c` (equivalently,
//! every cumulative hazard scaled by `c`). The coefficient is chosen by
//! minimizing an analytic approximation of the weighted Cramér–von Mises
//! risk, or a bootstrap estimate of it.
//!
//! ```
//! use shrinkrel::{StructureTree, ReliabilityVector};
//!
//! let tree: StructureTree = "series(c1,parallel(c2,c3))".parse().unwrap();
//! let p = ReliabilityVector::new(vec![0.9, 0.5, 0.5]).unwrap();
//! assert!((tree.h(&p).unwrap() - 0.675).abs() < 1e-15);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cstar;
pub mod datagen;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod risk;
pub mod streams;
pub mod structure;
pub mod survival;

pub use config::ConfigFile;
pub use cstar::{
    cstar_analytic, cstar_bootstrap, AnalyticOptions, BootstrapOptions, CStarResult, Selector,
};
pub use datagen::{
    AutopsyDataset, CensoringSpec, Generated, SystemDataset, TrueSystem, WeibullSpec,
};
pub use error::{Error, Result};
pub use estimators::{plugin_curve, system_ple, EstimateKind, SystemCurveEstimate};
pub use experiments::{run_scenario, run_sweep, Method, ScenarioConfig, ScenarioResult, SweepAxis};
pub use risk::{LossConfig, QuadCoefficients};
pub use structure::{Kind, ReliabilityVector, StructureTree};
pub use survival::{km_fit, CensoredSample, Observation, SurvivalCurve};
