//! Relative importance analysis for small tabular regressions.
//!
//! The crate pairs the usual econometric baselines (OLS significance,
//! beta weights, usefulness, dominance analysis, relative weights) with an
//! exploratory least-squares gradient-boosted tree ensemble and three
//! importance measures computed on it: selection frequency, split-based
//! relative influence and permutation importance. Univariate partial
//! dependence curves complete the picture.
//!
//! Everything here is pure computation over in-memory data and builds
//! without `std`; file formats and the command-line front end live in the
//! `relimp` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod dataset;
pub mod econometrics;
pub mod gbm;
pub mod importance;
mod numeric;
pub mod pdp;
pub mod rng;
pub mod tree;

pub use dataset::{ColumnStats, Dataset, DatasetError, FeatureMatrix};
pub use econometrics::{
    dominance_analysis, ols_fit, relative_weights, significant_features, usefulness, usefulness_all,
    DominanceResult, EconometricsError, RegressionSummary, RelativeWeightsResult,
};
pub use gbm::{fit_gbm, r_squared, GbmConfig, GbmError, GbmModel, MseTracePoint};
pub use importance::{
    permutation_importance, selection_frequency, split_importance, FeatureScore, ImportanceError,
    ImportanceMethod, ImportanceReport, Metric,
};
pub use pdp::{partial_dependence, PdpCurve, PdpError};
pub use tree::{best_split, grow_tree, RegressionTree, SplitCandidate, SplitRecord, TreeConfig, TreeError};
