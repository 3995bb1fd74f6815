use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{CompleteCases, EconometricsError};
use crate::dataset::Dataset;

/// Submodel enumeration is exponential; beyond this it is refused.
pub const MAX_DOMINANCE_PREDICTORS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceResult {
    pub features: Vec<String>,
    /// Average incremental R² per feature, in R² units.
    pub general_dominance: Vec<f64>,
    pub full_r_squared: f64,
    pub n_submodels: usize,
}

impl DominanceResult {
    pub fn of(&self, feature: &str) -> Option<f64> {
        self.features
            .iter()
            .position(|f| f == feature)
            .map(|i| self.general_dominance[i])
    }
}

/// General dominance weights from all `2^p - 1` non-empty submodels.
///
/// For each feature the R² increment from adding it is averaged over the
/// subsets of each size not containing it, and those per-size averages are
/// then averaged over sizes `0..p`.
pub fn dominance_analysis(dataset: &Dataset) -> Result<DominanceResult, EconometricsError> {
    let cc = CompleteCases::from_dataset(dataset);
    let p = cc.p();
    if p > MAX_DOMINANCE_PREDICTORS {
        return Err(EconometricsError::TooManyPredictors(p));
    }
    cc.require_rows()?;
    let sst = cc.sst()?;

    let n_masks = 1usize << p;
    let r2: Vec<f64> = (0..n_masks as u64)
        .map(|mask| cc.r_squared_subset(mask, sst))
        .collect::<Result<_, _>>()?;

    let mut general = alloc::vec![0.0; p];
    for (j, g) in general.iter_mut().enumerate() {
        let bit = 1usize << j;
        let mut by_size = alloc::vec![(0.0f64, 0usize); p];
        for mask in (0..n_masks).filter(|m| m & bit == 0) {
            let k = mask.count_ones() as usize;
            by_size[k].0 += r2[mask | bit] - r2[mask];
            by_size[k].1 += 1;
        }
        *g = by_size.iter().map(|(s, c)| s / *c as f64).sum::<f64>() / p as f64;
    }

    Ok(DominanceResult {
        features: cc.names.clone(),
        general_dominance: general,
        full_r_squared: r2[n_masks - 1],
        n_submodels: n_masks - 1,
    })
}
