use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{mean, sample_sd, CompleteCases, EconometricsError};
use crate::dataset::Dataset;

const SINGULAR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeWeightsResult {
    pub features: Vec<String>,
    /// Share of R² attributed to each feature (R² units).
    pub epsilons: Vec<f64>,
    pub r_squared: f64,
}

impl RelativeWeightsResult {
    pub fn of(&self, feature: &str) -> Option<f64> {
        self.features
            .iter()
            .position(|f| f == feature)
            .map(|i| self.epsilons[i])
    }
}

/// Relative weights through the symmetric (least-squares) orthogonalization.
///
/// With the standardized predictors scaled to unit norm, `X = UΣVᵀ`, the
/// orthonormal surrogate is `Z = UVᵀ` and the loadings of `X` on `Z` are
/// `Λ = VΣVᵀ`. The response is regressed on `Z` for weights `β`, and
/// feature `j` receives `Σ_k Λ²_jk β²_k`.
pub fn relative_weights(dataset: &Dataset) -> Result<RelativeWeightsResult, EconometricsError> {
    let cc = CompleteCases::from_dataset(dataset);
    cc.require_rows()?;
    cc.sst()?;
    let (n, p) = (cc.n(), cc.p());
    let scale = libm::sqrt((n - 1) as f64);

    let mut stats = Vec::with_capacity(p);
    for (j, col) in cc.x.iter().enumerate() {
        let sd = sample_sd(col);
        if !(sd > 0.0) {
            return Err(EconometricsError::RankDeficient(alloc::vec![cc.names[j].clone()]));
        }
        stats.push((mean(col), sd));
    }
    let x = DMatrix::from_fn(n, p, |i, j| (cc.x[j][i] - stats[j].0) / (stats[j].1 * scale));
    let (my, sy) = (mean(&cc.y), sample_sd(&cc.y));
    let y = DVector::from_iterator(n, cc.y.iter().map(|v| (v - my) / (sy * scale)));

    let svd = x.svd(true, true);
    let sigma = &svd.singular_values;
    let max_sigma = sigma.max();
    if sigma.iter().any(|&s| s <= SINGULAR_TOLERANCE * max_sigma) {
        let dependent = (0..p)
            .filter(|&k| sigma[k] <= SINGULAR_TOLERANCE * max_sigma)
            .flat_map(|k| {
                let v_t = svd.v_t.as_ref().expect("v_t requested");
                let row = v_t.row(k).into_owned();
                (0..p).filter(move |&j| row[j].abs() > 1e-6)
            })
            .map(|j| cc.names[j].clone())
            .collect::<Vec<_>>();
        return Err(EconometricsError::RankDeficient(dependent));
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let v = v_t.transpose();

    let z = u * v_t;
    let beta = z.transpose() * &y;
    let lambda = &v * DMatrix::from_diagonal(sigma) * v_t;

    let epsilons: Vec<f64> = (0..p)
        .map(|j| {
            (0..p)
                .map(|k| lambda[(j, k)] * lambda[(j, k)] * beta[k] * beta[k])
                .sum()
        })
        .collect();
    Ok(RelativeWeightsResult {
        features: cc.names.clone(),
        r_squared: epsilons.iter().sum(),
        epsilons,
    })
}
