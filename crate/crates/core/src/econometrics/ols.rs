use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{pearson, sample_sd, student_t, CompleteCases, EconometricsError};
use crate::dataset::Dataset;

/// Pivots of the QR factor smaller than this fraction of the column norm
/// mark a column as linearly dependent on the ones before it.
const RANK_TOLERANCE: f64 = 1e-9;

pub(crate) struct LeastSquaresFit {
    /// Intercept first, then one coefficient per column.
    pub coef: Vec<f64>,
    pub sse: f64,
    /// (XᵀX)⁻¹ of the design including the intercept column.
    pub xtx_inv: DMatrix<f64>,
}

/// OLS with intercept via Householder QR. On rank deficiency returns the
/// indices (into `cols`) of the dependent columns.
pub(crate) fn least_squares(y: &[f64], cols: &[&[f64]]) -> Result<LeastSquaresFit, Vec<usize>> {
    let n = y.len();
    let k = cols.len() + 1;
    let x = DMatrix::from_fn(n, k, |i, j| if j == 0 { 1.0 } else { cols[j - 1][i] });
    let norms: Vec<f64> = (0..k).map(|j| x.column(j).norm()).collect();
    let qr = x.clone().qr();
    let r = qr.r();
    let bad: Vec<usize> = (0..k)
        .filter(|&j| r[(j, j)].abs() <= RANK_TOLERANCE * norms[j] || norms[j] == 0.0)
        .collect();
    if !bad.is_empty() || n < k {
        let mut bad: Vec<usize> = bad.into_iter().map(|j| j.saturating_sub(1)).collect();
        bad.dedup();
        return Err(bad);
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let coef = r
        .solve_upper_triangular(&qty)
        .expect("nonsingular triangular factor");
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .expect("nonsingular triangular factor");
    let resid = &yv - &x * &coef;
    Ok(LeastSquaresFit {
        coef: coef.iter().copied().collect(),
        sse: resid.norm_squared(),
        xtx_inv: &r_inv * r_inv.transpose(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub feature: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    /// Coefficient in standard-deviation units of predictor and response.
    pub beta_weight: f64,
    pub zero_order_r: f64,
}

/// OLS fit with significance tests and standardized effect sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSummary {
    pub response: String,
    pub intercept: f64,
    pub intercept_std_error: f64,
    pub coefficients: Vec<CoefficientRow>,
    pub r_squared: f64,
    pub residual_std_error: f64,
    pub df_residual: usize,
    pub n_used: usize,
    pub dropped_rows: Vec<usize>,
}

impl RegressionSummary {
    pub fn row(&self, feature: &str) -> Option<&CoefficientRow> {
        self.coefficients.iter().find(|c| c.feature == feature)
    }
}

/// Least-squares regression of the response on every predictor.
pub fn ols_fit(dataset: &Dataset) -> Result<RegressionSummary, EconometricsError> {
    let cc = CompleteCases::from_dataset(dataset);
    cc.require_rows()?;
    let sst = cc.sst()?;
    let cols: Vec<&[f64]> = cc.x.iter().map(Vec::as_slice).collect();
    let fit = least_squares(&cc.y, &cols).map_err(|bad| {
        EconometricsError::RankDeficient(bad.into_iter().map(|j| cc.names[j].clone()).collect())
    })?;

    let df = cc.n() - cc.p() - 1;
    let sigma2 = fit.sse / df as f64;
    let sd_y = sample_sd(&cc.y);
    let se = |j: usize| libm::sqrt(sigma2 * fit.xtx_inv[(j, j)]);
    let coefficients = (0..cc.p())
        .map(|j| {
            let coefficient = fit.coef[j + 1];
            let std_error = se(j + 1);
            let t_stat = if std_error > 0.0 {
                coefficient / std_error
            } else if coefficient == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(coefficient)
            };
            CoefficientRow {
                feature: cc.names[j].clone(),
                coefficient,
                std_error,
                t_stat,
                p_value: student_t::two_sided_p(t_stat, df as f64),
                beta_weight: coefficient * sample_sd(&cc.x[j]) / sd_y,
                zero_order_r: pearson(&cc.x[j], &cc.y),
            }
        })
        .collect();

    Ok(RegressionSummary {
        response: dataset.response_name().into(),
        intercept: fit.coef[0],
        intercept_std_error: se(0),
        coefficients,
        r_squared: (1.0 - fit.sse / sst).clamp(0.0, 1.0),
        residual_std_error: libm::sqrt(sigma2),
        df_residual: df,
        n_used: cc.n(),
        dropped_rows: cc.dropped.clone(),
    })
}

/// Drop in R² when `feature` is removed from the full model.
pub fn usefulness(dataset: &Dataset, feature: &str) -> Result<f64, EconometricsError> {
    let cc = CompleteCases::from_dataset(dataset);
    let j = cc
        .names
        .iter()
        .position(|n| n == feature)
        .ok_or_else(|| EconometricsError::UnknownFeature(feature.into()))?;
    Ok(usefulness_of(&cc, &[j])?[0])
}

/// Usefulness of every predictor, in predictor order.
pub fn usefulness_all(dataset: &Dataset) -> Result<Vec<f64>, EconometricsError> {
    let cc = CompleteCases::from_dataset(dataset);
    let all: Vec<usize> = (0..cc.p()).collect();
    usefulness_of(&cc, &all)
}

fn usefulness_of(cc: &CompleteCases, which: &[usize]) -> Result<Vec<f64>, EconometricsError> {
    cc.require_rows()?;
    if cc.p() >= 64 {
        return Err(EconometricsError::TooManyPredictors(cc.p()));
    }
    let sst = cc.sst()?;
    let full_mask = if cc.p() == 64 { u64::MAX } else { (1u64 << cc.p()) - 1 };
    let full = cc.r_squared_subset(full_mask, sst)?;
    which
        .iter()
        .map(|&j| {
            let reduced = cc.r_squared_subset(full_mask & !(1 << j), sst)?;
            Ok((full - reduced).max(0.0))
        })
        .collect()
}

/// Predictors with p-value below `alpha`, in column order.
pub fn significant_features(
    summary: &RegressionSummary,
    alpha: f64,
) -> Result<Vec<String>, EconometricsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EconometricsError::InvalidAlpha(alpha));
    }
    Ok(summary
        .coefficients
        .iter()
        .filter(|c| c.p_value < alpha)
        .map(|c| c.feature.clone())
        .collect())
}
