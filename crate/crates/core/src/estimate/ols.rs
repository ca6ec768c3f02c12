//! Least squares through the origin with cluster-robust standard errors.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::data::{BidRecord, Dataset, Role, Treatment};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_obs: usize,
    pub n_clusters: usize,
}

/// Regresses `y` on the columns of `x` (one row per observation, no
/// intercept). Covariance is the sandwich `B M B` with `B = (X'X)^{-1}` and
/// `M = Σ_g X_g' e_g e_g' X_g`, scaled by `G/(G-1) · (N-1)/(N-K)`.
pub fn ols_origin(
    names: Vec<String>,
    x: &[Vec<f64>],
    y: &[f64],
    clusters: &[u64],
) -> Result<RegressionResult> {
    let n = y.len();
    let k = names.len();
    if k == 0 {
        return Err(Error::Domain(
            "regression needs at least one regressor".into(),
        ));
    }
    if x.len() != n || clusters.len() != n || x.iter().any(|r| r.len() != k) {
        return Err(Error::Domain(
            "regression inputs have mismatched lengths".into(),
        ));
    }
    if n <= k {
        return Err(Error::UndefinedStatistic(format!(
            "{n} observations for {k} coefficients"
        )));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite regression input".into()));
    }
    let xm = DMatrix::from_fn(n, k, |i, j| x[i][j]);
    let yv = DVector::from_column_slice(y);
    let xtx = xm.transpose() * &xm;
    let scale = xtx.diagonal().amax().max(f64::MIN_POSITIVE);
    let svd = xtx.clone().svd(false, false);
    if svd.singular_values.min() <= 1e-12 * scale {
        return Err(Error::Singular("design matrix is rank deficient".into()));
    }
    let bread = xtx
        .try_inverse()
        .ok_or_else(|| Error::Singular("X'X not invertible".into()))?;
    let beta = &bread * xm.transpose() * &yv;
    let fitted = &xm * &beta;
    // Residuals at the rounding level of the fit are an exact line.
    let resid = DVector::from_fn(n, |i, _| {
        let e = yv[i] - fitted[i];
        if e.abs() <= 8.0 * f64::EPSILON * (yv[i].abs() + fitted[i].abs()) {
            0.0
        } else {
            e
        }
    });

    let mut scores: BTreeMap<u64, DVector<f64>> = BTreeMap::new();
    for i in 0..n {
        let row = xm.row(i).transpose() * resid[i];
        *scores
            .entry(clusters[i])
            .or_insert_with(|| DVector::zeros(k)) += row;
    }
    let g = scores.len();
    if g < 2 {
        return Err(Error::UndefinedStatistic(
            "clustered errors need at least two clusters".into(),
        ));
    }
    let mut meat = DMatrix::zeros(k, k);
    for s in scores.values() {
        meat += s * s.transpose();
    }
    let factor = g as f64 / (g - 1) as f64 * (n - 1) as f64 / (n - k) as f64;
    let cov = &bread * meat * &bread * factor;
    Ok(RegressionResult {
        names,
        coefficients: beta.iter().copied().collect(),
        std_errors: (0..k).map(|i| cov[(i, i)].max(0.0).sqrt()).collect(),
        n_obs: n,
        n_clusters: g,
    })
}

/// Bid on value interacted with a dummy for every treatment present,
/// clustered by subject.
pub fn bidding_regression(d: &Dataset) -> Result<RegressionResult> {
    let bidders: Vec<&BidRecord> = d.bids.iter().filter(|r| r.role == Role::Bidder).collect();
    let present: Vec<Treatment> = Treatment::ALL
        .into_iter()
        .filter(|t| bidders.iter().any(|r| r.treatment == *t))
        .collect();
    if present.is_empty() {
        return Err(Error::UndefinedStatistic("no bidder records".into()));
    }
    let names = present.iter().map(|t| format!("value_{t}")).collect();
    let x: Vec<Vec<f64>> = bidders
        .iter()
        .map(|r| {
            present
                .iter()
                .map(|t| if r.treatment == *t { r.value } else { 0.0 })
                .collect()
        })
        .collect();
    let y: Vec<f64> = bidders.iter().map(|r| r.bid).collect();
    let clusters: Vec<u64> = bidders
        .iter()
        .map(|r| (u64::from(r.session_id) << 32) | u64::from(r.subject_id))
        .collect();
    ols_origin(names, &x, &y, &clusters)
}

/// Mean bid/value ratio over records with positive value, and the number of
/// zero-value records left out.
pub fn bid_value_coefficient<'a>(
    records: impl IntoIterator<Item = &'a BidRecord>,
) -> Result<(f64, usize)> {
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for r in records {
        if r.value > 0.0 {
            sum += r.bid / r.value;
            used += 1;
        } else {
            skipped += 1;
        }
    }
    if used == 0 {
        return Err(Error::UndefinedStatistic(
            "no record with a positive value".into(),
        ));
    }
    Ok((sum / used as f64, skipped))
}
