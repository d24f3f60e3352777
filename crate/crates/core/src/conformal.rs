//! Split conformal calibration: plain, normalized, and CQR variants.
//!
//! All three share one mechanism. A calibration set supplies nonconformity
//! scores, the `m = floor(alpha * (n + 1))`-th largest score becomes the
//! calibration constant, and test-time intervals are built from that constant:
//!
//! * plain: score `|y - yhat|`, interval `[yhat - r_m, yhat + r_m]`
//! * normalized: score `|y - yhat| / gamma`, interval `[yhat -+ rho_m * gamma]`
//! * CQR: score `max(lo - y, y - hi)`, interval `[lo - eps_m, hi + eps_m]`
//!
//! For exchangeable data the rank argument gives exact marginal coverage
//! `(n + 1 - m) / (n + 1) >= 1 - alpha` regardless of how good the underlying
//! regressor is. Exchangeability itself is the caller's responsibility; the
//! dataset pipeline approximates it by splitting at the group level so that
//! calibration and test examples are drawn from the same mixture of
//! roughness/dose conditions.
//!
//! This module is pure calibration arithmetic: models that *produce* `yhat`,
//! `gamma`, or the quantile pair live in `estimation`, and the pipeline layer
//! couples them with the constants computed here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonconformity scores held sorted in nonincreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationScores {
    scores: Vec<f64>,
}

impl CalibrationScores {
    /// Sorts and stores the scores. Every score must be finite and there must
    /// be at least one.
    pub fn new(mut scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Calibration("empty calibration score set".into()));
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::Calibration(format!("non-finite calibration score {bad}")));
        }
        scores.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite scores"));
        Ok(Self { scores })
    }

    pub fn n(&self) -> usize {
        self.scores.len()
    }

    /// Scores in nonincreasing order.
    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }

    /// The `m`-th largest score, `m` 1-indexed. Ties are resolved
    /// positionally; validity does not depend on how equal values are ordered.
    pub fn mth_largest(&self, m: usize) -> Result<f64> {
        if m < 1 || m > self.scores.len() {
            return Err(Error::Calibration(format!(
                "rank {m} out of range for {} scores",
                self.scores.len()
            )));
        }
        Ok(self.scores[m - 1])
    }
}

/// Which calibration rule produced an [`IntervalModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelVariant {
    /// Fixed-radius intervals from absolute residuals.
    PlainCp { r_m: f64 },
    /// Difficulty-scaled intervals; pair with a gamma predictor at test time.
    NormalizedCp { rho_m: f64 },
    /// Quantile-interval adjustment; pair with a quantile regressor.
    Cqr { eps_m: f64 },
}

/// A calibrated interval rule: the constant plus the context it was fit in.
///
/// The variant stores only the constant. The regressors a variant relies on
/// (a difficulty model for `NormalizedCp`, a quantile pair for `Cqr`) are
/// supplied by the caller at interval-construction time, which keeps this
/// module free of model types and lets one calibration be reused with
/// checkpointed models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalModel {
    pub variant: ModelVariant,
    /// Miscoverage level the constant was computed for.
    pub alpha: f64,
    /// Calibration set size.
    pub n_calib: usize,
}

/// A marginal prediction interval for one test example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lo: f64,
    pub hi: f64,
    /// The base prediction the interval is anchored on; informational.
    pub center: f64,
}

impl PredictionInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lo <= y && y <= self.hi
    }
}

/// `m = floor(alpha * (n + 1))`: how deep into the sorted scores the
/// calibration constant sits.
///
/// `m < 1` means the calibration set cannot certify the requested miscoverage
/// and is a hard error; silently returning infinite intervals would mask the
/// configuration mistake.
pub fn quantile_index(n: usize, alpha: f64) -> Result<usize> {
    if n < 1 {
        return Err(Error::Calibration("empty calibration set".into()));
    }
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid_param("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    let m = (alpha * (n as f64 + 1.0)).floor() as usize;
    if m < 1 {
        return Err(Error::Calibration(format!(
            "calibration set too small for requested miscoverage (n = {n}, alpha = {alpha})"
        )));
    }
    Ok(m)
}

/// Absolute-residual nonconformity score `|y - yhat|`.
pub fn residual_score(y: f64, yhat: f64) -> f64 {
    (y - yhat).abs()
}

/// Plain split conformal: `r_m` = m-th largest absolute residual.
pub fn calibrate_cp(residuals: &[f64], alpha: f64) -> Result<IntervalModel> {
    let m = quantile_index(residuals.len(), alpha)?;
    let scores = CalibrationScores::new(residuals.to_vec())?;
    if scores.as_slice().last().is_some_and(|&s| s < 0.0) {
        return Err(Error::Calibration("negative absolute residual".into()));
    }
    Ok(IntervalModel {
        variant: ModelVariant::PlainCp { r_m: scores.mth_largest(m)? },
        alpha,
        n_calib: scores.n(),
    })
}

/// `[yhat - r_m, yhat + r_m]`.
pub fn interval_cp(yhat: f64, model: &IntervalModel) -> Result<PredictionInterval> {
    let ModelVariant::PlainCp { r_m } = model.variant else {
        return Err(Error::Calibration("interval_cp needs a PlainCp model".into()));
    };
    Ok(PredictionInterval { lo: yhat - r_m, hi: yhat + r_m, center: yhat })
}

/// Normalized conformal: `rho_m` = m-th largest of `residual / gamma` over
/// `(residual, gamma)` pairs. Every `gamma` must be strictly positive; the
/// difficulty model guarantees that for its own outputs, this guards foreign
/// inputs.
pub fn calibrate_ncp(pairs: &[(f64, f64)], alpha: f64) -> Result<IntervalModel> {
    let m = quantile_index(pairs.len(), alpha)?;
    let mut scores = Vec::with_capacity(pairs.len());
    for &(residual, gamma) in pairs {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Calibration(format!("nonpositive difficulty scale gamma = {gamma}")));
        }
        if residual < 0.0 {
            return Err(Error::Calibration("negative absolute residual".into()));
        }
        scores.push(residual / gamma);
    }
    let scores = CalibrationScores::new(scores)?;
    Ok(IntervalModel {
        variant: ModelVariant::NormalizedCp { rho_m: scores.mth_largest(m)? },
        alpha,
        n_calib: scores.n(),
    })
}

/// `[yhat - rho_m * gamma, yhat + rho_m * gamma]`: width tracks the predicted
/// difficulty of this particular example.
pub fn interval_ncp(yhat: f64, gamma: f64, model: &IntervalModel) -> Result<PredictionInterval> {
    let ModelVariant::NormalizedCp { rho_m } = model.variant else {
        return Err(Error::Calibration("interval_ncp needs a NormalizedCp model".into()));
    };
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Calibration(format!("nonpositive difficulty scale gamma = {gamma}")));
    }
    Ok(PredictionInterval {
        lo: yhat - rho_m * gamma,
        hi: yhat + rho_m * gamma,
        center: yhat,
    })
}

/// CQR nonconformity score `max(lo - y, y - hi)`: negative iff `y` lies
/// strictly inside `(lo, hi)`.
pub fn cqr_score(y: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo > hi {
        return Err(Error::Calibration(format!("quantile pair out of order: lo {lo} > hi {hi}")));
    }
    Ok((lo - y).max(y - hi))
}

/// CQR calibration over `(y, lo, hi)` triples: `eps_m` = m-th largest score.
/// Unlike the absolute-value variants, `eps_m` may be negative, in which case
/// test intervals shrink below the raw quantile band.
pub fn calibrate_cqr(calib: &[(f64, f64, f64)], alpha: f64) -> Result<IntervalModel> {
    let m = quantile_index(calib.len(), alpha)?;
    let scores: Vec<f64> = calib
        .iter()
        .map(|&(y, lo, hi)| cqr_score(y, lo, hi))
        .collect::<Result<_>>()?;
    let scores = CalibrationScores::new(scores)?;
    Ok(IntervalModel {
        variant: ModelVariant::Cqr { eps_m: scores.mth_largest(m)? },
        alpha,
        n_calib: scores.n(),
    })
}

/// `[lo - eps_m, hi + eps_m]`, collapsed to the midpoint when the adjustment
/// empties the interval.
///
/// The boolean is `true` for a collapse; callers accumulate it into the
/// degeneracy counter reported alongside coverage. Degeneracy is a counted
/// event, not an error — it only arises when `eps_m` is strongly negative,
/// i.e. when the quantile band was much wider than the data required.
pub fn interval_cqr(lo: f64, hi: f64, model: &IntervalModel) -> Result<(PredictionInterval, bool)> {
    let ModelVariant::Cqr { eps_m } = model.variant else {
        return Err(Error::Calibration("interval_cqr needs a Cqr model".into()));
    };
    if lo > hi {
        return Err(Error::Calibration(format!("quantile pair out of order: lo {lo} > hi {hi}")));
    }
    let center = 0.5 * (lo + hi);
    let a = lo - eps_m;
    let b = hi + eps_m;
    if a > b {
        return Ok((PredictionInterval { lo: center, hi: center, center }, true));
    }
    Ok((PredictionInterval { lo: a, hi: b, center }, false))
}
