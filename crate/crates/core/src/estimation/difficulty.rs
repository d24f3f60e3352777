//! The difficulty regressor: fits `-ln |y - g(x)|` from noise-image
//! features; its exponential `gamma = exp(-phi)` scales normalized conformal
//! intervals.

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;

use super::features::{DifficultyFeatures, FEATURE_DIM};
use super::nn::{scheduled_lr, Adam, Mlp};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Residual clamp before the log transform: the reference objective is
/// undefined at zero residual, which does occur with a discrete detector.
pub const RESIDUAL_CLAMP: f64 = 1e-6;
/// Kink smoothing for the absolute-error loss: `sqrt(e^2 + DELTA^2)`.
pub const MAE_SMOOTHING: f64 = 1e-8;

const HIDDEN_UNITS: usize = 16;
const BATCH_SIZE: usize = 32;
const EPOCHS: usize = 200;
const LEARNING_RATE: f64 = 1e-2;

/// Difficulty target for one example: `-ln(max(|residual|, 1e-6))`.
/// Large values mean easy examples (small error).
pub fn difficulty_target(residual: f64) -> f64 {
    -(residual.abs().max(RESIDUAL_CLAMP)).ln()
}

/// Smoothed absolute error: `sqrt(e^2 + MAE_SMOOTHING^2)`. The training
/// objective is the mean of this over a batch; the smoothing keeps the
/// gradient defined at `e = 0` without measurably moving the optimum.
pub fn smoothed_mae(e: f64) -> f64 {
    (e * e + MAE_SMOOTHING * MAE_SMOOTHING).sqrt()
}

/// Derivative of [`smoothed_mae`] with respect to the error `e`.
pub fn smoothed_mae_grad(e: f64) -> f64 {
    e / smoothed_mae(e)
}

/// A trained per-edge difficulty regressor.
///
/// Features and targets are both standardized with the training-split
/// statistics stored in the model; the network is an 11-16-1 ReLU MLP in
/// standardized space and predictions map back to raw units. Training the
/// centered target keeps the output head near zero instead of chasing the
/// target mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyModel {
    mlp: Mlp,
    feat_mean: Vec<f64>,
    feat_std: Vec<f64>,
    target_mean: f64,
    target_std: f64,
    /// Unsmoothed mean absolute error on the training set after the last
    /// epoch, in raw target units.
    pub train_mae: f64,
    /// Mean smoothed-MAE loss per epoch, in raw target units.
    pub loss_curve: Vec<f64>,
    pub epochs: usize,
    pub seed: u64,
}

impl DifficultyModel {
    /// Predicted difficulty score phi-hat.
    pub fn predict_phi(&self, features: &DifficultyFeatures) -> f64 {
        let z = standardize(features.as_slice(), &self.feat_mean, &self.feat_std);
        self.mlp.forward(&z)[0] * self.target_std + self.target_mean
    }

    /// `gamma = exp(-phi_hat)`: strictly positive, strictly decreasing in
    /// the predicted difficulty score.
    pub fn predict_gamma(&self, features: &DifficultyFeatures) -> f64 {
        (-self.predict_phi(features)).exp()
    }

    pub fn feature_dim(&self) -> usize {
        self.feat_mean.len()
    }

    #[cfg(test)]
    pub(crate) fn from_raw(mlp: Mlp, feat_mean: Vec<f64>, feat_std: Vec<f64>) -> Self {
        Self {
            mlp,
            feat_mean,
            feat_std,
            target_mean: 0.0,
            target_std: 1.0,
            train_mae: 0.0,
            loss_curve: vec![],
            epochs: 0,
            seed: 0,
        }
    }
}

fn standardize(x: &[f64], mean: &[f64], std: &[f64]) -> Vec<f64> {
    x.iter().zip(mean.iter().zip(std)).map(|(&v, (&m, &s))| (v - m) / s).collect()
}

/// Train a difficulty model on `(features, target)` pairs, where targets
/// come from [`difficulty_target`].
///
/// Mini-batch Adam on the smoothed absolute error `sqrt(e^2 + 1e-16)` with
/// a cosine-decayed step size over a fixed epoch budget; the seed drives
/// both initialization and the per-epoch shuffle, so training is bitwise
/// reproducible.
pub fn fit_difficulty(train: &[(DifficultyFeatures, f64)], seed: u64) -> Result<DifficultyModel> {
    if train.len() < 10 {
        return Err(Error::Training(format!(
            "need at least 10 training examples, got {}",
            train.len()
        )));
    }
    for (f, t) in train {
        if !t.is_finite() || f.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Training("non-finite feature or target".into()));
        }
    }

    let (feat_mean, feat_std) = feature_stats(train);
    let inputs: Vec<Vec<f64>> =
        train.iter().map(|(f, _)| standardize(f.as_slice(), &feat_mean, &feat_std)).collect();
    let raw_targets: Vec<f64> = train.iter().map(|&(_, t)| t).collect();
    let target_mean = raw_targets.iter().sum::<f64>() / raw_targets.len() as f64;
    let target_var = raw_targets.iter().map(|t| (t - target_mean) * (t - target_mean)).sum::<f64>()
        / raw_targets.len() as f64;
    let target_std = target_var.sqrt().max(1e-12);
    let targets: Vec<f64> = raw_targets.iter().map(|t| (t - target_mean) / target_std).collect();

    let mut mlp = Mlp::new(&[FEATURE_DIM, HIDDEN_UNITS, 1], seed);
    let mut opt = Adam::new(LEARNING_RATE, mlp.n_params());
    let mut rng = rng_from_seed(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut grad = vec![0.0; mlp.n_params()];
    let mut loss_curve = Vec::with_capacity(EPOCHS);

    for epoch in 0..EPOCHS {
        opt.set_lr(scheduled_lr(LEARNING_RATE, epoch, EPOCHS));
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(BATCH_SIZE) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let (out, trace) = mlp.forward_trace(&inputs[i]);
                let e = out[0] - targets[i];
                batch_loss += smoothed_mae(e);
                mlp.backward(&inputs[i], &trace, &[scale * smoothed_mae_grad(e)], &mut grad);
            }
            epoch_loss += batch_loss;
            opt.step(&mut mlp.params, &grad);
        }
        let mean_loss = epoch_loss / train.len() as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Training(format!("loss diverged to {mean_loss}")));
        }
        loss_curve.push(mean_loss * target_std);
    }

    let train_mae = inputs
        .iter()
        .zip(&raw_targets)
        .map(|(x, &t)| (mlp.forward(x)[0] * target_std + target_mean - t).abs())
        .sum::<f64>()
        / train.len() as f64;

    Ok(DifficultyModel {
        mlp,
        feat_mean,
        feat_std,
        target_mean,
        target_std,
        train_mae,
        loss_curve,
        epochs: EPOCHS,
        seed,
    })
}

fn feature_stats(train: &[(DifficultyFeatures, f64)]) -> (Vec<f64>, Vec<f64>) {
    let n = train.len() as f64;
    let mut mean = vec![0.0; FEATURE_DIM];
    for (f, _) in train {
        for (m, &v) in mean.iter_mut().zip(f.as_slice()) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0; FEATURE_DIM];
    for (f, _) in train {
        for (s, (&v, &m)) in std.iter_mut().zip(f.as_slice().iter().zip(&mean)) {
            *s += (v - m) * (v - m) / n;
        }
    }
    // Constant features (the bias term) standardize to zero, not infinity.
    let std = std.into_iter().map(|v| v.sqrt().max(1e-12)).collect();
    (mean, std)
}
