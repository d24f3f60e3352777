//! Residual quantile network: predicts the `0.5*alpha` and `1 - 0.5*alpha`
//! conditional quantiles of the label given the base prediction and one or
//! two difficulty estimates.
//!
//! Architecture: one hidden ReLU layer with twice as many units as inputs,
//! a two-unit linear output head, and an additive residual connection from
//! the base-prediction input to both outputs. The hidden path sees
//! standardized inputs; the residual path sees the raw base prediction, so a
//! zero-weight network predicts `(yhat, yhat)` exactly — the network only
//! learns the offsets around the base regressor.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::nn::{scheduled_lr, Adam, Mlp};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

const BATCH_SIZE: usize = 64;
const EPOCHS: usize = 300;
const LEARNING_RATE: f64 = 1e-2;

/// Pinball (quantile) loss at level `eps`:
/// `eps * (y - yhat)` when `y >= yhat`, else `(1 - eps) * (yhat - y)`.
/// Zero iff `y == yhat`; minimizing it in expectation yields the
/// `eps`-quantile.
pub fn pinball_loss(eps: f64, y: f64, yhat: f64) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid_param("eps", format!("quantile level must lie in (0,1), got {eps}")));
    }
    let d = y - yhat;
    Ok(if d >= 0.0 { eps * d } else { (eps - 1.0) * d })
}

/// Subgradient of [`pinball_loss`] in `yhat` (the branch at `y == yhat`
/// follows the `>= 0` side).
/// Derivative of the pinball loss with respect to the prediction `yhat`;
/// the subgradient convention at the kink `y = yhat` takes the left branch.
pub fn pinball_grad(eps: f64, y: f64, yhat: f64) -> f64 {
    if y - yhat >= 0.0 {
        -eps
    } else {
        1.0 - eps
    }
}

/// A trained per-edge quantile pair predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileNet {
    mlp: Mlp,
    input_mean: Vec<f64>,
    input_std: Vec<f64>,
    /// Miscoverage the quantile levels were derived from: the heads target
    /// the `0.5*alpha` and `1 - 0.5*alpha` quantiles.
    pub alpha: f64,
    /// Mean training loss (sum of both pinball terms) per epoch.
    pub loss_curve: Vec<f64>,
    pub epochs: usize,
    pub seed: u64,
}

impl QuantileNet {
    pub fn n_inputs(&self) -> usize {
        self.mlp.n_inputs()
    }

    /// A zero-weight network of the given arity: predicts `(yhat, yhat)`.
    /// The starting point of training and a reference for tests.
    pub fn zeroed(n_inputs: usize, alpha: f64) -> Result<Self> {
        validate_arity(n_inputs)?;
        validate_alpha(alpha)?;
        Ok(Self {
            mlp: Mlp::zeroed(&[n_inputs, 2 * n_inputs, 2]),
            input_mean: vec![0.0; n_inputs],
            input_std: vec![1.0; n_inputs],
            alpha,
            loss_curve: vec![],
            epochs: 0,
            seed: 0,
        })
    }

    /// Raw head outputs (lo, hi) — residual connection applied, ordering
    /// not. Training optimizes these.
    fn forward_raw(&self, inputs: &[f64]) -> (f64, f64) {
        let z = standardize(inputs, &self.input_mean, &self.input_std);
        let out = self.mlp.forward(&z);
        (out[0] + inputs[0], out[1] + inputs[0])
    }

}

/// Ordered quantile predictions for one example: `lo <= hi` always, by a
/// final swap if the raw heads cross.
pub fn predict_quantiles(net: &QuantileNet, inputs: &[f64]) -> (f64, f64) {
    assert_eq!(inputs.len(), net.n_inputs(), "input arity mismatch");
    let (lo, hi) = net.forward_raw(inputs);
    if lo <= hi {
        (lo, hi)
    } else {
        (hi, lo)
    }
}

fn validate_arity(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(Error::invalid_param(
            "inputs",
            format!("quantile nets take 2 inputs (yhat, phi) or 3 (yhat, phi_a, phi_b), got {n}"),
        ))
    }
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::invalid_param("alpha", format!("must lie in (0, 0.5), got {alpha}")))
    }
}

fn standardize(x: &[f64], mean: &[f64], std: &[f64]) -> Vec<f64> {
    x.iter().zip(mean.iter().zip(std)).map(|(&v, (&m, &s))| (v - m) / s).collect()
}

/// Train a quantile network on `(inputs, y)` pairs. `inputs[0]` must be the
/// base prediction; one or two difficulty estimates follow.
///
/// Minimizes `pinball(0.5a, y, lo) + pinball(1 - 0.5a, y, hi)` on the raw
/// heads by mini-batch Adam with a cosine-decayed step size. Aborts with a
/// diagnostic if the loss goes non-finite. Bitwise deterministic per seed.
pub fn fit_quantile_net(train: &[(Vec<f64>, f64)], alpha: f64, seed: u64) -> Result<QuantileNet> {
    validate_alpha(alpha)?;
    if train.len() < 10 {
        return Err(Error::Training(format!(
            "need at least 10 training examples, got {}",
            train.len()
        )));
    }
    let n_in = train[0].0.len();
    validate_arity(n_in)?;
    for (x, y) in train {
        if x.len() != n_in {
            return Err(Error::Training("inconsistent input arity in training data".into()));
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training("non-finite training example".into()));
        }
    }

    let (input_mean, input_std) = input_stats(train, n_in);
    let standardized: Vec<Vec<f64>> =
        train.iter().map(|(x, _)| standardize(x, &input_mean, &input_std)).collect();

    let eps_lo = 0.5 * alpha;
    let eps_hi = 1.0 - 0.5 * alpha;
    let mut mlp = Mlp::new(&[n_in, 2 * n_in, 2], seed);
    let mut opt = Adam::new(LEARNING_RATE, mlp.n_params());
    let mut rng = rng_from_seed(seed ^ 0x5851_f42d_4c95_7f2d);
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
            for &i in batch {
                let (x, y) = (&train[i].0, train[i].1);
                let (out, trace) = mlp.forward_trace(&standardized[i]);
                let lo = out[0] + x[0];
                let hi = out[1] + x[0];
                epoch_loss += pinball_loss(eps_lo, y, lo)? + pinball_loss(eps_hi, y, hi)?;
                let dout =
                    [scale * pinball_grad(eps_lo, y, lo), scale * pinball_grad(eps_hi, y, hi)];
                mlp.backward(&standardized[i], &trace, &dout, &mut grad);
            }
            opt.step(&mut mlp.params, &grad);
        }
        let mean_loss = epoch_loss / train.len() as f64;
        if !mean_loss.is_finite() {
            return Err(Error::Training(format!("quantile loss diverged to {mean_loss}")));
        }
        loss_curve.push(mean_loss);
    }

    Ok(QuantileNet {
        mlp,
        input_mean,
        input_std,
        alpha,
        loss_curve,
        epochs: EPOCHS,
        seed,
    })
}

fn input_stats(train: &[(Vec<f64>, f64)], n_in: usize) -> (Vec<f64>, Vec<f64>) {
    let n = train.len() as f64;
    let mut mean = vec![0.0; n_in];
    for (x, _) in train {
        for (m, &v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0; n_in];
    for (x, _) in train {
        for (s, (&v, &m)) in std.iter_mut().zip(x.iter().zip(&mean)) {
            *s += (v - m) * (v - m) / n;
        }
    }
    (mean, std.into_iter().map(|v| v.sqrt().max(1e-12)).collect())
}
