//! Minimal dense network with manual backprop.
//!
//! Two tiny architectures sit on top of this (the difficulty regressor and
//! the residual quantile head), so the implementation favors checkability
//! over speed: parameters live in one flat `Vec<f64>` so a central
//! finite-difference oracle can sweep every coordinate of any training
//! objective, and all forward/backward arithmetic is plain f64 with no
//! hidden state. Training code seeds every draw, runs single-threaded, and
//! is bitwise reproducible.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;

/// Fully connected network: ReLU hidden layers, linear output layer.
///
/// Parameter layout per layer, in order: weight matrix `(out x in)`
/// row-major, then bias `(out)`. Layers are stored consecutively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Per-layer activations captured during a forward pass, for backprop.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Pre-activations `z_l` per layer.
    pre: Vec<Vec<f64>>,
    /// Post-activations `a_l` per layer (last layer: identical to pre).
    post: Vec<Vec<f64>>,
}

impl Mlp {
    /// He-initialized network: weights `N(0, 2 / fan_in)`, zero biases.
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output layers");
        assert!(sizes.iter().all(|&s| s > 0), "zero-width layer");
        let mut rng = rng_from_seed(seed);
        let mut params = Vec::with_capacity(Self::count_params(sizes));
        for l in 1..sizes.len() {
            let scale = (2.0 / sizes[l - 1] as f64).sqrt();
            for _ in 0..sizes[l] * sizes[l - 1] {
                let g: f64 = rng.sample(StandardNormal);
                params.push(scale * g);
            }
            params.extend(std::iter::repeat_n(0.0, sizes[l]));
        }
        Self { sizes: sizes.to_vec(), params }
    }

    /// All-zero network; forward output is exactly zero for any input.
    pub fn zeroed(sizes: &[usize]) -> Self {
        Self { sizes: sizes.to_vec(), params: vec![0.0; Self::count_params(sizes)] }
    }

    fn count_params(sizes: &[usize]) -> usize {
        (1..sizes.len()).map(|l| sizes[l] * (sizes[l - 1] + 1)).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Offset of layer `l`'s weight block (`l` counted from 1).
    fn layer_offset(&self, layer: usize) -> usize {
        (1..layer).map(|l| self.sizes[l] * (self.sizes[l - 1] + 1)).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_trace(x).0
    }

    /// Forward pass that also records activations for [`Self::backward`].
    pub fn forward_trace(&self, x: &[f64]) -> (Vec<f64>, Trace) {
        assert_eq!(x.len(), self.sizes[0], "input width mismatch");
        let depth = self.sizes.len() - 1;
        let mut pre = Vec::with_capacity(depth);
        let mut post = Vec::with_capacity(depth);
        let mut a: Vec<f64> = x.to_vec();
        for l in 1..=depth {
            let (n_out, n_in) = (self.sizes[l], self.sizes[l - 1]);
            let base = self.layer_offset(l);
            let mut z = vec![0.0; n_out];
            for i in 0..n_out {
                let row = base + i * n_in;
                let mut acc = self.params[base + n_out * n_in + i]; // bias
                for j in 0..n_in {
                    acc += self.params[row + j] * a[j];
                }
                z[i] = acc;
            }
            let activated: Vec<f64> = if l < depth {
                z.iter().map(|&v| v.max(0.0)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
            post.push(activated.clone());
            a = activated;
        }
        (a, Trace { pre, post })
    }

    /// Accumulates `dL/dparams` into `grad` given `dL/doutput`, and returns
    /// `dL/dinput`. `grad` must have `n_params` entries.
    pub fn backward(&self, x: &[f64], trace: &Trace, dout: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let depth = self.sizes.len() - 1;
        assert_eq!(dout.len(), self.sizes[depth], "output gradient width mismatch");
        assert_eq!(grad.len(), self.n_params(), "gradient buffer size mismatch");

        let mut delta: Vec<f64> = dout.to_vec();
        for l in (1..=depth).rev() {
            let (n_out, n_in) = (self.sizes[l], self.sizes[l - 1]);
            let base = self.layer_offset(l);
            let input: &[f64] = if l == 1 { x } else { &trace.post[l - 2] };
            for i in 0..n_out {
                let row = base + i * n_in;
                for j in 0..n_in {
                    grad[row + j] += delta[i] * input[j];
                }
                grad[base + n_out * n_in + i] += delta[i];
            }
            let mut prev = vec![0.0; n_in];
            for (i, &d) in delta.iter().enumerate() {
                let row = base + i * n_in;
                for (j, slot) in prev.iter_mut().enumerate() {
                    *slot += self.params[row + j] * d;
                }
            }
            if l > 1 {
                // ReLU gate of the layer below; derivative 0 at exactly 0.
                for (j, slot) in prev.iter_mut().enumerate() {
                    if trace.pre[l - 2][j] <= 0.0 {
                        *slot = 0.0;
                    }
                }
            }
            delta = prev;
        }
        delta
    }
}

/// Adam with bias correction; the standard constants.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }

    /// Set the step size for subsequent [`Self::step`] calls; moment state
    /// carries over (for learning-rate schedules).
    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

/// Two-phase learning-rate schedule: constant for the first half of the
/// epoch budget, then cosine decay toward zero. MAE and pinball objectives
/// have sign-like gradients, so constant-step Adam orbits the optimum at
/// roughly the step size; the decay collapses that orbit so training
/// settles instead of oscillating.
pub fn scheduled_lr(base: f64, epoch: usize, total_epochs: usize) -> f64 {
    let warm = total_epochs / 2;
    if epoch < warm || total_epochs <= warm {
        base
    } else {
        let t = (epoch - warm) as f64 / (total_epochs - warm) as f64;
        base * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

/// Central finite-difference gradient of `f` at `params`: the independent
/// oracle the analytic gradients are checked against.
pub fn finite_difference_grad<F>(f: F, params: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut work = params.to_vec();
    let mut grad = vec![0.0; params.len()];
    for (i, slot) in grad.iter_mut().enumerate() {
        let orig = work[i];
        work[i] = orig + h;
        let up = f(&work);
        work[i] = orig - h;
        let down = f(&work);
        work[i] = orig;
        *slot = (up - down) / (2.0 * h);
    }
    grad
}

/// Max relative disagreement between two gradient vectors, with a floor so
/// near-zero coordinates compare absolutely.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}
