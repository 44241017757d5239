//! Feed-forward classifier: ReLU hidden layers, softmax output, categorical
//! cross-entropy, Adam updates. Inputs are standardized with statistics
//! stored in the network.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::concepts::ConceptId;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![200, 50],
            learning_rate: 1e-3,
            epochs: 20,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// `weights` is `inputs x outputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Matrix::zeros(inputs, outputs),
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (k, &x) in input.iter().enumerate() {
            if x != 0.0 {
                for (o, w) in out.iter_mut().zip(self.weights.row(k)) {
                    *o += x * w;
                }
            }
        }
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.as_mut_slice().iter_mut().chain(self.bias.iter_mut())
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.as_slice().iter().chain(self.bias.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedForwardNet {
    pub input_width: usize,
    /// Output unit `i` predicts `targets[i]`; sorted ascending.
    pub targets: Vec<ConceptId>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub layers: Vec<DenseLayer>,
}

/// Per-layer gradients, shaped like [`FeedForwardNet::layers`].
pub type Gradients = Vec<DenseLayer>;

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

fn argmax_lowest(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

impl FeedForwardNet {
    /// He-initialized network (`N(0, 2 / fan_in)` weights, zero biases).
    pub fn init(
        input_width: usize,
        targets: Vec<ConceptId>,
        hidden: &[usize],
        mean: Vec<f64>,
        scale: Vec<f64>,
        seed: u64,
    ) -> Self {
        let mut rng = rng::seeded(seed);
        let mut widths = vec![input_width];
        widths.extend_from_slice(hidden);
        widths.push(targets.len());
        let layers = widths
            .windows(2)
            .map(|w| {
                let std = libm::sqrt(2.0 / w[0].max(1) as f64);
                let mut layer = DenseLayer::zeros(w[0], w[1]);
                for v in layer.weights.as_mut_slice() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = std * z;
                }
                layer
            })
            .collect();
        Self {
            input_width,
            targets,
            mean,
            scale,
            layers,
        }
    }

    /// Network with one output and no hidden layers: always predicts `target`.
    pub fn constant(target: ConceptId, input_width: usize) -> Self {
        Self {
            input_width,
            targets: vec![target],
            mean: vec![0.0; input_width],
            scale: vec![1.0; input_width],
            layers: vec![DenseLayer::zeros(input_width, 1)],
        }
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_width];
        w.extend(self.layers.iter().map(|l| l.bias.len()));
        w
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Returns the activations of every layer (input first, probabilities last)
    /// and the pre-activations of every layer.
    fn forward_cached(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut acts = vec![self.standardize(x)];
        let mut pre = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.apply(&acts[l], &mut z);
            let mut a = z.clone();
            if l == last {
                softmax_in_place(&mut a);
            } else {
                a.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            pre.push(z);
            acts.push(a);
        }
        (acts, pre)
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_width {
            return Err(Error::WidthMismatch {
                expected: self.input_width,
                actual: x.len(),
            });
        }
        let (mut acts, _) = self.forward_cached(x);
        Ok(acts.pop().expect("at least one layer"))
    }

    pub fn predict(&self, x: &[f64]) -> Result<ConceptId> {
        let p = self.predict_proba(x)?;
        Ok(self.targets[argmax_lowest(&p)])
    }

    /// Mean cross-entropy over the batch; `classes` index into `targets`.
    pub fn loss(&self, inputs: &Matrix, classes: &[usize]) -> f64 {
        let total: f64 = inputs
            .iter_rows()
            .zip(classes)
            .map(|(x, &c)| {
                let (acts, _) = self.forward_cached(x);
                -libm::log(acts.last().expect("output")[c].max(1e-300))
            })
            .sum();
        total / classes.len() as f64
    }

    /// Mean cross-entropy and its exact gradient by backpropagation.
    pub fn loss_and_gradient(&self, inputs: &Matrix, classes: &[usize]) -> (f64, Gradients) {
        let mut grads: Gradients = self
            .layers
            .iter()
            .map(|l| DenseLayer::zeros(l.weights.rows(), l.weights.cols()))
            .collect();
        let inv = 1.0 / classes.len() as f64;
        let mut loss = 0.0;
        for (x, &c) in inputs.iter_rows().zip(classes) {
            let (acts, pre) = self.forward_cached(x);
            let probs = acts.last().expect("output");
            loss -= libm::log(probs[c].max(1e-300));
            let mut delta: Vec<f64> = probs.iter().map(|p| p * inv).collect();
            delta[c] -= inv;
            for l in (0..self.layers.len()).rev() {
                let input = &acts[l];
                let g = &mut grads[l];
                for (k, &a) in input.iter().enumerate() {
                    if a != 0.0 {
                        for (gw, d) in g.weights.row_mut(k).iter_mut().zip(&delta) {
                            *gw += a * d;
                        }
                    }
                }
                for (gb, d) in g.bias.iter_mut().zip(&delta) {
                    *gb += d;
                }
                if l > 0 {
                    let w = &self.layers[l].weights;
                    delta = (0..w.rows())
                        .map(|k| {
                            if pre[l - 1][k] > 0.0 {
                                w.row(k).iter().zip(&delta).map(|(wk, d)| wk * d).sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        (loss * inv, grads)
    }

    /// Trains on `(inputs, targets)`. A single distinct target yields
    /// [`FeedForwardNet::constant`].
    pub fn fit(inputs: &Matrix, targets: &[ConceptId], params: &MlpParams) -> Result<Self> {
        let n = inputs.rows();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if n != targets.len() {
            return Err(Error::Dimension(format!("{n} rows but {} targets", targets.len())));
        }
        if params.batch_size == 0 || params.learning_rate <= 0.0 {
            return Err(Error::InvalidArgument("batch size and learning rate must be positive".into()));
        }
        if !inputs.is_finite() {
            return Err(Error::NonFinite("mlp training inputs"));
        }
        let mut classes_sorted = targets.to_vec();
        classes_sorted.sort_unstable();
        classes_sorted.dedup();
        if classes_sorted.len() == 1 {
            return Ok(Self::constant(classes_sorted[0], inputs.cols()));
        }
        let classes: Vec<usize> = targets
            .iter()
            .map(|t| classes_sorted.binary_search(t).expect("present"))
            .collect();
        let (mean, scale) = column_stats(inputs);
        let mut net = Self::init(
            inputs.cols(),
            classes_sorted,
            &params.hidden,
            mean,
            scale,
            params.seed,
        );
        let mut adam = Adam::new(&net, params.learning_rate);
        let mut rng = rng::seeded(rng::derive_seed(params.seed, 1));
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(params.batch_size) {
                let x = inputs.select_rows(batch);
                let y: Vec<usize> = batch.iter().map(|&i| classes[i]).collect();
                let (loss, grads) = net.loss_and_gradient(&x, &y);
                if !loss.is_finite() {
                    return Err(Error::Diverged);
                }
                adam.step(&mut net, &grads);
            }
        }
        if net.layers.iter().any(|l| l.params().any(|v| !v.is_finite())) {
            return Err(Error::Diverged);
        }
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidModel(format!("feed-forward net: {msg}")));
        if self.layers.is_empty() || self.targets.is_empty() {
            return bad("no layers or targets");
        }
        if self.mean.len() != self.input_width || self.scale.len() != self.input_width {
            return bad("standardization width");
        }
        if self.scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("non-positive scale");
        }
        let mut prev = self.input_width;
        for l in &self.layers {
            if l.weights.rows() != prev || l.bias.len() != l.weights.cols() {
                return bad("layer widths do not chain");
            }
            if l.params().any(|v| !v.is_finite()) {
                return bad("non-finite weight");
            }
            prev = l.bias.len();
        }
        if prev != self.targets.len() {
            return bad("output width differs from target count");
        }
        Ok(())
    }
}

/// Column means and standard deviations (population); zero spread maps to 1.
pub fn column_stats(inputs: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = inputs.rows().max(1) as f64;
    let cols = inputs.cols();
    let mut mean = vec![0.0; cols];
    for row in inputs.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; cols];
    for row in inputs.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = libm::sqrt(s / n);
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    fn new(net: &FeedForwardNet, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.params().count()]).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    fn step(&mut self, net: &mut FeedForwardNet, grads: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for (l, (layer, grad)) in net.layers.iter_mut().zip(grads).enumerate() {
            for (((p, g), m), v) in layer
                .params_mut()
                .zip(grad.params())
                .zip(self.m[l].iter_mut())
                .zip(self.v[l].iter_mut())
            {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn blobs(seed: u64, n: usize) -> (Matrix, Vec<ConceptId>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let center = if c == 0 { -2.0 } else { 2.0 };
            rows.push([
                center + rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                100.0 + rng.random_range(-5.0..5.0),
            ]);
            y.push(ConceptId(3 + 4 * c));
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn separable_blobs_are_learned() {
        let (x, y) = blobs(1, 400);
        let net = FeedForwardNet::fit(&x, &y, &MlpParams::default()).unwrap();
        net.validate().unwrap();
        let hits = x
            .iter_rows()
            .zip(&y)
            .filter(|(r, t)| net.predict(r).unwrap() == **t)
            .count();
        assert!(hits as f64 / 400.0 >= 0.99);
        assert_eq!(net.widths(), vec![3, 200, 50, 2]);
    }

    #[test]
    fn constant_targets_give_constant_net() {
        let (x, _) = blobs(2, 10);
        let y = vec![ConceptId(5); 10];
        let net = FeedForwardNet::fit(&x, &y, &MlpParams::default()).unwrap();
        assert_eq!(net.targets, vec![ConceptId(5)]);
        assert_eq!(net.loss(&x, &[0; 10]), 0.0);
        assert_eq!(net.predict(&[9.0, 9.0, 9.0]).unwrap(), ConceptId(5));
    }

    #[test]
    fn zero_weights_predict_lowest_target() {
        let mut net = FeedForwardNet::init(
            2,
            vec![ConceptId(1), ConceptId(4), ConceptId(6)],
            &[5],
            vec![0.0; 2],
            vec![1.0; 2],
            0,
        );
        for l in &mut net.layers {
            l.params_mut().for_each(|v| *v = 0.0);
        }
        let p = net.predict_proba(&[3.0, -1.0]).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(net.predict(&[3.0, -1.0]).unwrap(), ConceptId(1));
    }

    #[test]
    fn seeded_training_is_deterministic() {
        let (x, y) = blobs(3, 60);
        let params = MlpParams {
            epochs: 3,
            ..MlpParams::default()
        };
        assert_eq!(
            FeedForwardNet::fit(&x, &y, &params).unwrap(),
            FeedForwardNet::fit(&x, &y, &params).unwrap()
        );
    }

    #[test]
    fn width_mismatch() {
        let net = FeedForwardNet::constant(ConceptId(0), 3);
        assert_eq!(
            net.predict(&[1.0]),
            Err(Error::WidthMismatch { expected: 3, actual: 1 })
        );
    }
}
