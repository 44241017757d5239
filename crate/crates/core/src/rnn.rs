//! Forward-only stacked LSTM used to replay sequences and capture hidden
//! states.
//!
//! Weight layout per layer of width `u` fed by `d` inputs: `kernel` is
//! `d x 4u`, `recurrent` is `u x 4u`, `bias` has `4u` entries, and the four
//! gate blocks of `u` columns are ordered input, forget, cell, output
//! (`"ifco"`). Biases are used as stored. The sigmoid head maps the last
//! layer's `h_t` to a score through a `u_last x 1` kernel and one bias.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{Label, TracedSequence};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const GATE_ORDER: &str = "ifco";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub width: usize,
    pub kernel: Matrix,
    pub recurrent: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseHead {
    pub kernel: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LstmStackWeights {
    pub format_version: u32,
    pub input_width: usize,
    pub layers: Vec<LstmLayer>,
    pub head: DenseHead,
    pub gate_order: String,
}

impl LstmStackWeights {
    /// All-zero weights for the given widths.
    pub fn zeros(input_width: usize, widths: &[usize]) -> Self {
        let mut layers = Vec::with_capacity(widths.len());
        let mut prev = input_width;
        for &u in widths {
            layers.push(LstmLayer {
                width: u,
                kernel: Matrix::zeros(prev, 4 * u),
                recurrent: Matrix::zeros(u, 4 * u),
                bias: vec![0.0; 4 * u],
            });
            prev = u;
        }
        Self {
            format_version: crate::FORMAT_VERSION,
            input_width,
            layers,
            head: DenseHead {
                kernel: Matrix::zeros(prev, 1),
                bias: vec![0.0],
            },
            gate_order: GATE_ORDER.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let shape = |msg: String| Err(Error::Dimension(msg));
        if self.format_version != crate::FORMAT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported weights format_version {}",
                self.format_version
            )));
        }
        if self.gate_order != GATE_ORDER {
            return Err(Error::InvalidArgument(format!(
                "gate_order must be \"{GATE_ORDER}\", got \"{}\"",
                self.gate_order
            )));
        }
        if self.layers.is_empty() {
            return shape("no recurrent layers".into());
        }
        let mut prev = self.input_width;
        for (l, layer) in self.layers.iter().enumerate() {
            let gates = 4 * layer.width;
            if layer.width == 0 {
                return shape(format!("layer {l} has zero width"));
            }
            if layer.kernel.rows() != prev || layer.kernel.cols() != gates {
                return shape(format!(
                    "layer {l} kernel is {}x{}, expected {prev}x{gates}",
                    layer.kernel.rows(),
                    layer.kernel.cols()
                ));
            }
            if layer.recurrent.rows() != layer.width || layer.recurrent.cols() != gates {
                return shape(format!(
                    "layer {l} recurrent kernel is {}x{}, expected {}x{gates}",
                    layer.recurrent.rows(),
                    layer.recurrent.cols(),
                    layer.width
                ));
            }
            if layer.bias.len() != gates {
                return shape(format!("layer {l} bias has {} entries, expected {gates}", layer.bias.len()));
            }
            if !layer.kernel.is_finite() || !layer.recurrent.is_finite() || layer.bias.iter().any(|b| !b.is_finite()) {
                return Err(Error::NonFinite("lstm weights"));
            }
            prev = layer.width;
        }
        if self.head.kernel.rows() != prev || self.head.kernel.cols() != 1 {
            return shape(format!(
                "head kernel is {}x{}, expected {prev}x1",
                self.head.kernel.rows(),
                self.head.kernel.cols()
            ));
        }
        if self.head.bias.len() != 1 {
            return shape(format!("head bias has {} entries, expected 1", self.head.bias.len()));
        }
        Ok(())
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.width).collect()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForwardTraceConfig {
    /// Recurrent layer whose hidden state is recorded.
    pub capture_layer: usize,
    /// When false, every timestep carries the final-step prediction
    /// (whole-sequence tasks).
    pub emit_per_timestep_labels: bool,
    pub decision_threshold: f64,
}

impl ForwardTraceConfig {
    /// Captures the layer closest to the output.
    pub fn last_layer(weights: &LstmStackWeights) -> Self {
        Self {
            capture_layer: weights.layers.len().saturating_sub(1),
            emit_per_timestep_labels: true,
            decision_threshold: 0.5,
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

struct LayerState {
    h: Vec<f64>,
    c: Vec<f64>,
}

fn lstm_step(layer: &LstmLayer, input: &[f64], state: &mut LayerState, z: &mut [f64]) {
    let u = layer.width;
    z.copy_from_slice(&layer.bias);
    for (k, &x) in input.iter().enumerate() {
        if x != 0.0 {
            for (zj, w) in z.iter_mut().zip(layer.kernel.row(k)) {
                *zj += x * w;
            }
        }
    }
    for (k, &h) in state.h.iter().enumerate() {
        if h != 0.0 {
            for (zj, w) in z.iter_mut().zip(layer.recurrent.row(k)) {
                *zj += h * w;
            }
        }
    }
    for j in 0..u {
        let i = sigmoid(z[j]);
        let f = sigmoid(z[u + j]);
        let g = libm::tanh(z[2 * u + j]);
        let o = sigmoid(z[3 * u + j]);
        state.c[j] = f * state.c[j] + i * g;
        state.h[j] = o * libm::tanh(state.c[j]);
    }
}

/// Replays `inputs` (T x n) from zero initial states and records the
/// capture layer's `h_0..h_T`, the head's sigmoid scores and thresholded labels.
pub fn forward_trace(weights: &LstmStackWeights, inputs: &Matrix, cfg: &ForwardTraceConfig) -> Result<TracedSequence> {
    if cfg.capture_layer >= weights.layers.len() {
        return Err(Error::InvalidArgument(format!(
            "capture layer {} out of range for {} layers",
            cfg.capture_layer,
            weights.layers.len()
        )));
    }
    if inputs.cols() != weights.input_width {
        return Err(Error::WidthMismatch {
            expected: weights.input_width,
            actual: inputs.cols(),
        });
    }
    let t_len = inputs.rows();
    let captured_width = weights.layers[cfg.capture_layer].width;
    let mut hidden = Matrix::zeros(t_len + 1, captured_width);
    let mut scores = Vec::with_capacity(t_len);
    let mut states: Vec<LayerState> = weights
        .layers
        .iter()
        .map(|l| LayerState {
            h: vec![0.0; l.width],
            c: vec![0.0; l.width],
        })
        .collect();
    let mut scratch: Vec<Vec<f64>> = weights.layers.iter().map(|l| vec![0.0; 4 * l.width]).collect();

    for t in 0..t_len {
        for l in 0..weights.layers.len() {
            let (below, rest) = states.split_at_mut(l);
            let input = if l == 0 { inputs.row(t) } else { &below[l - 1].h[..] };
            lstm_step(&weights.layers[l], input, &mut rest[0], &mut scratch[l]);
        }
        let captured = &states[cfg.capture_layer].h;
        if captured.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("lstm activation"));
        }
        hidden.row_mut(t + 1).copy_from_slice(captured);
        let last = &states[weights.layers.len() - 1].h;
        let logit = weights.head.bias[0]
            + last
                .iter()
                .zip(weights.head.kernel.as_slice())
                .map(|(h, w)| h * w)
                .sum::<f64>();
        let score = sigmoid(logit);
        if !score.is_finite() {
            return Err(Error::NonFinite("head output"));
        }
        scores.push(score);
    }

    let pred_labels: Vec<Label> = if cfg.emit_per_timestep_labels {
        scores
            .iter()
            .map(|&s| Label::from_bool(s >= cfg.decision_threshold))
            .collect()
    } else {
        let last = scores.last().is_some_and(|&s| s >= cfg.decision_threshold);
        vec![Label::from_bool(last); t_len]
    };
    TracedSequence::new(inputs.clone(), hidden, pred_labels, Some(scores), None)
}

pub fn forward_trace_batch(
    weights: &LstmStackWeights,
    batch: &[Matrix],
    cfg: &ForwardTraceConfig,
) -> Result<Vec<TracedSequence>> {
    batch.iter().map(|x| forward_trace(weights, x, cfg)).collect()
}
