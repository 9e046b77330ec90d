//! Feature channel gating: a squeeze-and-excitation style per-channel gate.
//!
//! ```text
//! g   = sigmoid(W2 · relu(W1 · gap(F)))      gap = spatial mean per channel
//! out = g[c] * F[c, :, :]
//! ```
//!
//! Bias-free, matching the two weight matrices of the gate definition.

use ndarray::{Array1, Array2, Array3, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FcgOutput {
    /// Gated features, same shape as the input.
    pub features: Array3<f64>,
    /// Per-channel gate, each strictly inside (0, 1) for finite inputs.
    pub gates: Array1<f64>,
    /// Global average pool of the input, one value per channel.
    pub pooled: Array1<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `features` is `C x H x W`, `w1` is `C_r x C`, `w2` is `C x C_r`.
pub fn fcg_forward(features: &Array3<f64>, w1: &Array2<f64>, w2: &Array2<f64>) -> Result<FcgOutput> {
    let (c, h, w) = features.dim();
    let (r1, c1) = w1.dim();
    let (r2, c2) = w2.dim();
    if c1 != c || r2 != c || c2 != r1 {
        return Err(Error::Shape(format!(
            "features {c}x{h}x{w}, W1 {r1}x{c1}, W2 {r2}x{c2}: need W1 Cr x C and W2 C x Cr"
        )));
    }
    if h == 0 || w == 0 {
        return Err(Error::Shape("feature map has no spatial extent".into()));
    }
    let pooled = features
        .mean_axis(Axis(2))
        .and_then(|m| m.mean_axis(Axis(1)))
        .expect("non-empty spatial axes");
    let hidden = w1.dot(&pooled).mapv(|v| v.max(0.0));
    let gates = w2.dot(&hidden).mapv(sigmoid);
    let mut out = features.clone();
    for (mut plane, &g) in out.outer_iter_mut().zip(gates.iter()) {
        plane *= g;
    }
    Ok(FcgOutput {
        features: out,
        gates,
        pooled,
    })
}

/// Default reduction width: a quarter of the channels, at least one.
pub fn default_reduction(channels: usize) -> usize {
    (channels / 4).max(1)
}
