use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Layer, Network};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Sparse autoencoder settings for layer-wise pretraining.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    /// Weight α of the sparsity penalty Σ √(z² + ε).
    pub sparsity: f64,
    /// ε inside the sparsity penalty.
    pub smoothing: f64,
    /// Coefficient of ‖W₁‖² + ‖W₂‖².
    pub decay: f64,
    /// Accepted optimizer steps per layer.
    pub iterations: usize,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        AutoencoderConfig {
            sparsity: 2.0,
            smoothing: 1e-4,
            decay: 0.02,
            iterations: 200,
        }
    }
}

impl AutoencoderConfig {
    fn validate(&self) -> Result<()> {
        if self.smoothing.is_nan() || self.smoothing <= 0.0 {
            return Err(Error::InvalidSparsitySmoothing);
        }
        if !(self.sparsity >= 0.0 && self.decay >= 0.0) {
            return Err(Error::InvalidTrainingConfig(
                "autoencoder weights must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Sparse autoencoder loss over the columns of `x` and its gradients with
/// respect to (encoder, decoder):
///
/// L = Σ_k ‖x̃_k − x_k‖² + α Σ_k Σ_q √(z₁[q]² + ε) + decay (‖W₁‖² + ‖W₂‖²)
///
/// with z₁ = tanh(W₁x + b₁) and x̃ = tanh(W₂z₁ + b₂).
pub fn autoencoder_loss_grad(
    encoder: &Layer,
    decoder: &Layer,
    x: &DMatrix<f64>,
    cfg: &AutoencoderConfig,
) -> Result<(f64, Layer, Layer)> {
    cfg.validate()?;
    let z1 = encoder.activate(x);
    let xt = decoder.activate(&z1);
    let diff = &xt - x;
    let root = z1.map(|z| (z * z + cfg.smoothing).sqrt());
    let loss = diff.norm_squared()
        + cfg.sparsity * root.sum()
        + cfg.decay * (encoder.weights.norm_squared() + decoder.weights.norm_squared());

    let d_a2 = diff.zip_map(&xt, |d, v| 2.0 * d * (1.0 - v * v));
    let g_dec = Layer {
        weights: &d_a2 * z1.transpose() + &decoder.weights * (2.0 * cfg.decay),
        bias: d_a2.column_sum(),
    };
    let mut d_z1 = decoder.weights.transpose() * &d_a2;
    d_z1 += z1.zip_map(&root, |z, r| cfg.sparsity * z / r);
    let d_a1 = d_z1.zip_map(&z1, |g, z| g * (1.0 - z * z));
    let g_enc = Layer {
        weights: &d_a1 * x.transpose() + &encoder.weights * (2.0 * cfg.decay),
        bias: d_a1.column_sum(),
    };
    Ok((loss, g_enc, g_dec))
}

/// Result of fitting one autoencoder.
#[derive(Debug, Clone)]
pub struct AutoencoderFit {
    pub encoder: Layer,
    pub decoder: Layer,
    /// Loss at the start and after every accepted step.
    pub history: Vec<f64>,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Batch gradient descent with backtracking: a step is accepted only when it
/// satisfies the sufficient-decrease condition, so `history` never increases.
pub fn train_autoencoder(
    x: &DMatrix<f64>,
    hidden: usize,
    cfg: &AutoencoderConfig,
    rng: &mut Rng,
) -> Result<AutoencoderFit> {
    cfg.validate()?;
    if x.ncols() == 0 {
        return Err(Error::NoPretrainingData);
    }
    if hidden == 0 || x.nrows() == 0 {
        return Err(Error::InvalidLayerSize);
    }
    let d = x.nrows();
    let mut enc = Layer::glorot(d, hidden, rng);
    let mut dec = Layer::glorot(hidden, d, rng);
    let (mut loss, mut g_enc, mut g_dec) = autoencoder_loss_grad(&enc, &dec, x, cfg)?;
    let mut history = vec![loss];
    let mut step = 1.0 / (grad_norm_sq(&g_enc, &g_dec).sqrt() + 1e-12);
    for _ in 0..cfg.iterations {
        let gsq = grad_norm_sq(&g_enc, &g_dec);
        if gsq == 0.0 {
            break;
        }
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let e = shifted(&enc, &g_enc, step);
            let dd = shifted(&dec, &g_dec, step);
            let (l, ge, gd) = autoencoder_loss_grad(&e, &dd, x, cfg)?;
            if l.is_finite() && l <= loss - ARMIJO_C * step * gsq {
                accepted = Some((e, dd, l, ge, gd));
                break;
            }
            step *= 0.5;
        }
        let Some((e, dd, l, ge, gd)) = accepted else {
            break;
        };
        (enc, dec, loss, g_enc, g_dec) = (e, dd, l, ge, gd);
        history.push(loss);
        step *= 2.0;
    }
    Ok(AutoencoderFit {
        encoder: enc,
        decoder: dec,
        history,
    })
}

fn grad_norm_sq(a: &Layer, b: &Layer) -> f64 {
    a.weights.norm_squared()
        + a.bias.norm_squared()
        + b.weights.norm_squared()
        + b.bias.norm_squared()
}

fn shifted(l: &Layer, g: &Layer, step: f64) -> Layer {
    Layer {
        weights: &l.weights - &g.weights * step,
        bias: &l.bias - &g.bias * step,
    }
}

/// Greedy layer-wise pretraining of `sizes = [input, n_1, …, n_{H−1}, out]`.
/// Each hidden layer is the encoder of an autoencoder trained on the previous
/// layer's outputs; decoders are discarded and the output layer is freshly
/// initialized. Returns the network and each autoencoder's loss history.
pub fn pretrain_layerwise(
    x: &DMatrix<f64>,
    sizes: &[usize],
    cfg: &AutoencoderConfig,
    rng: &mut Rng,
) -> Result<(Network, Vec<Vec<f64>>)> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::InvalidLayerSize);
    }
    if x.ncols() == 0 {
        return Err(Error::NoPretrainingData);
    }
    if x.nrows() != sizes[0] {
        return Err(Error::InputDimensionMismatch);
    }
    let mut layers = Vec::with_capacity(sizes.len() - 1);
    let mut histories = Vec::new();
    let mut z = x.clone();
    for &hidden in &sizes[1..sizes.len() - 1] {
        let fit = train_autoencoder(&z, hidden, cfg, rng)?;
        z = fit.encoder.activate(&z);
        layers.push(fit.encoder);
        histories.push(fit.history);
    }
    let n = sizes.len();
    layers.push(Layer::glorot(sizes[n - 2], sizes[n - 1], rng));
    Ok((Network::from_layers(layers)?, histories))
}
