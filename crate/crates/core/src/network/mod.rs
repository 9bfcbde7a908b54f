//! Feed-forward tanh network with manual backpropagation.
//!
//! Activations are handled column-wise: a batch is a matrix whose columns are
//! samples. `z_0` is the input, `z_H` the prediction, and `z_{H-1}` the
//! concept embedding.

mod autoencoder;

pub use autoencoder::{
    autoencoder_loss_grad, pretrain_layerwise, train_autoencoder, AutoencoderConfig, AutoencoderFit,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// One affine map followed by tanh: `z_h = tanh(W_h z_{h-1} + b_h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "LayerData", try_from = "LayerData")]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            weights: DMatrix::zeros(outputs, inputs),
            bias: DVector::zeros(outputs),
        }
    }

    /// Uniform in ±√(6/(fan_in + fan_out)), zero bias.
    pub fn glorot(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let r = (6.0 / (inputs + outputs) as f64).sqrt();
        Layer {
            weights: DMatrix::from_fn(outputs, inputs, |_, _| rng.gen_range(-r..=r)),
            bias: DVector::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    /// tanh(W Z + b 1ᵀ) for a batch of columns.
    pub fn activate(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = &self.weights * z;
        for mut col in a.column_iter_mut() {
            col += &self.bias;
        }
        a.map(f64::tanh)
    }

    fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.bias.iter())
            .all(|v| v.is_finite())
    }
}

#[derive(Serialize, Deserialize)]
struct LayerData {
    rows: usize,
    cols: usize,
    /// Row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl From<Layer> for LayerData {
    fn from(l: Layer) -> Self {
        LayerData {
            rows: l.weights.nrows(),
            cols: l.weights.ncols(),
            weights: l.weights.transpose().as_slice().to_vec(),
            bias: l.bias.as_slice().to_vec(),
        }
    }
}

impl TryFrom<LayerData> for Layer {
    type Error = String;

    fn try_from(d: LayerData) -> std::result::Result<Self, String> {
        if d.weights.len() != d.rows * d.cols || d.bias.len() != d.rows {
            return Err("layer shape does not match its data".into());
        }
        Ok(Layer {
            weights: DMatrix::from_row_slice(d.rows, d.cols, &d.weights),
            bias: DVector::from_vec(d.bias),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Network {
    layers: Vec<Layer>,
}

/// Per-layer parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Network {
    /// `sizes = [input, n_1, …, n_H]`, Glorot-initialized.
    pub fn init(sizes: &[usize], rng: &mut Rng) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidLayerSize);
        }
        Ok(Network {
            layers: sizes
                .windows(2)
                .map(|w| Layer::glorot(w[0], w[1], rng))
                .collect(),
        })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() || layers.iter().any(|l| l.inputs() == 0 || l.outputs() == 0) {
            return Err(Error::InvalidLayerSize);
        }
        for (l, next) in layers.iter().zip(&layers[1..]) {
            if l.outputs() != next.inputs() {
                return Err(Error::InvalidLayerSize);
            }
        }
        if layers.iter().any(|l| l.bias.len() != l.outputs()) {
            return Err(Error::InvalidLayerSize);
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    /// Number of weight layers H.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::outputs))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    /// Width of layer H−1 (the input width for a single-layer network).
    pub fn ce_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].inputs()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Layer::is_finite)
    }

    /// Activation trace z_0 … z_H of one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.input_dim() {
            return Err(Error::InputDimensionMismatch);
        }
        let acts = self.forward_batch(&DMatrix::from_column_slice(x.len(), 1, x));
        Ok(acts.into_iter().map(|m| m.as_slice().to_vec()).collect())
    }

    /// z_{H−1} of one input.
    pub fn concept_embedding(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward(x)?;
        trace.pop();
        Ok(trace.pop().unwrap_or_default())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.pop().unwrap_or_default())
    }

    /// Activation traces for a batch whose columns are samples.
    pub fn forward_batch(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        assert_eq!(x.nrows(), self.input_dim(), "input dimension mismatch");
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for layer in &self.layers {
            let next = layer.activate(acts.last().expect("nonempty"));
            acts.push(next);
        }
        acts
    }

    /// Concept embeddings of a batch (columns in, columns out).
    pub fn embed_batch(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.input_dim(), "input dimension mismatch");
        let mut z = x.clone();
        for layer in &self.layers[..self.layers.len() - 1] {
            z = layer.activate(&z);
        }
        z
    }

    /// Backpropagates loss derivatives injected at layer outputs.
    ///
    /// `upstream[h]` holds ∂L/∂z_h for the batch (same shape as `acts[h]`),
    /// for h in 1..=H; index 0 is ignored. Layers above the highest injection
    /// receive exactly zero gradient.
    pub fn backward(&self, acts: &[DMatrix<f64>], upstream: &[Option<DMatrix<f64>>]) -> Gradients {
        let h_max = self.layers.len();
        assert_eq!(acts.len(), h_max + 1);
        assert_eq!(upstream.len(), h_max + 1);
        let mut grads = self.zero_gradients();
        let mut carry: Option<DMatrix<f64>> = None;
        for h in (1..=h_max).rev() {
            let dz = match (carry.take(), &upstream[h]) {
                (None, None) => continue,
                (Some(c), None) => c,
                (None, Some(u)) => u.clone(),
                (Some(c), Some(u)) => c + u,
            };
            let z = &acts[h];
            let da = dz.zip_map(z, |g, zv| g * (1.0 - zv * zv));
            let layer = &self.layers[h - 1];
            grads.layers[h - 1].weights = &da * acts[h - 1].transpose();
            grads.layers[h - 1].bias = da.column_sum();
            if h > 1 {
                carry = Some(layer.weights.transpose() * &da);
            }
        }
        grads
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs(), l.outputs()))
                .collect(),
        }
    }

    /// θ ← θ − η g.
    pub fn apply(&mut self, grads: &Gradients, eta: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            l.weights.zip_apply(&g.weights, |w, gw| *w -= eta * gw);
            l.bias.zip_apply(&g.bias, |b, gb| *b -= eta * gb);
        }
    }

    /// Every parameter in a fixed order (layer by layer, weights column-major,
    /// then bias).
    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn param_mut(&mut self, index: usize) -> &mut f64 {
        let mut i = index;
        for l in &mut self.layers {
            let nw = l.weights.len();
            if i < nw {
                return &mut l.weights.as_mut_slice()[i];
            }
            i -= nw;
            if i < l.bias.len() {
                return &mut l.bias.as_mut_slice()[i];
            }
            i -= l.bias.len();
        }
        panic!("parameter index {index} out of range");
    }
}

impl Gradients {
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights += &b.weights;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weights *= s;
            l.bias *= s;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.flat().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Layer::is_finite)
    }

    /// Same ordering as [`Network::params`].
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn init_shapes_and_bounds() {
        let net = Network::init(&[5, 3], &mut seeded(1)).unwrap();
        let l = &net.layers()[0];
        assert_eq!((l.weights.nrows(), l.weights.ncols()), (3, 5));
        assert_eq!(l.bias, DVector::zeros(3));
        let r = (6.0f64 / 8.0).sqrt();
        assert!(l.weights.iter().all(|w| w.abs() <= r));
        assert_eq!(net, Network::init(&[5, 3], &mut seeded(1)).unwrap());
    }

    #[test]
    fn default_structure_has_ten_dim_embedding() {
        let net = Network::init(&[40, 100, 100, 10, 30], &mut seeded(0)).unwrap();
        assert_eq!(net.ce_dim(), 10);
        assert_eq!(net.concept_embedding(&vec![0.1; 40]).unwrap().len(), 10);
        assert_eq!(net.layer_sizes(), vec![40, 100, 100, 10, 30]);
    }

    #[test]
    fn init_errors() {
        assert_eq!(
            Network::init(&[5], &mut seeded(0)),
            Err(Error::InvalidLayerSize)
        );
        assert_eq!(
            Network::init(&[5, 0, 2], &mut seeded(0)),
            Err(Error::InvalidLayerSize)
        );
    }

    #[test]
    fn zero_network_is_a_fixed_point() {
        let net = Network::from_layers(vec![Layer::zeros(3, 2), Layer::zeros(2, 4)]).unwrap();
        let trace = net.forward(&[0.3, -0.7, 0.9]).unwrap();
        for z in &trace[1..] {
            assert!(z.iter().all(|&v| v == 0.0));
        }
        assert_eq!(net.predict(&[0.3, -0.7, 0.9]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn scalar_forward() {
        let mut l = Layer::zeros(1, 1);
        l.weights[(0, 0)] = 1.0;
        let net = Network::from_layers(vec![l]).unwrap();
        let y = net.predict(&[0.5]).unwrap()[0];
        assert!((y - 0.5f64.tanh()).abs() < 1e-15);
        assert!((y - 0.4621).abs() < 1e-4);
        assert_eq!(net.predict(&[0.5, 1.0]), Err(Error::InputDimensionMismatch));
    }

    #[test]
    fn batch_matches_single() {
        let net = Network::init(&[3, 4, 2], &mut seeded(2)).unwrap();
        let x = DMatrix::from_column_slice(3, 2, &[0.1, 0.2, 0.3, -0.5, 0.4, 0.0]);
        let acts = net.forward_batch(&x);
        let single = net.forward(&[-0.5, 0.4, 0.0]).unwrap();
        assert_eq!(acts[2].column(1).as_slice(), single[2].as_slice());
    }

    #[test]
    fn serde_round_trip() {
        let net = Network::init(&[3, 4, 2], &mut seeded(3)).unwrap();
        let json = serde_json::to_string(&net).unwrap();
        let back: Network = serde_json::from_str(&json).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn param_indexing_matches_flat_order() {
        let mut net = Network::init(&[2, 3, 1], &mut seeded(4)).unwrap();
        let p = net.params();
        for (i, v) in p.iter().enumerate() {
            assert_eq!(*net.param_mut(i), *v);
        }
    }
}
