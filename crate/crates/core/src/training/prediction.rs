use nalgebra::DMatrix;
use rand::seq::SliceRandom;

use super::{early_stop, Instance, Progress, Stage, StopDecision, TrainingConfig, Validator};
use crate::error::{Error, Result};
use crate::linalg::columns_to_matrix;
use crate::network::{Gradients, Network};
use crate::rng::Rng;

/// Margin keeping predictions away from ±1 inside the logarithms.
pub const PREDICTION_EPS: f64 = 1e-7;

/// Value and output-layer derivative of the weighted prediction loss.
#[derive(Debug, Clone)]
pub struct PredictionTerms {
    pub loss: f64,
    /// ∂L/∂ŷ, one column per sample.
    pub d_output: DMatrix<f64>,
}

impl PredictionTerms {
    /// L = −1/(2K|Γ|) Σ_k Σ_j [κ_k(1+y)ln(1+ŷ) + (1−κ_k)(1−y)ln(1−ŷ)], with
    /// κ_k the fraction of +1 targets of sample k. ŷ is clamped to
    /// [−1+ε, 1−ε]; clamped entries get zero derivative.
    pub fn evaluate(y_hat: &DMatrix<f64>, y: &DMatrix<f64>, swap_kappa: bool) -> Self {
        let (vocab, k) = y.shape();
        let norm = -1.0 / (2.0 * k as f64 * vocab as f64);
        let mut loss = 0.0;
        let mut d_output = DMatrix::zeros(vocab, k);
        for s in 0..k {
            let present = y.column(s).iter().filter(|&&v| v > 0.0).count() as f64 / vocab as f64;
            let kappa = if swap_kappa { 1.0 - present } else { present };
            for j in 0..vocab {
                let raw = y_hat[(j, s)];
                let p = raw.clamp(-1.0 + PREDICTION_EPS, 1.0 - PREDICTION_EPS);
                let t = y[(j, s)];
                let a = kappa * (1.0 + t);
                let b = (1.0 - kappa) * (1.0 - t);
                loss += a * (1.0 + p).ln() + b * (1.0 - p).ln();
                if p == raw {
                    d_output[(j, s)] = norm * (a / (1.0 + p) - b / (1.0 - p));
                }
            }
        }
        PredictionTerms {
            loss: norm * loss,
            d_output,
        }
    }
}

/// Prediction loss of a batch and its parameter gradients.
pub fn prediction_loss_grad(
    net: &Network,
    batch: &[&Instance],
    swap_kappa: bool,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.iter().any(|i| i.x.len() != net.input_dim()) {
        return Err(Error::InputDimensionMismatch);
    }
    if batch.iter().any(|i| i.y.len() != net.output_dim()) {
        return Err(Error::FeatureDimensionMismatch);
    }
    let x = columns_to_matrix(net.input_dim(), batch.iter().map(|i| i.x.as_slice()));
    let y = columns_to_matrix(net.output_dim(), batch.iter().map(|i| i.y.as_slice()));
    let acts = net.forward_batch(&x);
    let h = net.depth();
    let terms = PredictionTerms::evaluate(&acts[h], &y, swap_kappa);
    let mut upstream = vec![None; h + 1];
    upstream[h] = Some(terms.d_output);
    Ok((terms.loss, net.backward(&acts, &upstream)))
}

/// Mini-batch SGD on the prediction loss.
///
/// η decays by `decay_factor` every `decay_period` epochs. With a validator,
/// P@2 is evaluated every `eval_period` epochs and training stops by
/// [`early_stop`]. `on_progress` receives one record per epoch.
pub fn train_prediction(
    mut net: Network,
    instances: &[Instance],
    cfg: &TrainingConfig,
    validator: Option<&Validator>,
    rng: &mut Rng,
    mut on_progress: impl FnMut(&Progress),
) -> Result<Network> {
    cfg.validate()?;
    if instances.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut evaluations = Vec::new();
    for epoch in 1..=cfg.max_epochs {
        let eta = cfg.learning_rate_after((epoch - 1) / cfg.decay_period);
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Instance> = chunk.iter().map(|&i| &instances[i]).collect();
            let (loss, grads) = prediction_loss_grad(&net, &batch, cfg.swap_kappa)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::TrainingDiverged);
            }
            net.apply(&grads, eta);
            total += loss;
            batches += 1;
        }
        if !net.is_finite() {
            return Err(Error::TrainingDiverged);
        }
        let mut record = Progress {
            epoch,
            stage: Stage::Prediction,
            loss: total / batches as f64,
            eta,
            validation_p2: None,
        };
        let mut stop = false;
        if let Some(v) = validator {
            if epoch % cfg.eval_period == 0 {
                let p2 = v(&net);
                record.validation_p2 = Some(p2);
                evaluations.push(p2);
                stop = early_stop(&evaluations, cfg.stop_threshold) == StopDecision::Stop;
            }
        }
        on_progress(&record);
        if stop {
            break;
        }
    }
    Ok(net)
}
