//! Two-stage training: document prediction, then Siamese distance learning.

mod prediction;
mod siamese;

pub use prediction::{prediction_loss_grad, train_prediction, PredictionTerms};
pub use siamese::{
    make_pairs, siamese_distance_grad, siamese_loss_grad, train_siamese, Pair, PairKind,
    SiameseGrad, SiameseTrainer,
};

use serde::{Deserialize, Serialize};

use crate::corpus::{bow, bow_complement, to_targets, Document, NegativePair};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

/// One training example: a term in (or coupled with) a document.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub term_id: usize,
    pub doc_id: usize,
    /// Term input features followed by the document's topic distribution.
    pub x: Vec<f64>,
    /// ±1 targets over the vocabulary.
    pub y: Vec<f64>,
    pub polarity: Polarity,
    /// Local context l(δ), kept for pair distances.
    pub context: Vec<f64>,
}

/// Concatenates a term's input features with a local context.
pub fn input_vector(term_input: &[f64], context: &[f64]) -> Vec<f64> {
    term_input.iter().chain(context).copied().collect()
}

/// Positive instances for every (document, member term) and negative ones for
/// the supplied negative pairs. `term_inputs[τ]` is the pipeline-transformed
/// t(τ); `contexts[d]` is l(δ_d).
pub fn build_instances(
    docs: &[Document],
    contexts: &[Vec<f64>],
    term_inputs: &[Vec<f64>],
    negatives: &[NegativePair],
) -> Result<Vec<Instance>> {
    if docs.len() != contexts.len() {
        return Err(Error::TopicDimensionMismatch);
    }
    let vocab = term_inputs.len();
    let mut out = Vec::new();
    for (d, doc) in docs.iter().enumerate() {
        let y = to_targets(&bow(doc, vocab));
        for &t in doc.term_ids() {
            out.push(Instance {
                term_id: t,
                doc_id: d,
                x: input_vector(&term_inputs[t], &contexts[d]),
                y: y.clone(),
                polarity: Polarity::Positive,
                context: contexts[d].clone(),
            });
        }
    }
    for n in negatives {
        let doc = docs.get(n.doc_id).ok_or_else(|| {
            Error::InvalidDocument(format!("negative references document {}", n.doc_id))
        })?;
        if doc.contains(n.term_id) {
            return Err(Error::InvalidDocument(
                "negative term inside its document".into(),
            ));
        }
        out.push(Instance {
            term_id: n.term_id,
            doc_id: n.doc_id,
            x: input_vector(&term_inputs[n.term_id], &contexts[n.doc_id]),
            y: to_targets(&bow_complement(&bow(doc, vocab))),
            polarity: Polarity::Negative,
            context: contexts[n.doc_id].clone(),
        });
    }
    Ok(out)
}

/// Hyperparameters of one SGD stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub decay_factor: f64,
    /// Epochs (prediction stage) or mini-batches (Siamese stage) between decays.
    pub decay_period: usize,
    pub batch_size: usize,
    /// Weight α of the Siamese loss.
    pub alpha: f64,
    /// Distance scale β; `None` means √(CE dimension).
    pub beta: Option<f64>,
    /// Importance ρ of negative–negative pairs.
    pub rho: f64,
    /// Context sensitivity λ in 𝔻 = exp(−λ𝕕/2).
    pub lambda: f64,
    /// Epochs between validation evaluations.
    pub eval_period: usize,
    /// Minimum relative P@2 improvement between evaluations.
    pub stop_threshold: f64,
    pub max_epochs: usize,
    /// Swap the κ weights of present and absent terms in the prediction loss.
    pub swap_kappa: bool,
    /// Pairs per single-polarity kind; `None` uses half the smaller class.
    pub pair_budget: Option<usize>,
}

impl TrainingConfig {
    pub fn prediction() -> Self {
        TrainingConfig {
            learning_rate: 1e-4,
            decay_factor: 0.95,
            decay_period: 10,
            batch_size: 32,
            alpha: 2000.0,
            beta: None,
            rho: 0.5,
            lambda: 1.0,
            eval_period: 200,
            stop_threshold: 0.005,
            max_epochs: 2000,
            swap_kappa: false,
            pair_budget: None,
        }
    }

    pub fn siamese() -> Self {
        TrainingConfig {
            max_epochs: 400,
            ..Self::prediction()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidTrainingConfig(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad("decay factor must lie in (0, 1]");
        }
        if self.decay_period == 0 || self.batch_size == 0 || self.eval_period == 0 {
            return bad("periods and batch size must be positive");
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad("rho must lie in (0, 1]");
        }
        if self.beta.is_some_and(|b| b.is_nan() || b <= 0.0) {
            return bad("beta must be positive");
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return bad("lambda must be positive");
        }
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return bad("alpha must be nonnegative");
        }
        if self.stop_threshold.is_nan() || self.stop_threshold < 0.0 {
            return bad("stop threshold must be nonnegative");
        }
        Ok(())
    }

    /// η after `periods` completed decay periods.
    pub fn learning_rate_after(&self, periods: usize) -> f64 {
        self.learning_rate * self.decay_factor.powi(periods as i32)
    }

    pub fn beta_for(&self, ce_dim: usize) -> f64 {
        self.beta.unwrap_or((ce_dim as f64).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Prediction,
    Siamese,
}

/// One line of training progress.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub epoch: usize,
    pub stage: Stage,
    pub loss: f64,
    pub eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_p2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Stops once the relative change between the last two evaluations falls
/// below `threshold`; a single evaluation always continues.
pub fn early_stop(history: &[f64], threshold: f64) -> StopDecision {
    let [.., prev, last] = history else {
        return StopDecision::Continue;
    };
    let improvement = if *prev > 0.0 {
        (last - prev) / prev
    } else if *last > *prev {
        f64::INFINITY
    } else {
        0.0
    };
    if improvement < threshold {
        StopDecision::Stop
    } else {
        StopDecision::Continue
    }
}

/// Scores a network on held-out data (validation P@2).
pub type Validator<'a> = dyn Fn(&crate::network::Network) -> f64 + Sync + 'a;
