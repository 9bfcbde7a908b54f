//! Pipeline configuration: a flat `key = value` file plus overrides.
//!
//! Training keys are prefixed with their stage (`prediction.learning_rate`,
//! `siamese.alpha`, …) and mirror [`TrainingConfig`] field names.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::AutoencoderConfig;
use crate::topics::Inference;
use crate::training::TrainingConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Validation documents drawn from the holdout; `None` uses |Δ|/10.
    pub validation_docs: Option<usize>,
    pub topics: usize,
    pub lda_iterations: usize,
    pub lda_alpha: f64,
    pub lda_beta: f64,
    pub lda_inference: Inference,
    /// Hidden widths n_1 … n_{H−1}; the last one is the CE dimension.
    pub hidden: Vec<usize>,
    pub autoencoder: AutoencoderConfig,
    /// Cap on the number of instances used for pretraining.
    pub pretrain_samples: usize,
    pub prediction: TrainingConfig,
    pub siamese: TrainingConfig,
    /// PCA baseline dimension; `None` uses min(35, |Γ|).
    pub pca_dim: Option<usize>,
    pub lsa_pov: f64,
    pub lsa_unscaled: bool,
    /// Cut-offs reported per query.
    pub eval_ks: Vec<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            validation_docs: None,
            topics: 25,
            lda_iterations: 200,
            lda_alpha: 0.1,
            lda_beta: 0.01,
            lda_inference: Inference::default(),
            hidden: vec![100, 100, 10],
            autoencoder: AutoencoderConfig::default(),
            pretrain_samples: 5000,
            prediction: TrainingConfig::prediction(),
            siamese: TrainingConfig::siamese(),
            pca_dim: None,
            lsa_pov: 0.9,
            lsa_unscaled: false,
            eval_ks: vec![1, 2, 5, 10],
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value {value:?} for {key}")))
}

fn parse_optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" || value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn set_training(cfg: &mut TrainingConfig, field: &str, key: &str, value: &str) -> Result<()> {
    match field {
        "learning_rate" => cfg.learning_rate = parse(key, value)?,
        "decay_factor" => cfg.decay_factor = parse(key, value)?,
        "decay_period" => cfg.decay_period = parse(key, value)?,
        "batch_size" => cfg.batch_size = parse(key, value)?,
        "alpha" => cfg.alpha = parse(key, value)?,
        "beta" => cfg.beta = parse_optional(key, value)?,
        "rho" => cfg.rho = parse(key, value)?,
        "lambda" => cfg.lambda = parse(key, value)?,
        "eval_period" => cfg.eval_period = parse(key, value)?,
        "stop_threshold" => cfg.stop_threshold = parse(key, value)?,
        "max_epochs" => cfg.max_epochs = parse(key, value)?,
        "swap_kappa" => cfg.swap_kappa = parse(key, value)?,
        "pair_budget" => cfg.pair_budget = parse_optional(key, value)?,
        _ => return Err(Error::InvalidConfig(format!("unknown key {key}"))),
    }
    Ok(())
}

impl Config {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (key, value) = (key.trim(), value.trim());
        if let Some(field) = key.strip_prefix("prediction.") {
            return set_training(&mut self.prediction, field, key, value);
        }
        if let Some(field) = key.strip_prefix("siamese.") {
            return set_training(&mut self.siamese, field, key, value);
        }
        match key {
            "validation_docs" => self.validation_docs = parse_optional(key, value)?,
            "topics" => self.topics = parse(key, value)?,
            "lda_iterations" => self.lda_iterations = parse(key, value)?,
            "lda_alpha" => self.lda_alpha = parse(key, value)?,
            "lda_beta" => self.lda_beta = parse(key, value)?,
            "lda_inference" => {
                self.lda_inference = match value {
                    "fold_in" | "fold-in" => Inference::default(),
                    "posterior" => Inference::Posterior,
                    _ => return Err(Error::InvalidConfig(format!("unknown inference {value:?}"))),
                }
            }
            "hidden" => self.hidden = parse_list(key, value)?,
            "autoencoder.sparsity" => self.autoencoder.sparsity = parse(key, value)?,
            "autoencoder.smoothing" => self.autoencoder.smoothing = parse(key, value)?,
            "autoencoder.decay" => self.autoencoder.decay = parse(key, value)?,
            "autoencoder.iterations" => self.autoencoder.iterations = parse(key, value)?,
            "pretrain_samples" => self.pretrain_samples = parse(key, value)?,
            "pca_dim" => self.pca_dim = parse_optional(key, value)?,
            "lsa_pov" => self.lsa_pov = parse(key, value)?,
            "lsa_unscaled" => self.lsa_unscaled = parse(key, value)?,
            "eval_ks" => self.eval_ks = parse_list(key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key {key}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", n + 1))
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Config::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::InvalidLayerSize);
        }
        if self.topics == 0 || self.lda_iterations == 0 {
            return Err(Error::InvalidConfig(
                "topics and lda_iterations must be positive".into(),
            ));
        }
        if self.pretrain_samples == 0 {
            return Err(Error::InvalidConfig(
                "pretrain_samples must be positive".into(),
            ));
        }
        if self.eval_ks.contains(&0) {
            return Err(Error::InvalidK);
        }
        self.prediction.validate()?;
        self.siamese.validate()
    }
}
