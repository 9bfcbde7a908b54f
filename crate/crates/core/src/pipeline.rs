//! Pipeline stages over a [`ModelBundle`]: ingest, topic model, pretraining,
//! prediction training, Siamese training, and evaluation models.
//!
//! Every stage draws its randomness from a stream derived from the bundle
//! seed and the stage, so re-running a stage reproduces it exactly.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::baselines::{lsa_train, pca_baseline_train, LdaKlModel};
use crate::bundle::{Baselines, ModelBundle, Networks, FORMAT_VERSION};
use crate::config::Config;
use crate::corpus::{
    split_corpus, synthesize_negatives, Corpus, Document, FeaturePipeline, TermFeatures,
    UsageMatrix,
};
use crate::embed::ConceptModel;
use crate::error::{Error, Result};
use crate::linalg::columns_to_matrix;
use crate::network::{pretrain_layerwise, Network};
use crate::priming::{mean_p_at_2, queries, PrimingModel, Protocol, Query, RandomModel};
use crate::rng::{self, Rng};
use crate::topics::{train_lda, LdaConfig, LdaModel};
use crate::training::{
    build_instances, make_pairs, train_prediction, train_siamese, Instance, Progress,
};

/// Default PCA baseline dimension.
pub const DEFAULT_PCA_DIM: usize = 35;

mod stream {
    pub const SPLIT: u64 = 1;
    pub const LDA: u64 = 2;
    pub const NEGATIVES: u64 = 3;
    pub const PRETRAIN: u64 = 4;
    pub const PREDICTION: u64 = 5;
    pub const PAIRS: u64 = 6;
    pub const SIAMESE: u64 = 7;
}

/// Which trained network to embed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkStage {
    Pretrained,
    Prediction,
    Siamese,
}

/// Ranking models available for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SiameseCe,
    Ce,
    Pca,
    Lsa,
    LdaKl,
    Random,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "siamese-ce" => ModelKind::SiameseCe,
            "ce" => ModelKind::Ce,
            "pca" => ModelKind::Pca,
            "lsa" => ModelKind::Lsa,
            "lda-kl" => ModelKind::LdaKl,
            "random" => ModelKind::Random,
            _ => return Err(Error::InvalidConfig(format!("unknown model {s:?}"))),
        })
    }
}

fn stage_rng(seed: u64, stream: u64) -> Rng {
    rng::seeded(rng::derive(seed, stream))
}

impl ModelBundle {
    /// Splits the corpus, fits the feature pipeline on the training
    /// documents, and trains the PCA and LSA baselines.
    pub fn ingest(corpus: &Corpus, config: Config, seed: u64) -> Result<Self> {
        config.validate()?;
        let n = corpus.len();
        let validation = config.validation_docs.unwrap_or(n / 10).min(n / 3);
        let split = split_corpus(corpus, validation, &mut stage_rng(seed, stream::SPLIT))?;
        let train: Vec<Document> = corpus.select(&split.train);
        let vocab = corpus.vocab_size();
        let usage = UsageMatrix::from_documents(&train, vocab)?;
        let features = TermFeatures::from_usage(&usage);
        let pipeline = FeaturePipeline::fit(&features.rows())?;
        let pca_dim = config.pca_dim.unwrap_or(DEFAULT_PCA_DIM.min(vocab));
        let pca = pca_baseline_train(&features, pca_dim)?;
        let lsa = match lsa_train(&usage, config.lsa_pov, config.lsa_unscaled) {
            Ok(fit) => Some(fit.table),
            Err(Error::ZeroMatrix) => None,
            Err(e) => return Err(e),
        };
        let bundle = ModelBundle {
            version: FORMAT_VERSION.to_string(),
            seed,
            config,
            vocabulary: corpus.vocabulary.clone(),
            documents: corpus.documents.clone(),
            split,
            pipeline,
            lda: None,
            networks: Networks::default(),
            baselines: Baselines {
                pca: Some(pca),
                lsa,
            },
        };
        bundle.check()?;
        Ok(bundle)
    }

    fn select(&self, indices: &[usize]) -> Vec<Document> {
        indices.iter().map(|&i| self.documents[i].clone()).collect()
    }

    pub fn train_docs(&self) -> Vec<Document> {
        self.select(&self.split.train)
    }

    pub fn validation_docs(&self) -> Vec<Document> {
        self.select(&self.split.validation)
    }

    pub fn test_docs(&self) -> Vec<Document> {
        self.select(&self.split.test)
    }

    /// pipeline(t(τ)) for every vocabulary term, from the training documents.
    pub fn term_inputs(&self) -> Result<Vec<Vec<f64>>> {
        let usage = UsageMatrix::from_documents(&self.train_docs(), self.vocabulary.len())?;
        self.pipeline
            .apply_all(&TermFeatures::from_usage(&usage).rows())
    }

    pub fn lda(&self) -> Result<&LdaModel> {
        self.lda.as_ref().ok_or(Error::StagePrerequisiteMissing)
    }

    pub fn network(&self, stage: NetworkStage) -> Result<&Network> {
        match stage {
            NetworkStage::Pretrained => self.networks.pretrained.as_ref(),
            NetworkStage::Prediction => self.networks.prediction.as_ref(),
            NetworkStage::Siamese => self.networks.siamese.as_ref(),
        }
        .ok_or(Error::StagePrerequisiteMissing)
    }

    /// Fits the topic model on the training documents; later stages are
    /// discarded because their inputs change.
    pub fn fit_lda(&mut self) -> Result<()> {
        let cfg = LdaConfig {
            topics: self.config.topics,
            iterations: self.config.lda_iterations,
            alpha: self.config.lda_alpha,
            beta: self.config.lda_beta,
            inference: self.config.lda_inference,
        };
        let lda = train_lda(
            &self.train_docs(),
            self.vocabulary.len(),
            &cfg,
            rng::derive(self.seed, stream::LDA),
        )?;
        self.lda = Some(lda);
        self.networks = Networks::default();
        Ok(())
    }

    /// Positive and synthesized negative instances of the training documents.
    pub fn instances(&self, term_inputs: &[Vec<f64>]) -> Result<Vec<Instance>> {
        let lda = self.lda()?;
        let train = self.train_docs();
        let contexts = lda.infer_all(&train)?;
        let negatives = synthesize_negatives(
            &train,
            self.vocabulary.len(),
            &mut stage_rng(self.seed, stream::NEGATIVES),
        )?;
        build_instances(&train, &contexts, term_inputs, &negatives)
    }

    /// Network sizes [input, hidden…, |Γ|].
    pub fn layer_sizes(&self) -> Result<Vec<usize>> {
        let input = self.pipeline.dim() + self.lda()?.topics();
        Ok(std::iter::once(input)
            .chain(self.config.hidden.iter().copied())
            .chain(std::iter::once(self.vocabulary.len()))
            .collect())
    }

    /// Greedy layer-wise pretraining on (a sample of) the training instance
    /// inputs. Returns each autoencoder's loss history.
    pub fn pretrain(&mut self) -> Result<Vec<Vec<f64>>> {
        let sizes = self.layer_sizes()?;
        let inputs = self.term_inputs()?;
        let instances = self.instances(&inputs)?;
        let mut rng = stage_rng(self.seed, stream::PRETRAIN);
        let chosen: Vec<&Instance> = if instances.len() > self.config.pretrain_samples {
            let mut idx: Vec<usize> = (0..instances.len()).collect();
            idx.shuffle(&mut rng);
            idx.truncate(self.config.pretrain_samples);
            idx.sort_unstable();
            idx.into_iter().map(|i| &instances[i]).collect()
        } else {
            instances.iter().collect()
        };
        let x: DMatrix<f64> = columns_to_matrix(sizes[0], chosen.iter().map(|i| i.x.as_slice()));
        let (net, histories) = pretrain_layerwise(&x, &sizes, &self.config.autoencoder, &mut rng)?;
        self.networks = Networks {
            pretrained: Some(net),
            ..Networks::default()
        };
        Ok(histories)
    }

    fn validation_queries(&self) -> Vec<Query> {
        queries(&self.validation_docs(), Protocol::Priming)
    }

    /// Stage 1: fine-tunes the pretrained network on the prediction loss.
    pub fn train_prediction(&mut self, on_progress: impl FnMut(&Progress)) -> Result<()> {
        let start = self.network(NetworkStage::Pretrained)?.clone();
        let inputs = self.term_inputs()?;
        let instances = self.instances(&inputs)?;
        let lda = self.lda()?;
        let vq = self.validation_queries();
        let validator = |net: &Network| validation_p2(&inputs, lda, net, &vq);
        let net = train_prediction(
            start,
            &instances,
            &self.config.prediction,
            (!vq.is_empty()).then_some(&validator as _),
            &mut stage_rng(self.seed, stream::PREDICTION),
            on_progress,
        )?;
        self.networks.prediction = Some(net);
        self.networks.siamese = None;
        Ok(())
    }

    /// Stage 2: Siamese training starting from the stage-1 network.
    pub fn train_siamese(&mut self, on_progress: impl FnMut(&Progress)) -> Result<()> {
        let start = self.network(NetworkStage::Prediction)?.clone();
        let inputs = self.term_inputs()?;
        let instances = self.instances(&inputs)?;
        let cfg = &self.config.siamese;
        let pairs = make_pairs(
            &instances,
            cfg.pair_budget,
            cfg.lambda,
            &mut stage_rng(self.seed, stream::PAIRS),
        )?;
        let lda = self.lda()?;
        let vq = self.validation_queries();
        let validator = |net: &Network| validation_p2(&inputs, lda, net, &vq);
        let net = train_siamese(
            start,
            &instances,
            &pairs,
            cfg,
            (!vq.is_empty()).then_some(&validator as _),
            &mut stage_rng(self.seed, stream::SIAMESE),
            on_progress,
            |_| {},
        )?;
        self.networks.siamese = Some(net);
        Ok(())
    }

    /// Embedding view over a trained network.
    pub fn concept_model<'a>(
        &'a self,
        term_inputs: &'a [Vec<f64>],
        stage: NetworkStage,
    ) -> Result<ConceptModel<'a>> {
        ConceptModel::new(term_inputs, self.lda()?, self.network(stage)?)
    }

    /// A ranking model of the requested kind. `term_inputs` must come from
    /// [`ModelBundle::term_inputs`].
    pub fn priming_model<'a>(
        &'a self,
        kind: ModelKind,
        term_inputs: &'a [Vec<f64>],
        seed: u64,
    ) -> Result<Box<dyn PrimingModel + 'a>> {
        Ok(match kind {
            ModelKind::SiameseCe => {
                Box::new(self.concept_model(term_inputs, NetworkStage::Siamese)?)
            }
            ModelKind::Ce => Box::new(self.concept_model(term_inputs, NetworkStage::Prediction)?),
            ModelKind::Pca => Box::new(
                self.baselines
                    .pca
                    .clone()
                    .ok_or_else(|| Error::BaselineMissing("pca".into()))?,
            ),
            ModelKind::Lsa => Box::new(
                self.baselines
                    .lsa
                    .clone()
                    .ok_or_else(|| Error::BaselineMissing("lsa".into()))?,
            ),
            ModelKind::LdaKl => Box::new(LdaKlModel { lda: self.lda()? }),
            ModelKind::Random => Box::new(RandomModel {
                vocab_size: self.vocabulary.len(),
                seed,
            }),
        })
    }
}

fn validation_p2(inputs: &[Vec<f64>], lda: &LdaModel, net: &Network, queries: &[Query]) -> f64 {
    ConceptModel::new(inputs, lda, net)
        .and_then(|m| mean_p_at_2(&m, queries))
        .unwrap_or(0.0)
}
