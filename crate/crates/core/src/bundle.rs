//! The model bundle: every trained artifact of one pipeline run, persisted
//! as versioned JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::EmbeddingTable;
use crate::config::Config;
use crate::corpus::{Document, FeaturePipeline, Split, Vocabulary};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::topics::LdaModel;

pub const FORMAT_VERSION: &str = "ce-siamese/1";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Networks {
    pub pretrained: Option<Network>,
    pub prediction: Option<Network>,
    pub siamese: Option<Network>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub pca: Option<EmbeddingTable>,
    pub lsa: Option<EmbeddingTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub version: String,
    pub seed: u64,
    pub config: Config,
    pub vocabulary: Vocabulary,
    /// Every corpus document; the split indexes into this list.
    pub documents: Vec<Document>,
    pub split: Split,
    pub pipeline: FeaturePipeline,
    pub lda: Option<LdaModel>,
    pub networks: Networks,
    pub baselines: Baselines,
}

fn inconsistent(msg: impl Into<String>) -> Error {
    Error::InconsistentBundle(msg.into())
}

impl ModelBundle {
    /// Cross-checks dimensions and references between the stored artifacts.
    pub fn check(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::UnsupportedModelVersion);
        }
        let vocab = self.vocabulary.len();
        if vocab == 0 {
            return Err(inconsistent("empty vocabulary"));
        }
        if self
            .documents
            .iter()
            .flat_map(|d| d.term_ids())
            .any(|&t| t >= vocab)
        {
            return Err(inconsistent(
                "document references a term outside the vocabulary",
            ));
        }
        let mut seen = vec![false; self.documents.len()];
        for &i in self
            .split
            .train
            .iter()
            .chain(&self.split.validation)
            .chain(&self.split.test)
        {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(inconsistent("split is not a partition of the documents"));
            }
        }
        if self.pipeline.is_fitted() && self.pipeline.dim() != vocab {
            return Err(inconsistent(
                "pipeline dimension differs from vocabulary size",
            ));
        }
        if let Some(lda) = &self.lda {
            if lda.vocab_size() != vocab {
                return Err(inconsistent("topic model vocabulary differs"));
            }
        }
        let expected_input = self.pipeline.dim() + self.lda.as_ref().map_or(0, LdaModel::topics);
        for net in [
            &self.networks.pretrained,
            &self.networks.prediction,
            &self.networks.siamese,
        ]
        .into_iter()
        .flatten()
        {
            if self.lda.is_none() || !self.pipeline.is_fitted() {
                return Err(inconsistent("network stored without its input features"));
            }
            if net.input_dim() != expected_input {
                return Err(inconsistent(format!(
                    "network input {} ≠ pipeline output {} + topics {}",
                    net.input_dim(),
                    self.pipeline.dim(),
                    expected_input - self.pipeline.dim()
                )));
            }
            if net.output_dim() != vocab {
                return Err(inconsistent("network output differs from vocabulary size"));
            }
        }
        for table in [&self.baselines.pca, &self.baselines.lsa]
            .into_iter()
            .flatten()
        {
            if table.len() != vocab {
                return Err(inconsistent(
                    "baseline table row count differs from vocabulary size",
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.check()?;
        let mut s = serde_json::to_string_pretty(self).map_err(|e| inconsistent(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|_| Error::CorruptModelFile)?;
        match value.get("version").and_then(|v| v.as_str()) {
            Some(FORMAT_VERSION) => {}
            Some(_) => return Err(Error::UnsupportedModelVersion),
            None => return Err(Error::CorruptModelFile),
        }
        let bundle: ModelBundle =
            serde_json::from_value(value).map_err(|_| Error::CorruptModelFile)?;
        bundle.check()?;
        Ok(bundle)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
