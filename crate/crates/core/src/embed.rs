//! Contextualized concept embeddings from a trained network.

use nalgebra::DMatrix;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::linalg::columns_to_matrix;
use crate::network::Network;
use crate::topics::LdaModel;
use crate::training::input_vector;

/// A trained network together with the inputs it expects: the
/// pipeline-transformed term features and the topic model for contexts.
#[derive(Debug, Clone, Copy)]
pub struct ConceptModel<'a> {
    pub term_inputs: &'a [Vec<f64>],
    pub lda: &'a LdaModel,
    pub network: &'a Network,
}

impl<'a> ConceptModel<'a> {
    pub fn new(
        term_inputs: &'a [Vec<f64>],
        lda: &'a LdaModel,
        network: &'a Network,
    ) -> Result<Self> {
        let feature_dim = term_inputs.first().map_or(0, Vec::len);
        if term_inputs.iter().any(|r| r.len() != feature_dim) {
            return Err(Error::FeatureDimensionMismatch);
        }
        if feature_dim + lda.topics() != network.input_dim() {
            return Err(Error::InputDimensionMismatch);
        }
        if term_inputs.len() != network.output_dim() || lda.vocab_size() != term_inputs.len() {
            return Err(Error::FeatureDimensionMismatch);
        }
        Ok(ConceptModel {
            term_inputs,
            lda,
            network,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.term_inputs.len()
    }

    pub fn ce_dim(&self) -> usize {
        self.network.ce_dim()
    }

    /// l(δ).
    pub fn context(&self, doc: &Document) -> Result<Vec<f64>> {
        self.lda.infer(doc)
    }

    /// CE(x(τ, δ)) for an in-vocabulary term under a given local context.
    pub fn embed(&self, term: usize, context: &[f64]) -> Result<Vec<f64>> {
        let row = self
            .term_inputs
            .get(term)
            .ok_or_else(|| Error::UnknownTerm(term.to_string()))?;
        self.embed_features(row, context)
    }

    /// CE for arbitrary (already transformed) term features.
    pub fn embed_features(&self, term_input: &[f64], context: &[f64]) -> Result<Vec<f64>> {
        self.network
            .concept_embedding(&input_vector(term_input, context))
    }

    /// CE of every vocabulary term under one context, indexed by term.
    pub fn embed_vocabulary(&self, context: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.embed_terms(&(0..self.vocab_size()).collect::<Vec<_>>(), context)
    }

    pub fn embed_terms(&self, terms: &[usize], context: &[f64]) -> Result<Vec<Vec<f64>>> {
        if context.len() != self.lda.topics() {
            return Err(Error::TopicDimensionMismatch);
        }
        let inputs: Vec<Vec<f64>> = terms
            .iter()
            .map(|&t| {
                self.term_inputs
                    .get(t)
                    .map(|row| input_vector(row, context))
                    .ok_or_else(|| Error::UnknownTerm(t.to_string()))
            })
            .collect::<Result<_>>()?;
        let x = columns_to_matrix(self.network.input_dim(), inputs.iter().map(Vec::as_slice));
        Ok(columns(&self.network.embed_batch(&x)))
    }
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}
