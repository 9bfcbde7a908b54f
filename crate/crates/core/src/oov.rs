//! Embedding out-of-vocabulary terms.
//!
//! Feature-based: aggregate the unseen term's tfidf usage against every
//! in-vocabulary term over an extended document set, then embed it like any
//! other term; its most related terms are the farthest ones. Concept-based:
//! the centroid of the in-vocabulary context terms' embeddings.

use crate::corpus::{Document, FeaturePipeline, Vocabulary};
use crate::embed::ConceptModel;
use crate::error::{Error, Result};
use crate::priming::{prime_points, RankedList};

/// One line of an OOV query file: the unseen term and its co-occurring terms.
#[derive(Debug, Clone, PartialEq)]
pub struct OovQuery {
    pub term: String,
    pub context: Vec<String>,
}

impl OovQuery {
    /// "oov_term<TAB>ctx1<TAB>ctx2…".
    pub fn parse(line: &str) -> Option<Self> {
        let mut terms = crate::corpus::split_terms(line).into_iter();
        let term = terms.next()?;
        Some(OovQuery {
            term,
            context: terms.collect(),
        })
    }

    /// The in-vocabulary part of the context; other unseen terms are dropped.
    pub fn in_vocabulary_context(&self, vocab: &Vocabulary) -> Result<Document> {
        Document::from_terms(&self.context, vocab)
    }
}

/// Raw aggregated features t(τ_oov): one dot product per in-vocabulary term,
/// over the training documents plus every supplied document that contains
/// τ_oov. idf is recomputed over that extended set for all terms. Supplied
/// documents without τ_oov are ignored.
pub fn oov_term_features(
    oov_term: &str,
    vocab: &Vocabulary,
    training_docs: &[Document],
    supplied: &[Vec<String>],
) -> Result<Vec<f64>> {
    if vocab.contains(oov_term) {
        return Err(Error::NotOutOfVocabulary(oov_term.to_string()));
    }
    let with_term: Vec<&Vec<String>> = supplied
        .iter()
        .filter(|d| d.iter().any(|t| t == oov_term))
        .collect();
    if with_term.is_empty() {
        return Err(Error::OovUnseen);
    }
    let n_docs = (training_docs.len() + with_term.len()) as f64;
    let mut df = vec![0usize; vocab.len()];
    for d in training_docs {
        for &t in d.term_ids() {
            df[t] += 1;
        }
    }
    let extended: Vec<Vec<usize>> = with_term
        .iter()
        .map(|d| {
            let mut ids: Vec<usize> = d.iter().filter_map(|t| vocab.index_of(t)).collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        })
        .collect();
    for ids in &extended {
        for &t in ids {
            df[t] += 1;
        }
    }
    let idf = |count: usize| (n_docs / (1.0 + count as f64)).ln();
    let idf_oov = idf(with_term.len());
    let mut features = vec![0.0; vocab.len()];
    // τ_oov occurs only in the supplied documents, so only they contribute.
    for ids in &extended {
        for &t in ids {
            features[t] += idf_oov * idf(df[t]);
        }
    }
    Ok(features)
}

/// An OOV embedding and the ranking direction its priming list must use.
#[derive(Debug, Clone, PartialEq)]
pub struct OovEmbedding {
    pub ce: Vec<f64>,
    /// Most related terms are the farthest.
    pub descending: bool,
}

/// Feature-based embedding: CE of (pipeline(t(τ_oov)), l(δ_iv)).
pub fn oov_feature_embed(
    model: &ConceptModel,
    pipeline: &FeaturePipeline,
    vocab: &Vocabulary,
    training_docs: &[Document],
    oov_term: &str,
    context: &Document,
    supplied: &[Vec<String>],
) -> Result<OovEmbedding> {
    let raw = oov_term_features(oov_term, vocab, training_docs, supplied)?;
    let t = pipeline.apply(&raw)?;
    let l = model.context(context)?;
    Ok(OovEmbedding {
        ce: model.embed_features(&t, &l)?,
        descending: true,
    })
}

/// Concept-based embedding: mean CE of the context terms, each embedded
/// with the context as its local context.
pub fn oov_concept_embed(model: &ConceptModel, context: &Document) -> Result<OovEmbedding> {
    if context.is_empty() {
        return Err(Error::NoInVocabularyContext);
    }
    let l = model.context(context)?;
    let ces = model.embed_terms(context.term_ids(), &l)?;
    Ok(OovEmbedding {
        ce: centroid(&ces),
        descending: false,
    })
}

/// Elementwise arithmetic mean.
pub fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points.first().map_or(0, Vec::len);
    let m = points.len() as f64;
    (0..dim)
        .map(|j| points.iter().map(|p| p[j]).sum::<f64>() / m)
        .collect()
}

/// Ranks the vocabulary, embedded under the context, against an OOV embedding.
pub fn prime_oov(
    model: &ConceptModel,
    embedding: &OovEmbedding,
    context: &Document,
) -> Result<RankedList> {
    let l = model.context(context)?;
    let ces = model.embed_vocabulary(&l)?;
    Ok(prime_points(&ces, &embedding.ce, embedding.descending))
}
