use nalgebra::DMatrix;

use super::{Corpus, Document};
use crate::error::{Error, Result};

/// Binary term frequencies reweighted by inverse document frequency.
///
/// `idf(τ) = ln(|Δ| / (1 + df(τ)))`; the usage vector `u(τ)` of a term is its
/// column of `tfidf`.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageMatrix {
    pub tf: DMatrix<f64>,
    pub df: Vec<usize>,
    pub idf: Vec<f64>,
    pub tfidf: DMatrix<f64>,
    documents: Vec<Document>,
}

impl UsageMatrix {
    pub fn from_corpus(corpus: &Corpus) -> Result<Self> {
        Self::from_documents(&corpus.documents, corpus.vocab_size())
    }

    pub fn from_documents(docs: &[Document], vocab_size: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let n_docs = docs.len();
        let mut tf = DMatrix::zeros(n_docs, vocab_size);
        let mut df = vec![0usize; vocab_size];
        for (d, doc) in docs.iter().enumerate() {
            for &t in doc.term_ids() {
                if t >= vocab_size {
                    return Err(Error::InvalidDocument(format!(
                        "term index {t} out of range"
                    )));
                }
                tf[(d, t)] = 1.0;
                df[t] += 1;
            }
        }
        let idf: Vec<f64> = df
            .iter()
            .map(|&n| (n_docs as f64 / (1.0 + n as f64)).ln())
            .collect();
        let tfidf = DMatrix::from_fn(n_docs, vocab_size, |d, t| tf[(d, t)] * idf[t]);
        Ok(UsageMatrix {
            tf,
            df,
            idf,
            tfidf,
            documents: docs.to_vec(),
        })
    }

    pub fn num_documents(&self) -> usize {
        self.tf.nrows()
    }

    pub fn vocab_size(&self) -> usize {
        self.tf.ncols()
    }

    /// `u(τ)` over all documents.
    pub fn usage_vector(&self, term: usize) -> Vec<f64> {
        self.tfidf.column(term).iter().copied().collect()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }
}

/// Global term-to-term relatedness: `T(a, b) = <u(a), u(b)>`.
#[derive(Debug, Clone, PartialEq)]
pub struct TermFeatures {
    pub raw: DMatrix<f64>,
}

impl TermFeatures {
    /// Aggregates usage vectors with the dot product.
    ///
    /// The sum runs over each document's sparse support in document order, so
    /// `T(a, b)` and `T(b, a)` accumulate identical terms and stay bitwise
    /// symmetric.
    pub fn from_usage(um: &UsageMatrix) -> Self {
        let v = um.vocab_size();
        let mut raw = DMatrix::zeros(v, v);
        for doc in um.documents() {
            let ids = doc.term_ids();
            for &a in ids {
                for &b in ids {
                    raw[(a, b)] += um.idf[a] * um.idf[b];
                }
            }
        }
        TermFeatures { raw }
    }

    /// The feature vector `t(τ)`.
    pub fn row(&self, term: usize) -> Vec<f64> {
        self.raw.row(term).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.raw.nrows()).map(|t| self.row(t)).collect()
    }
}

/// Binary bag-of-words over the vocabulary.
pub fn bow(doc: &Document, vocab_size: usize) -> Vec<u8> {
    let mut b = vec![0u8; vocab_size];
    for &t in doc.term_ids() {
        b[t] = 1;
    }
    b
}

pub fn bow_complement(b: &[u8]) -> Vec<u8> {
    b.iter().map(|&x| 1 - x).collect()
}

/// Maps `{0, 1}` to `{-1, +1}`.
pub fn to_targets(b: &[u8]) -> Vec<f64> {
    b.iter().map(|&x| if x == 1 { 1.0 } else { -1.0 }).collect()
}
