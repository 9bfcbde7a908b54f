//! Context-free comparison models: LSA, PCA over aggregated tfidf features,
//! topic-model KL relatedness, and random ranking.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, TermFeatures, UsageMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, cosine_distance};
use crate::priming::{extended_scores, PrimingModel, RankedList};
use crate::rng::Rng;
use crate::topics::LdaModel;

/// Dense per-term vectors ranked by cosine distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub vectors: Vec<Vec<f64>>,
}

impl EmbeddingTable {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        cosine_distance(&self.vectors[a], &self.vectors[b])
    }

    /// Ascending cosine distance to `term`. Zero vectors are at distance 1
    /// from everything.
    pub fn cosine_rank(&self, term: usize) -> Result<RankedList> {
        if term >= self.len() {
            return Err(Error::UnknownTerm(term.to_string()));
        }
        let d: Vec<f64> = (0..self.len()).map(|i| self.distance(term, i)).collect();
        Ok(RankedList::from_scores(&d, false))
    }

    /// Minimum cosine distance to any other member of `doc`.
    pub fn cosine_rank_document(&self, doc: &Document) -> Result<RankedList> {
        if doc.term_ids().iter().any(|&t| t >= self.len()) {
            return Err(Error::UnknownTerm(format!("{:?}", doc.term_ids())));
        }
        let s = extended_scores(self.len(), doc, |a, b| self.distance(a, b))?;
        Ok(RankedList::from_scores(&s, false))
    }
}

impl PrimingModel for EmbeddingTable {
    fn prime(&self, term: usize, _context: &Document) -> Result<RankedList> {
        self.cosine_rank(term)
    }

    fn extended_prime(&self, context: &Document) -> Result<RankedList> {
        self.cosine_rank_document(context)
    }
}

/// LSA term vectors with the decomposition summary.
#[derive(Debug, Clone, PartialEq)]
pub struct LsaFit {
    pub table: EmbeddingTable,
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    pub retained: usize,
}

/// Smallest n whose leading squared singular values reach `threshold` of the
/// total.
pub fn pov_components(singular_values: &[f64], threshold: f64) -> usize {
    let energy: Vec<f64> = singular_values.iter().map(|s| s * s).collect();
    let total: f64 = energy.iter().sum();
    let mut acc = 0.0;
    for (i, e) in energy.iter().enumerate() {
        acc += e;
        if acc >= threshold * total {
            return i + 1;
        }
    }
    energy.len()
}

/// SVD of the tfidf document–term matrix; term vectors are rows of V for the
/// retained components, multiplied by the singular values unless `unscaled`.
pub fn lsa_train(um: &UsageMatrix, pov_threshold: f64, unscaled: bool) -> Result<LsaFit> {
    if !(pov_threshold > 0.0 && pov_threshold <= 1.0) {
        return Err(Error::InvalidThreshold);
    }
    let a = &um.tfidf;
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| {
        svd.singular_values[y]
            .total_cmp(&svd.singular_values[x])
            .then(x.cmp(&y))
    });
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let retained = pov_components(&singular_values, pov_threshold);
    let vectors = (0..a.ncols())
        .map(|t| {
            order[..retained]
                .iter()
                .map(|&i| {
                    let s = if unscaled {
                        1.0
                    } else {
                        svd.singular_values[i]
                    };
                    v_t[(i, t)] * s
                })
                .collect()
        })
        .collect();
    Ok(LsaFit {
        table: EmbeddingTable { vectors },
        singular_values,
        retained,
    })
}

/// Principal-component projection of the aggregated tfidf features
/// (centered rows) onto the leading `dim` directions.
pub fn pca_baseline_train(features: &TermFeatures, dim: usize) -> Result<EmbeddingTable> {
    let rows = features.rows();
    let vocab = rows.len();
    if dim == 0 || dim > vocab {
        return Err(Error::DimensionExceedsVocabulary);
    }
    let data: DMatrix<f64> = linalg::rows_to_matrix(&rows);
    let mean = linalg::column_means(&data);
    let cov = linalg::covariance(&data, &mean);
    let (_, vectors) = linalg::sorted_symmetric_eigen(&cov);
    let projected = rows
        .iter()
        .map(|r| {
            (0..dim)
                .map(|c| {
                    r.iter()
                        .zip(mean.iter())
                        .zip(vectors.column(c).iter())
                        .map(|((x, m), v)| (x - m) * v)
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(EmbeddingTable { vectors: projected })
}

/// A uniformly random permutation; scores are the ranks.
pub fn random_rank(vocab_size: usize, rng: &mut Rng) -> RankedList {
    let mut terms: Vec<usize> = (0..vocab_size).collect();
    terms.shuffle(rng);
    RankedList {
        scores: (0..vocab_size).map(|i| i as f64).collect(),
        terms,
        descending: false,
    }
}

/// Ranks terms by topic-conditioned KL relatedness under θ(δ).
#[derive(Debug, Clone, Copy)]
pub struct LdaKlModel<'a> {
    pub lda: &'a LdaModel,
}

impl PrimingModel for LdaKlModel<'_> {
    fn prime(&self, term: usize, context: &Document) -> Result<RankedList> {
        let theta = self.lda.infer(context)?;
        let scores = (0..self.lda.vocab_size())
            .map(|i| self.lda.topic_kl_relatedness(term, i, &theta))
            .collect::<Result<Vec<_>>>()?;
        Ok(RankedList::from_scores(&scores, false))
    }

    fn extended_prime(&self, context: &Document) -> Result<RankedList> {
        if context.len() < 2 {
            return Err(Error::ExtendedPrimingTooShort);
        }
        let theta = self.lda.infer(context)?;
        let v = self.lda.vocab_size();
        let mut table = vec![vec![0.0; v]; v];
        for &a in context.term_ids() {
            for (b, slot) in table[a].iter_mut().enumerate() {
                *slot = self.lda.topic_kl_relatedness(a, b, &theta)?;
            }
        }
        let scores = extended_scores(v, context, |a, b| table[a][b])?;
        Ok(RankedList::from_scores(&scores, false))
    }
}
