use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Corpus, Document};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Document indices of the train / validation / test partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles documents, holds out floor(|Δ|/3) of them, and carves the
/// validation set from the holdout. Each index list is returned sorted.
pub fn split_corpus(corpus: &Corpus, validation: usize, rng: &mut Rng) -> Result<Split> {
    let n = corpus.len();
    if n < 3 {
        return Err(Error::CorpusTooSmall);
    }
    let holdout = n / 3;
    if validation > holdout {
        return Err(Error::ValidationExceedsHoldout);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (held, train) = order.split_at(holdout);
    let (val, test) = held.split_at(validation);
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    Ok(Split {
        train: sorted(train),
        validation: sorted(val),
        test: sorted(test),
    })
}

/// A term coupled with a document that does not contain it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NegativePair {
    pub term_id: usize,
    pub doc_id: usize,
}

/// Draws `m` negatives for every document of cardinality `m`. Terms are
/// distinct within a document when enough non-member terms exist, otherwise
/// drawn with replacement.
pub fn synthesize_negatives(
    docs: &[Document],
    vocab_size: usize,
    rng: &mut Rng,
) -> Result<Vec<NegativePair>> {
    let mut out = Vec::new();
    for (doc_id, doc) in docs.iter().enumerate() {
        let candidates: Vec<usize> = (0..vocab_size).filter(|&t| !doc.contains(t)).collect();
        if candidates.is_empty() {
            return Err(Error::NoCandidateNegative);
        }
        let m = doc.len();
        if candidates.len() >= m {
            for &t in candidates.choose_multiple(rng, m) {
                out.push(NegativePair { term_id: t, doc_id });
            }
        } else {
            for _ in 0..m {
                let t = candidates[rng.gen_range(0..candidates.len())];
                out.push(NegativePair { term_id: t, doc_id });
            }
        }
    }
    Ok(out)
}

/// A document with terms removed at random.
#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    pub document: Document,
    /// 1 − |δ̃|/|δ|.
    pub achieved_rate: f64,
}

/// Removes round(rate·m) terms, always keeping at least one.
pub fn corrupt_document(
    doc: &Document,
    missing_rate: f64,
    vocab_size: usize,
    rng: &mut Rng,
) -> Result<Corruption> {
    if !(0.0..=0.5).contains(&missing_rate) {
        return Err(Error::MissingRateOutOfRange);
    }
    let m = doc.len();
    let remove = ((missing_rate * m as f64).round() as usize).min(m.saturating_sub(1));
    if remove == 0 {
        return Ok(Corruption {
            document: doc.clone(),
            achieved_rate: 0.0,
        });
    }
    let kept: Vec<usize> = doc
        .term_ids()
        .choose_multiple(rng, m - remove)
        .copied()
        .collect();
    Ok(Corruption {
        document: Document::new(kept, vocab_size)?,
        achieved_rate: remove as f64 / m as f64,
    })
}
