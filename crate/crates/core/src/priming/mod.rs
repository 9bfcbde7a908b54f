//! Semantic priming: rank the vocabulary by distance to a query concept (or
//! to any member of a query document) and score the ranking against the
//! document's terms.

mod metrics;

pub use metrics::{
    auc, average_precision, interpolated_precision, p_at_k, MetricsReport, QueryMetrics,
    RECALL_LEVELS,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{corrupt_document, Document};
use crate::embed::ConceptModel;
use crate::error::{Error, Result};
use crate::linalg::euclidean;
use crate::rng::{self, Rng};

/// Environment variable capping evaluation threads.
pub const THREADS_ENV: &str = "CE_SIAMESE_THREADS";

/// Vocabulary ordered by score; ties keep ascending term index.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub terms: Vec<usize>,
    /// Score of each entry of `terms`.
    pub scores: Vec<f64>,
    /// Most related last-to-first: scores are non-increasing.
    pub descending: bool,
}

impl RankedList {
    /// Ranks term `i` by `scores[i]`, ascending unless `descending`.
    pub fn from_scores(scores: &[f64], descending: bool) -> Self {
        let mut terms: Vec<usize> = (0..scores.len()).collect();
        terms.sort_by(|&a, &b| {
            let ord = scores[a].total_cmp(&scores[b]);
            let ord = if descending { ord.reverse() } else { ord };
            ord.then(a.cmp(&b))
        });
        RankedList {
            scores: terms.iter().map(|&t| scores[t]).collect(),
            terms,
            descending,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Ranks candidates by distance to a query point.
pub fn prime_points(candidates: &[Vec<f64>], query: &[f64], descending: bool) -> RankedList {
    let d: Vec<f64> = candidates.iter().map(|c| euclidean(c, query)).collect();
    RankedList::from_scores(&d, descending)
}

/// Scores each term by its minimum distance to the members of `context`,
/// skipping the term itself.
pub fn extended_scores<F>(vocab_size: usize, context: &Document, distance: F) -> Result<Vec<f64>>
where
    F: Fn(usize, usize) -> f64,
{
    if context.len() < 2 {
        return Err(Error::ExtendedPrimingTooShort);
    }
    Ok((0..vocab_size)
        .map(|i| {
            context
                .term_ids()
                .iter()
                .filter(|&&t| t != i)
                .map(|&t| distance(t, i))
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// A ranking model usable with both priming protocols.
pub trait PrimingModel: Sync {
    /// Ranks the vocabulary for `term` in `context`.
    fn prime(&self, term: usize, context: &Document) -> Result<RankedList>;
    /// Ranks the vocabulary for a whole document.
    fn extended_prime(&self, context: &Document) -> Result<RankedList>;
}

impl PrimingModel for ConceptModel<'_> {
    fn prime(&self, term: usize, context: &Document) -> Result<RankedList> {
        let l = self.context(context)?;
        let ces = self.embed_vocabulary(&l)?;
        let query = ces
            .get(term)
            .ok_or_else(|| Error::UnknownTerm(term.to_string()))?;
        Ok(prime_points(&ces, query, false))
    }

    fn extended_prime(&self, context: &Document) -> Result<RankedList> {
        if context.len() < 2 {
            return Err(Error::ExtendedPrimingTooShort);
        }
        let l = self.context(context)?;
        let ces = self.embed_vocabulary(&l)?;
        let scores = extended_scores(ces.len(), context, |a, b| euclidean(&ces[a], &ces[b]))?;
        Ok(RankedList::from_scores(&scores, false))
    }
}

/// Uniformly random rankings, reproducible per query.
#[derive(Debug, Clone, Copy)]
pub struct RandomModel {
    pub vocab_size: usize,
    pub seed: u64,
}

impl RandomModel {
    fn rng_for(&self, term: Option<usize>, context: &Document) -> Rng {
        let mut key = vec![term.map_or(usize::MAX, |t| t)];
        key.extend_from_slice(context.term_ids());
        rng::seeded(rng::derive(self.seed, rng::hash_ids(&key)))
    }
}

impl PrimingModel for RandomModel {
    fn prime(&self, term: usize, context: &Document) -> Result<RankedList> {
        Ok(crate::baselines::random_rank(
            self.vocab_size,
            &mut self.rng_for(Some(term), context),
        ))
    }

    fn extended_prime(&self, context: &Document) -> Result<RankedList> {
        if context.len() < 2 {
            return Err(Error::ExtendedPrimingTooShort);
        }
        Ok(crate::baselines::random_rank(
            self.vocab_size,
            &mut self.rng_for(None, context),
        ))
    }
}

/// A priming query: a focused term (or none, for extended priming), the
/// context the model sees, and the ground-truth document.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub term: Option<usize>,
    pub context: Document,
    pub truth: Document,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Priming,
    Extended,
}

/// One query per (document, member term) for priming, or one per document
/// with at least two terms for extended priming.
pub fn queries(docs: &[Document], protocol: Protocol) -> Vec<Query> {
    let mut out = Vec::new();
    for d in docs {
        match protocol {
            Protocol::Priming => out.extend(d.term_ids().iter().map(|&t| Query {
                term: Some(t),
                context: d.clone(),
                truth: d.clone(),
            })),
            Protocol::Extended if d.len() >= 2 => out.push(Query {
                term: None,
                context: d.clone(),
                truth: d.clone(),
            }),
            Protocol::Extended => {}
        }
    }
    out
}

/// Queries whose contexts have a fraction of terms removed; the truth stays
/// the full document. Priming queries focus on surviving terms.
pub fn corrupted_queries(
    docs: &[Document],
    protocol: Protocol,
    missing_rate: f64,
    vocab_size: usize,
    rng: &mut Rng,
) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    for d in docs {
        let c = corrupt_document(d, missing_rate, vocab_size, rng)?.document;
        match protocol {
            Protocol::Priming => out.extend(c.term_ids().iter().map(|&t| Query {
                term: Some(t),
                context: c.clone(),
                truth: d.clone(),
            })),
            Protocol::Extended if c.len() >= 2 => out.push(Query {
                term: None,
                context: c.clone(),
                truth: d.clone(),
            }),
            Protocol::Extended => {}
        }
    }
    Ok(out)
}

pub fn rank_query(model: &dyn PrimingModel, q: &Query) -> Result<RankedList> {
    match q.term {
        Some(t) => model.prime(t, &q.context),
        None => model.extended_prime(&q.context),
    }
}

/// Runs queries (in parallel, order preserved) and summarizes the metrics.
pub fn evaluate(
    model: &dyn PrimingModel,
    queries: &[Query],
    ks: &[usize],
) -> Result<(Vec<QueryMetrics>, MetricsReport)> {
    let run = || -> Result<Vec<QueryMetrics>> {
        queries
            .par_iter()
            .enumerate()
            .map(|(i, q)| {
                let list = rank_query(model, q)?;
                Ok(QueryMetrics::compute(i, &list.terms, &q.truth, ks))
            })
            .collect()
    };
    let results = with_thread_cap(run)?;
    let report = MetricsReport::summarize(&results);
    Ok((results, report))
}

/// Mean P@2 over queries; used for early stopping.
pub fn mean_p_at_2(model: &dyn PrimingModel, queries: &[Query]) -> Result<f64> {
    let (_, report) = evaluate(model, queries, &[2])?;
    Ok(report.p_at_k.first().map_or(0.0, |p| p.1))
}

fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_ties_and_direction() {
        let r = RankedList::from_scores(&[0.5, 0.1, 0.5, 0.0], false);
        assert_eq!(r.terms, vec![3, 1, 0, 2]);
        let r = RankedList::from_scores(&[0.5, 0.1, 0.5, 0.0], true);
        assert_eq!(r.terms, vec![0, 2, 1, 3]);
        assert!(r.scores.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn toy_points_rank_by_distance() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![3.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 0.5],
            vec![-2.0, 0.0],
        ];
        let r = prime_points(&pts, &pts[0], false);
        assert_eq!(r.terms, vec![0, 3, 2, 4, 1]);
        assert_eq!(r.scores[0], 0.0);
        let inv = prime_points(&pts, &pts[0], true);
        let mut rev = r.terms.clone();
        rev.reverse();
        assert_eq!(inv.terms, rev);
    }

    #[test]
    fn extended_scores_exclude_self() {
        let pts: [f64; 4] = [0.0, 1.0, 5.0, 2.5];
        let ctx = Document::new(vec![0, 1], 4).unwrap();
        let s = extended_scores(4, &ctx, |a, b| (pts[a] - pts[b]).abs()).unwrap();
        assert_eq!(s, vec![1.0, 1.0, 4.0, 1.5]);
        let lone = Document::new(vec![2], 4).unwrap();
        assert_eq!(
            extended_scores(4, &lone, |_, _| 0.0),
            Err(Error::ExtendedPrimingTooShort)
        );
    }

    #[test]
    fn query_construction() {
        let docs = vec![
            Document::new(vec![0, 1, 2], 5).unwrap(),
            Document::new(vec![3], 5).unwrap(),
        ];
        assert_eq!(queries(&docs, Protocol::Priming).len(), 4);
        assert_eq!(queries(&docs, Protocol::Extended).len(), 1);
        let c = corrupted_queries(&docs, Protocol::Priming, 0.5, 5, &mut rng::seeded(0)).unwrap();
        // round(0.5·3) = 2 removed from the first document, none from the second.
        assert_eq!(c.len(), 1 + 1);
        assert!(c.iter().all(|q| q.truth.contains(q.term.unwrap())));
    }

    #[test]
    fn random_model_is_reproducible() {
        let m = RandomModel {
            vocab_size: 6,
            seed: 3,
        };
        let d = Document::new(vec![1, 4], 6).unwrap();
        let a = m.prime(1, &d).unwrap();
        assert_eq!(a, m.prime(1, &d).unwrap());
        let mut sorted = a.terms.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
    }
}
