//! Topic model over documents and the context distances derived from it.
//!
//! A collapsed Gibbs sampler fits LDA on the training documents. The topic
//! distribution of a whole document serves as the local context of every
//! term in it.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Probability floor applied before any logarithm of a topic distribution.
pub const KL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Inference {
    /// Gibbs sampling of the new document's assignments against the frozen
    /// topic-term table; θ is averaged over post-burn-in sweeps.
    FoldIn { sweeps: usize, burn_in: usize },
    /// p(φ|δ) ∝ p(φ) ∏_τ p(τ|φ), evaluated in one pass.
    Posterior,
}

impl Default for Inference {
    fn default() -> Self {
        Inference::FoldIn {
            sweeps: 60,
            burn_in: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdaConfig {
    pub topics: usize,
    pub iterations: usize,
    /// Symmetric document-topic prior.
    pub alpha: f64,
    /// Symmetric topic-term prior.
    pub beta: f64,
    pub inference: Inference,
}

impl LdaConfig {
    pub fn new(topics: usize) -> Self {
        LdaConfig {
            topics,
            iterations: 200,
            alpha: 0.1,
            beta: 0.01,
            inference: Inference::default(),
        }
    }
}

/// Count tables of a collapsed Gibbs sampler.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    docs: Vec<Vec<usize>>,
    assignments: Vec<Vec<usize>>,
    doc_topic: Vec<Vec<u32>>,
    topic_term: Vec<Vec<u32>>,
    topic_total: Vec<u32>,
    alpha: f64,
    beta: f64,
}

impl GibbsSampler {
    /// Assigns every token a uniformly random topic.
    pub fn new(
        docs: &[Document],
        vocab_size: usize,
        topics: usize,
        alpha: f64,
        beta: f64,
        rng: &mut Rng,
    ) -> Self {
        let mut s = GibbsSampler {
            docs: docs.iter().map(|d| d.term_ids().to_vec()).collect(),
            assignments: Vec::with_capacity(docs.len()),
            doc_topic: vec![vec![0; topics]; docs.len()],
            topic_term: vec![vec![0; vocab_size]; topics],
            topic_total: vec![0; topics],
            alpha,
            beta,
        };
        for (d, doc) in s.docs.iter().enumerate() {
            let mut z = Vec::with_capacity(doc.len());
            for &w in doc {
                let c = rng.gen_range(0..topics);
                s.doc_topic[d][c] += 1;
                s.topic_term[c][w] += 1;
                s.topic_total[c] += 1;
                z.push(c);
            }
            s.assignments.push(z);
        }
        s
    }

    /// One pass resampling every token's topic.
    pub fn sweep(&mut self, rng: &mut Rng) {
        let topics = self.topic_total.len();
        let v_beta = self.topic_term[0].len() as f64 * self.beta;
        let mut weights = vec![0.0; topics];
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.assignments[d][i];
                self.doc_topic[d][old] -= 1;
                self.topic_term[old][w] -= 1;
                self.topic_total[old] -= 1;
                for (c, wt) in weights.iter_mut().enumerate() {
                    *wt = (self.doc_topic[d][c] as f64 + self.alpha)
                        * (self.topic_term[c][w] as f64 + self.beta)
                        / (self.topic_total[c] as f64 + v_beta);
                }
                let new = sample_index(&weights, rng);
                self.doc_topic[d][new] += 1;
                self.topic_term[new][w] += 1;
                self.topic_total[new] += 1;
                self.assignments[d][i] = new;
            }
        }
    }

    /// Number of tokens in the corpus.
    pub fn token_count(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    /// Token totals as seen by each count table: (doc-topic, topic-term, topic).
    pub fn table_totals(&self) -> (u64, u64, u64) {
        let dt = self.doc_topic.iter().flatten().map(|&c| c as u64).sum();
        let tt = self.topic_term.iter().flatten().map(|&c| c as u64).sum();
        let t = self.topic_total.iter().map(|&c| c as u64).sum();
        (dt, tt, t)
    }

    /// Topic with the most tokens in each document.
    pub fn dominant_topics(&self) -> Vec<usize> {
        self.doc_topic.iter().map(|row| argmax_u32(row)).collect()
    }

    fn into_model(self, inference: Inference, seed: u64) -> LdaModel {
        let topics = self.topic_total.len();
        let vocab = self.topic_term[0].len();
        let tokens = self.token_count() as f64;
        let topic_term = (0..topics)
            .map(|c| {
                let denom = self.topic_total[c] as f64 + vocab as f64 * self.beta;
                self.topic_term[c]
                    .iter()
                    .map(|&n| (n as f64 + self.beta) / denom)
                    .collect()
            })
            .collect();
        let topic_prior = self
            .topic_total
            .iter()
            .map(|&n| (n as f64 + self.alpha) / (tokens + topics as f64 * self.alpha))
            .collect();
        LdaModel {
            topic_term,
            topic_prior,
            alpha: self.alpha,
            beta: self.beta,
            inference,
            seed,
        }
    }
}

fn sample_index(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

fn argmax_u32(row: &[u32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Trained topic model: smoothed p(τ|φ_c) rows and marginal p(φ_c).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    topic_term: Vec<Vec<f64>>,
    topic_prior: Vec<f64>,
    alpha: f64,
    beta: f64,
    inference: Inference,
    seed: u64,
}

/// Runs `cfg.iterations` Gibbs sweeps over `docs`.
pub fn train_lda(
    docs: &[Document],
    vocab_size: usize,
    cfg: &LdaConfig,
    seed: u64,
) -> Result<LdaModel> {
    if cfg.topics < 2 {
        return Err(Error::InvalidTopicModel(
            "topic count must be at least 2".into(),
        ));
    }
    if cfg.iterations == 0 {
        return Err(Error::InvalidTopicModel(
            "iteration budget must be positive".into(),
        ));
    }
    if !(cfg.alpha > 0.0 && cfg.beta > 0.0) {
        return Err(Error::InvalidTopicModel("priors must be positive".into()));
    }
    if cfg.topics > vocab_size {
        return Err(Error::MoreTopicsThanTerms);
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut rng = rng::seeded(seed);
    let mut sampler =
        GibbsSampler::new(docs, vocab_size, cfg.topics, cfg.alpha, cfg.beta, &mut rng);
    for _ in 0..cfg.iterations {
        sampler.sweep(&mut rng);
    }
    Ok(sampler.into_model(cfg.inference, seed))
}

impl LdaModel {
    /// Builds a model from explicit distributions, normalizing each row.
    pub fn from_parts(
        topic_term: Vec<Vec<f64>>,
        topic_prior: Vec<f64>,
        alpha: f64,
        inference: Inference,
        seed: u64,
    ) -> Result<Self> {
        let k = topic_prior.len();
        if k == 0 || topic_term.len() != k {
            return Err(Error::InvalidTopicModel("topic count mismatch".into()));
        }
        let v = topic_term[0].len();
        if v == 0 || topic_term.iter().any(|r| r.len() != v) {
            return Err(Error::InvalidTopicModel("ragged topic-term table".into()));
        }
        let normalize = |r: Vec<f64>| -> Result<Vec<f64>> {
            let s: f64 = r.iter().sum();
            if s.is_nan() || s <= 0.0 || r.iter().any(|&x| x.is_nan() || x <= 0.0 || !x.is_finite())
            {
                return Err(Error::InvalidTopicModel(
                    "probabilities must be positive".into(),
                ));
            }
            Ok(r.into_iter().map(|x| x / s).collect())
        };
        Ok(LdaModel {
            topic_term: topic_term
                .into_iter()
                .map(normalize)
                .collect::<Result<_>>()?,
            topic_prior: normalize(topic_prior)?,
            alpha,
            beta: 0.0,
            inference,
            seed,
        })
    }

    pub fn topics(&self) -> usize {
        self.topic_prior.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.topic_term[0].len()
    }

    /// p(τ|φ_c), one row per topic.
    pub fn topic_term(&self) -> &[Vec<f64>] {
        &self.topic_term
    }

    /// p(φ_c).
    pub fn topic_prior(&self) -> &[f64] {
        &self.topic_prior
    }

    pub fn inference(&self) -> Inference {
        self.inference
    }

    pub fn with_inference(mut self, inference: Inference) -> Self {
        self.inference = inference;
        self
    }

    /// Local context l(δ) = p(φ|δ) with the model's configured inference.
    pub fn infer(&self, doc: &Document) -> Result<Vec<f64>> {
        if doc.is_empty() {
            return Err(Error::NoInVocabularyContext);
        }
        if doc.term_ids().iter().any(|&t| t >= self.vocab_size()) {
            return Err(Error::TopicDimensionMismatch);
        }
        Ok(match self.inference {
            Inference::Posterior => self.posterior(doc.term_ids()),
            Inference::FoldIn { sweeps, burn_in } => self.fold_in(doc.term_ids(), sweeps, burn_in),
        })
    }

    pub fn infer_all(&self, docs: &[Document]) -> Result<Vec<Vec<f64>>> {
        docs.par_iter().map(|d| self.infer(d)).collect()
    }

    fn posterior(&self, terms: &[usize]) -> Vec<f64> {
        let logp: Vec<f64> = (0..self.topics())
            .map(|c| {
                self.topic_prior[c].ln()
                    + terms
                        .iter()
                        .map(|&t| self.topic_term[c][t].ln())
                        .sum::<f64>()
            })
            .collect();
        let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logp.iter().map(|l| (l - max).exp()).collect();
        let s: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / s).collect()
    }

    fn fold_in(&self, terms: &[usize], sweeps: usize, burn_in: usize) -> Vec<f64> {
        let k = self.topics();
        if k == 1 {
            return vec![1.0];
        }
        // Seeded by the term set, so the result depends on neither call
        // order nor thread scheduling.
        let mut rng = rng::seeded(rng::derive(self.seed, rng::hash_ids(terms)));
        let mut counts = vec![0usize; k];
        let mut z: Vec<usize> = terms
            .iter()
            .map(|_| {
                let c = rng.gen_range(0..k);
                counts[c] += 1;
                c
            })
            .collect();
        let mut theta = vec![0.0; k];
        let mut weights = vec![0.0; k];
        let n = terms.len() as f64;
        let kept = sweeps.saturating_sub(burn_in).max(1);
        for sweep in 0..burn_in + kept {
            for (i, &w) in terms.iter().enumerate() {
                counts[z[i]] -= 1;
                for (c, wt) in weights.iter_mut().enumerate() {
                    *wt = (counts[c] as f64 + self.alpha) * self.topic_term[c][w];
                }
                z[i] = sample_index(&weights, &mut rng);
                counts[z[i]] += 1;
            }
            if sweep >= burn_in {
                for c in 0..k {
                    theta[c] += (counts[c] as f64 + self.alpha) / (n + k as f64 * self.alpha);
                }
            }
        }
        let s: f64 = theta.iter().sum();
        theta.into_iter().map(|t| t / s).collect()
    }

    /// p(φ|τ) ∝ p(τ|φ) p(φ).
    pub fn term_topic_posterior(&self, term: usize) -> Vec<f64> {
        let joint: Vec<f64> = (0..self.topics())
            .map(|c| self.topic_term[c][term] * self.topic_prior[c])
            .collect();
        let s: f64 = joint.iter().sum();
        joint.into_iter().map(|j| j / s).collect()
    }

    /// KL-style relatedness between two terms under topic weights θ, with
    /// equal term priors p(τ) = 1/|Γ|:
    /// Σ_c θ_c |Γ| (p(τ1|φ_c) − p(τ2|φ_c)) ln(p(τ1|φ_c)/p(τ2|φ_c)).
    pub fn topic_kl_relatedness(&self, t1: usize, t2: usize, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.topics() {
            return Err(Error::TopicDimensionMismatch);
        }
        let v = self.vocab_size();
        if t1 >= v || t2 >= v {
            return Err(Error::TopicDimensionMismatch);
        }
        let prior = 1.0 / v as f64;
        Ok((0..self.topics())
            .map(|c| {
                let p1 = self.topic_term[c][t1].max(KL_FLOOR);
                let p2 = self.topic_term[c][t2].max(KL_FLOOR);
                theta[c] / prior * (p1 - p2) * (p1.ln() - p2.ln())
            })
            .sum())
    }
}

/// Floors every component at [`KL_FLOOR`] and renormalizes.
pub fn smooth(l: &[f64]) -> Vec<f64> {
    let floored: Vec<f64> = l.iter().map(|&x| x.max(KL_FLOOR)).collect();
    let s: f64 = floored.iter().sum();
    floored.into_iter().map(|x| x / s).collect()
}

/// Symmetric KL divergence Σ_c (a_c − b_c) ln(a_c / b_c) of smoothed contexts.
pub fn context_kl(l1: &[f64], l2: &[f64]) -> Result<f64> {
    if l1.len() != l2.len() {
        return Err(Error::TopicDimensionMismatch);
    }
    let a = smooth(l1);
    let b = smooth(l2);
    Ok(a.iter()
        .zip(&b)
        .map(|(&x, &y)| (x - y) * (x.ln() - y.ln()))
        .sum())
}

/// Cluster purity of `assigned` labels against `truth`: each assigned
/// cluster is credited with its most common true label.
pub fn purity(assigned: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(assigned.len(), truth.len());
    if assigned.is_empty() {
        return 0.0;
    }
    let k = assigned.iter().max().map_or(0, |m| m + 1);
    let t = truth.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; t]; k];
    for (&a, &b) in assigned.iter().zip(truth) {
        table[a][b] += 1;
    }
    let hits: usize = table
        .iter()
        .map(|r| r.iter().copied().max().unwrap_or(0))
        .sum();
    hits as f64 / assigned.len() as f64
}

/// Most probable topic of each context.
pub fn dominant(contexts: &[Vec<f64>]) -> Vec<usize> {
    contexts.iter().map(|l| argmax(l)).collect()
}
