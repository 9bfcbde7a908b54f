use rand::seq::SliceRandom;
use rand::Rng as _;

use super::Corpus;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Planted-topic corpus generator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub topics: usize,
    pub vocab_size: usize,
    pub docs: usize,
    pub min_cardinality: usize,
    pub max_cardinality: usize,
    /// Number of terms shared by two neighbouring topics.
    pub polysemous: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            topics: 2,
            vocab_size: 30,
            docs: 300,
            min_cardinality: 4,
            max_cardinality: 6,
            polysemous: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Planted topic of each document.
    pub topic_of_doc: Vec<usize>,
    /// Term strings of each topic's support, exclusive terms first.
    pub supports: Vec<Vec<String>>,
    pub polysemous_terms: Vec<String>,
}

impl SyntheticCorpus {
    /// Topics whose support contains `term`.
    pub fn topics_of_term(&self, term: &str) -> Vec<usize> {
        (0..self.supports.len())
            .filter(|&c| self.supports[c].iter().any(|t| t == term))
            .collect()
    }
}

/// Regular terms `t{c}_{k}` are dealt evenly to topics; polysemous term
/// `poly{j}` joins topics `j mod T` and `(j+1) mod T`. Every document draws
/// one topic uniformly, a cardinality uniformly from the configured range,
/// and that many distinct terms from the topic's support.
pub fn generate_synthetic_corpus(cfg: &SynthConfig, rng: &mut Rng) -> Result<SyntheticCorpus> {
    let t = cfg.topics;
    if t == 0 || cfg.docs == 0 {
        return Err(Error::InvalidSynthConfig(
            "topics and docs must be positive".into(),
        ));
    }
    if cfg.vocab_size < 3 * t {
        return Err(Error::InvalidSynthConfig(
            "vocabulary smaller than 3 × topics".into(),
        ));
    }
    if cfg.min_cardinality == 0 || cfg.min_cardinality > cfg.max_cardinality {
        return Err(Error::InvalidSynthConfig("empty cardinality range".into()));
    }
    if cfg.polysemous > 0 && t < 2 {
        return Err(Error::InvalidSynthConfig(
            "polysemy needs two topics".into(),
        ));
    }
    let regular = cfg
        .vocab_size
        .checked_sub(cfg.polysemous)
        .filter(|&r| r >= t)
        .ok_or_else(|| Error::InvalidSynthConfig("too many polysemous terms".into()))?;

    let mut supports: Vec<Vec<String>> = vec![Vec::new(); t];
    for i in 0..regular {
        let c = i % t;
        let k = supports[c].len();
        supports[c].push(format!("t{c}_{k}"));
    }
    let mut polysemous_terms = Vec::new();
    for j in 0..cfg.polysemous {
        let name = format!("poly{j}");
        supports[j % t].push(name.clone());
        supports[(j + 1) % t].push(name.clone());
        polysemous_terms.push(name);
    }
    if supports.iter().any(|s| s.len() < cfg.max_cardinality) {
        return Err(Error::CardinalityExceedsSupport);
    }

    let mut docs = Vec::with_capacity(cfg.docs);
    let mut topic_of_doc = Vec::with_capacity(cfg.docs);
    for _ in 0..cfg.docs {
        let c = rng.gen_range(0..t);
        let m = rng.gen_range(cfg.min_cardinality..=cfg.max_cardinality);
        let terms: Vec<String> = supports[c].choose_multiple(rng, m).cloned().collect();
        docs.push(terms);
        topic_of_doc.push(c);
    }
    Ok(SyntheticCorpus {
        corpus: Corpus::from_term_lists(&docs)?,
        topic_of_doc,
        supports,
        polysemous_terms,
    })
}

/// Ground-truth sidecar: one `doc_index<TAB>topic_id` line per document.
pub fn write_truth(topic_of_doc: &[usize]) -> String {
    topic_of_doc
        .iter()
        .enumerate()
        .map(|(d, c)| format!("{d}\t{c}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn doc_terms(s: &SyntheticCorpus, d: usize) -> Vec<&str> {
        s.corpus.documents[d]
            .term_ids()
            .iter()
            .map(|&i| s.corpus.vocabulary.term(i))
            .collect()
    }

    #[test]
    fn disjoint_topics_share_no_terms() {
        let cfg = SynthConfig {
            polysemous: 0,
            docs: 60,
            ..SynthConfig::default()
        };
        let s = generate_synthetic_corpus(&cfg, &mut seeded(4)).unwrap();
        for a in 0..60 {
            for b in 0..60 {
                if s.topic_of_doc[a] != s.topic_of_doc[b] {
                    let ta = doc_terms(&s, a);
                    assert!(doc_terms(&s, b).iter().all(|t| !ta.contains(t)));
                }
            }
        }
    }

    #[test]
    fn polysemous_term_in_both_topics() {
        let s = generate_synthetic_corpus(&SynthConfig::default(), &mut seeded(7)).unwrap();
        assert_eq!(s.topics_of_term("poly0"), vec![0, 1]);
        let mut seen = [false; 2];
        for d in 0..s.corpus.len() {
            if doc_terms(&s, d).contains(&"poly0") {
                seen[s.topic_of_doc[d]] = true;
            }
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn documents_respect_supports_and_cardinality() {
        let s = generate_synthetic_corpus(&SynthConfig::default(), &mut seeded(2)).unwrap();
        assert_eq!(s.corpus.vocab_size(), 30);
        for d in 0..s.corpus.len() {
            let terms = doc_terms(&s, d);
            assert!((4..=6).contains(&terms.len()));
            let support = &s.supports[s.topic_of_doc[d]];
            assert!(terms.iter().all(|t| support.iter().any(|x| x == t)));
        }
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig::default();
        assert_eq!(
            generate_synthetic_corpus(&cfg, &mut seeded(11)).unwrap(),
            generate_synthetic_corpus(&cfg, &mut seeded(11)).unwrap()
        );
    }

    #[test]
    fn config_errors() {
        let big = SynthConfig {
            max_cardinality: 20,
            ..SynthConfig::default()
        };
        assert_eq!(
            generate_synthetic_corpus(&big, &mut seeded(0)),
            Err(Error::CardinalityExceedsSupport)
        );
        let small = SynthConfig {
            vocab_size: 5,
            ..SynthConfig::default()
        };
        assert!(matches!(
            generate_synthetic_corpus(&small, &mut seeded(0)),
            Err(Error::InvalidSynthConfig(_))
        ));
    }

    #[test]
    fn truth_sidecar_format() {
        assert_eq!(write_truth(&[1, 0]), "0\t1\n1\t0\n");
    }
}
