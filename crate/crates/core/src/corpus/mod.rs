//! Corpus ingestion and the term/document representations built from it.
//!
//! A corpus is a list of documents, each a set of descriptive terms drawn
//! from a shared vocabulary. On disk: UTF-8, one document per line, terms
//! separated by TAB (terms may contain spaces).

mod pipeline;
mod sampling;
mod synth;
mod usage;

pub use pipeline::FeaturePipeline;
pub use sampling::{
    corrupt_document, split_corpus, synthesize_negatives, Corruption, NegativePair, Split,
};
pub use synth::{generate_synthetic_corpus, write_truth, SynthConfig, SyntheticCorpus};
pub use usage::{bow, bow_complement, to_targets, TermFeatures, UsageMatrix};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered set of unique terms with a reverse index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from terms in order; later duplicates are ignored.
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary {
            terms: Vec::new(),
            index: HashMap::new(),
        };
        for t in terms {
            vocab.intern(t.into());
        }
        vocab
    }

    fn intern(&mut self, term: String) -> usize {
        if let Some(&i) = self.index.get(&term) {
            return i;
        }
        let i = self.terms.len();
        self.index.insert(term.clone(), i);
        self.terms.push(term);
        i
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(terms: Vec<String>) -> Self {
        Vocabulary::new(terms)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.terms
    }
}

/// A set of distinct vocabulary indices, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Document {
    term_ids: Vec<usize>,
}

impl Document {
    /// Validates and normalizes a term-id set. Duplicates collapse.
    pub fn new(mut term_ids: Vec<usize>, vocab_size: usize) -> Result<Self> {
        term_ids.sort_unstable();
        term_ids.dedup();
        if term_ids.is_empty() {
            return Err(Error::InvalidDocument("empty document".into()));
        }
        if let Some(&bad) = term_ids.iter().find(|&&t| t >= vocab_size) {
            return Err(Error::InvalidDocument(format!(
                "term index {bad} outside vocabulary of {vocab_size}"
            )));
        }
        Ok(Document { term_ids })
    }

    pub fn term_ids(&self) -> &[usize] {
        &self.term_ids
    }

    pub fn len(&self) -> usize {
        self.term_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.term_ids.is_empty()
    }

    pub fn contains(&self, term: usize) -> bool {
        self.term_ids.binary_search(&term).is_ok()
    }

    /// Maps term strings through `vocab`, dropping out-of-vocabulary terms.
    pub fn from_terms<S: AsRef<str>>(terms: &[S], vocab: &Vocabulary) -> Result<Self> {
        let ids: Vec<usize> = terms
            .iter()
            .filter_map(|t| vocab.index_of(t.as_ref()))
            .collect();
        if ids.is_empty() {
            return Err(Error::NoInVocabularyContext);
        }
        Document::new(ids, vocab.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub vocabulary: Vocabulary,
    pub documents: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus from per-document term lists; the vocabulary follows
    /// first-appearance order.
    pub fn from_term_lists<S: AsRef<str>>(docs: &[Vec<S>]) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut vocabulary = Vocabulary::new(Vec::<String>::new());
        let mut ids = Vec::with_capacity(docs.len());
        for doc in docs {
            let d: Vec<usize> = doc
                .iter()
                .map(|t| vocabulary.intern(t.as_ref().to_string()))
                .collect();
            ids.push(d);
        }
        let n = vocabulary.len();
        let documents = ids
            .into_iter()
            .map(|d| Document::new(d, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Corpus {
            vocabulary,
            documents,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// Documents at `indices`, sharing this corpus's vocabulary.
    pub fn select(&self, indices: &[usize]) -> Vec<Document> {
        indices.iter().map(|&i| self.documents[i].clone()).collect()
    }

    /// Serializes back to the TAB-delimited line format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            let line: Vec<&str> = doc
                .term_ids()
                .iter()
                .map(|&t| self.vocabulary.term(t))
                .collect();
            out.push_str(&line.join("\t"));
            out.push('\n');
        }
        out
    }
}

/// Splits one corpus line into trimmed, non-empty terms with set semantics
/// (first occurrence wins).
pub fn split_terms(line: &str) -> Vec<String> {
    let mut seen = Vec::<String>::new();
    for raw in line.trim_end_matches('\r').split('\t') {
        let t = raw.trim();
        if !t.is_empty() && !seen.iter().any(|s| s == t) {
            seen.push(t.to_string());
        }
    }
    seen
}

fn is_blank(line: &str) -> bool {
    line.chars().all(|c| c == ' ' || c == '\r')
}

/// Parses the TAB-delimited corpus format.
pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let mut docs = Vec::new();
    for (n, line) in text.split('\n').enumerate() {
        if is_blank(line) {
            continue;
        }
        let terms = split_terms(line);
        if terms.is_empty() {
            return Err(Error::MalformedLine(n + 1));
        }
        docs.push(terms);
    }
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Corpus::from_term_lists(&docs)
}

/// Parses query/document lines without building a vocabulary; blank lines
/// are skipped.
pub fn parse_term_lines(text: &str) -> Result<Vec<Vec<String>>> {
    let mut out = Vec::new();
    for (n, line) in text.split('\n').enumerate() {
        if is_blank(line) {
            continue;
        }
        let terms = split_terms(line);
        if terms.is_empty() {
            return Err(Error::MalformedLine(n + 1));
        }
        out.push(terms);
    }
    Ok(out)
}
