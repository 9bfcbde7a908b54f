//! Query files: one query per line, TAB-separated terms.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use ce_siamese_core::corpus::{parse_term_lines, Document, Vocabulary};
use ce_siamese_core::Error;

/// A focused term with its context; the context always contains the term.
pub struct PrimedQuery {
    pub term: usize,
    pub context: Document,
}

pub fn read_term_lines(path: &Path) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_term_lines(&text)?)
}

fn lookup(vocab: &Vocabulary, term: &str) -> Result<usize> {
    Ok(vocab
        .index_of(term)
        .ok_or_else(|| Error::UnknownTerm(term.to_string()))?)
}

fn document(vocab: &Vocabulary, terms: &[String]) -> Result<Document> {
    let ids = terms
        .iter()
        .map(|t| lookup(vocab, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Document::new(ids, vocab.len())?)
}

/// `term<TAB>ctx1<TAB>ctx2…` lines.
pub fn read_primed(path: &Path, vocab: &Vocabulary) -> Result<Vec<PrimedQuery>> {
    read_term_lines(path)?
        .iter()
        .map(|line| {
            Ok(PrimedQuery {
                term: lookup(vocab, &line[0])?,
                context: document(vocab, line)?,
            })
        })
        .collect()
}

/// `ctx1<TAB>ctx2…` lines.
pub fn read_documents(path: &Path, vocab: &Vocabulary) -> Result<Vec<Document>> {
    read_term_lines(path)?
        .iter()
        .map(|line| document(vocab, line))
        .collect()
}

pub fn names(vocab: &Vocabulary, doc: &Document) -> Vec<String> {
    doc.term_ids()
        .iter()
        .map(|&t| vocab.term(t).to_string())
        .collect()
}
