//! OOV features on a hand-sized corpus.

use ce_siamese_core::corpus::{parse_corpus, Document};
use ce_siamese_core::oov::{oov_term_features, OovQuery};
use ce_siamese_core::Error;

fn docs(lines: &[&[&str]]) -> Vec<Vec<String>> {
    lines
        .iter()
        .map(|d| d.iter().map(|t| t.to_string()).collect())
        .collect()
}

#[test]
fn features_follow_the_extended_idf() {
    let corpus = parse_corpus("a\tb\na\tc\nb\tc\n").unwrap();
    let supplied = docs(&[&["z", "a"], &["z", "a", "b"], &["q", "b"]]);
    let f = oov_term_features("z", &corpus.vocabulary, &corpus.documents, &supplied).unwrap();
    // Five documents: three training plus the two supplied ones containing z.
    let idf = |df: f64| (5.0f64 / (1.0 + df)).ln();
    let (a, b, c) = (0, 1, 2);
    let want = |t: usize| match t {
        0 => 2.0 * idf(2.0) * idf(4.0),
        1 => idf(2.0) * idf(3.0),
        _ => 0.0,
    };
    for t in [a, b, c] {
        assert!(
            (f[t] - want(t)).abs() < 1e-15,
            "term {t}: {} vs {}",
            f[t],
            want(t)
        );
    }
    assert_eq!(f[a], 0.0);
}

#[test]
fn rejects_known_and_unseen_terms() {
    let corpus = parse_corpus("a\tb\n").unwrap();
    let supplied = docs(&[&["b"]]);
    assert!(matches!(
        oov_term_features("a", &corpus.vocabulary, &corpus.documents, &supplied),
        Err(Error::NotOutOfVocabulary(_))
    ));
    assert!(matches!(
        oov_term_features("z", &corpus.vocabulary, &corpus.documents, &supplied),
        Err(Error::OovUnseen)
    ));
}

#[test]
fn query_context_drops_unknown_terms() {
    let corpus = parse_corpus("a\tb\tc\n").unwrap();
    let q = OovQuery::parse("z\tc\tnope\ta").unwrap();
    let ctx = q.in_vocabulary_context(&corpus.vocabulary).unwrap();
    assert_eq!(ctx, Document::new(vec![0, 2], 3).unwrap());
    let empty = OovQuery::parse("z\tnope").unwrap();
    assert!(empty.in_vocabulary_context(&corpus.vocabulary).is_err());
}
