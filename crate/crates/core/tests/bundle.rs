//! Model-file persistence and rejection of damaged files.

use ce_siamese_core::bundle::ModelBundle;
use ce_siamese_core::config::Config;
use ce_siamese_core::corpus::{generate_synthetic_corpus, SynthConfig};
use ce_siamese_core::pipeline::NetworkStage;
use ce_siamese_core::rng::seeded;
use ce_siamese_core::Error;

fn trained() -> ModelBundle {
    let cfg = SynthConfig {
        vocab_size: 12,
        docs: 40,
        min_cardinality: 3,
        max_cardinality: 4,
        ..SynthConfig::default()
    };
    let s = generate_synthetic_corpus(&cfg, &mut seeded(3)).unwrap();
    let config = Config::from_text(
        "topics = 2\nhidden = 6,3\nautoencoder.iterations = 5\n\
         prediction.max_epochs = 3\nsiamese.max_epochs = 2\n",
    )
    .unwrap();
    let mut b = ModelBundle::ingest(&s.corpus, config, 3).unwrap();
    b.fit_lda().unwrap();
    b.pretrain().unwrap();
    b.train_prediction(|_| {}).unwrap();
    b.train_siamese(|_| {}).unwrap();
    b
}

#[test]
fn round_trip_is_bit_exact() {
    let b = trained();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    b.save(&path).unwrap();
    let back = ModelBundle::load(&path).unwrap();
    assert_eq!(back, b);
    assert_eq!(
        back.to_json().unwrap(),
        std::fs::read_to_string(&path).unwrap()
    );
    assert_eq!(
        back.network(NetworkStage::Siamese).unwrap().layer_sizes(),
        vec![b.pipeline.dim() + 2, 6, 3, 12]
    );
}

#[test]
fn untrained_stages_stay_absent_after_reload() {
    let mut b = trained();
    b.fit_lda().unwrap();
    let back = ModelBundle::from_json(&b.to_json().unwrap()).unwrap();
    assert!(matches!(
        back.network(NetworkStage::Prediction),
        Err(Error::StagePrerequisiteMissing)
    ));
}

#[test]
fn damaged_files_are_rejected() {
    let json = trained().to_json().unwrap();
    let tampered = json.replacen("ce-siamese/1", "ce-siamese/99", 1);
    assert!(matches!(
        ModelBundle::from_json(&tampered),
        Err(Error::UnsupportedModelVersion)
    ));
    assert!(matches!(
        ModelBundle::from_json(&json[..json.len() / 2]),
        Err(Error::CorruptModelFile)
    ));
    assert!(matches!(
        ModelBundle::from_json("{}"),
        Err(Error::CorruptModelFile)
    ));
}

#[test]
fn inconsistent_bundles_are_not_written() {
    let mut b = trained();
    b.vocabulary = ce_siamese_core::corpus::Vocabulary::new(["only"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    assert!(matches!(b.save(&path), Err(Error::InconsistentBundle(_))));
    assert!(!path.exists());
}
