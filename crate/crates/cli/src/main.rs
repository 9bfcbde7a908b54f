//! `ce-siamese`: ingest corpora, train the embedding stages, and run priming
//! queries and evaluations. Results are written to stdout as one JSON object
//! per line.

mod queries;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ce_siamese_core::bundle::ModelBundle;
use ce_siamese_core::config::Config;
use ce_siamese_core::corpus::{generate_synthetic_corpus, parse_corpus, write_truth, SynthConfig};
use ce_siamese_core::oov::{oov_concept_embed, oov_feature_embed, prime_oov, OovQuery};
use ce_siamese_core::pipeline::{ModelKind, NetworkStage};
use ce_siamese_core::priming::{
    corrupted_queries, evaluate, queries as doc_queries, Protocol, RankedList,
};
use ce_siamese_core::rng::{derive, seeded};
use ce_siamese_core::training::Progress;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

/// Seed used when none is given.
const DEFAULT_SEED: u64 = 1;
/// Stream for corrupting evaluation queries.
const EVAL_CORRUPTION_STREAM: u64 = 101;

#[derive(Parser)]
#[command(
    name = "ce-siamese",
    version,
    about = "Contextualized concept embeddings of descriptive terms"
)]
struct Cli {
    /// Random seed; stage commands default to the seed stored in the model.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Configuration override, e.g. `--set siamese.alpha=500`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output path (model file, or corpus file for `synth`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a corpus, split it and fit the feature pipeline and baselines.
    Ingest { corpus: PathBuf },
    /// Generate a synthetic topic corpus.
    Synth(SynthArgs),
    /// Fit the topic model.
    Lda(ModelArg),
    /// Layer-wise autoencoder pretraining.
    Pretrain(ModelArg),
    /// Stage 1: prediction training.
    TrainPredict(ModelArg),
    /// Stage 2: Siamese training.
    TrainSiamese(ModelArg),
    /// Concept embeddings for `term<TAB>context…` query lines.
    Embed {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, default_value = "siamese-ce")]
        stage: StageArg,
    },
    /// Rank the vocabulary for `term<TAB>context…` query lines.
    Prime(PrimeArgs),
    /// Rank the vocabulary for `context…` query lines (extended priming).
    Eprime(PrimeArgs),
    /// Embed out-of-vocabulary terms from `oov_term<TAB>context…` lines.
    OovEmbed {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, value_enum, default_value = "concept")]
        method: OovMethod,
        /// Documents containing the OOV terms (corpus format); needed by the
        /// feature method.
        #[arg(long)]
        supplied: Option<PathBuf>,
        #[arg(long, default_value = "siamese-ce")]
        stage: StageArg,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Priming metrics over a split or a query file.
    Eval(EvalArgs),
}

#[derive(Args)]
struct ModelArg {
    /// Model file to read.
    #[arg(long)]
    model_file: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    topics: usize,
    #[arg(long, default_value_t = 30)]
    terms: usize,
    #[arg(long, default_value_t = 300)]
    docs: usize,
    #[arg(long, default_value_t = 4)]
    min_cardinality: usize,
    #[arg(long, default_value_t = 6)]
    max_cardinality: usize,
    #[arg(long, default_value_t = 1)]
    polysemous: usize,
}

#[derive(Args)]
struct PrimeArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long = "model", default_value = "siamese-ce")]
    kind: String,
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long = "model", default_value = "siamese-ce")]
    kind: String,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Query file instead of a split; each line's terms are the ground truth.
    #[arg(long, conflicts_with = "split")]
    queries: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "priming")]
    protocol: ProtocolArg,
    /// Fraction of each context removed before querying.
    #[arg(long, default_value_t = 0.0)]
    missing_rate: f64,
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    /// Also emit one record per query.
    #[arg(long)]
    per_query: bool,
    /// Write the 11-point precision curve as CSV.
    #[arg(long)]
    curve_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Validation,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Priming,
    Extended,
}

#[derive(Clone, Copy, ValueEnum)]
enum OovMethod {
    Concept,
    Feature,
}

#[derive(Clone, Copy)]
struct StageArg(NetworkStage);

impl std::str::FromStr for StageArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "siamese-ce" | "siamese" => Ok(StageArg(NetworkStage::Siamese)),
            "ce" | "prediction" => Ok(StageArg(NetworkStage::Prediction)),
            _ => Err(format!("unknown stage {s:?} (expected siamese-ce or ce)")),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn emit(record: &Value) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{record}")?;
    Ok(())
}

fn progress_record(p: &Progress) -> Value {
    let mut v = serde_json::to_value(p).expect("progress serializes");
    v["event"] = json!("progress");
    v
}

impl Cli {
    fn config_layers(&self, base: Config) -> Result<Config> {
        let mut config = base;
        if let Some(path) = &self.config {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            config.apply_text(&text)?;
        }
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .with_context(|| format!("override {o:?} is not KEY=VALUE"))?;
            config.set(k.trim(), v.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    fn load(&self, arg: &ModelArg) -> Result<ModelBundle> {
        let mut b = ModelBundle::load(&arg.model_file)
            .with_context(|| format!("loading {}", arg.model_file.display()))?;
        if self.config.is_some() || !self.overrides.is_empty() {
            b.config = self.config_layers(b.config.clone())?;
        }
        if let Some(seed) = self.seed {
            b.seed = seed;
        }
        Ok(b)
    }

    /// Saves to `--out`, or back over the input model file.
    fn store(&self, b: &ModelBundle, arg: &ModelArg) -> Result<PathBuf> {
        let path = self.out.clone().unwrap_or_else(|| arg.model_file.clone());
        b.save(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

fn saved(stage: &str, path: &Path) -> Value {
    json!({"event": "saved", "stage": stage, "path": path.display().to_string()})
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest { corpus } => ingest(&cli, corpus),
        Command::Synth(args) => synth(&cli, args),
        Command::Lda(m) => {
            let mut b = cli.load(m)?;
            b.fit_lda()?;
            let lda = b.lda()?;
            emit(
                &json!({"event": "lda", "topics": lda.topics(), "topic_prior": lda.topic_prior()}),
            )?;
            emit(&saved("lda", &cli.store(&b, m)?))
        }
        Command::Pretrain(m) => {
            let mut b = cli.load(m)?;
            for (layer, h) in b.pretrain()?.iter().enumerate() {
                emit(&json!({
                    "event": "pretrain", "layer": layer + 1, "iterations": h.len(),
                    "initial_loss": h.first(), "final_loss": h.last(),
                }))?;
            }
            emit(&saved("pretrain", &cli.store(&b, m)?))
        }
        Command::TrainPredict(m) => {
            let mut b = cli.load(m)?;
            let mut failed = None;
            b.train_prediction(|p| {
                if let Err(e) = emit(&progress_record(p)) {
                    failed.get_or_insert(e);
                }
            })?;
            if let Some(e) = failed {
                return Err(e);
            }
            emit(&saved("prediction", &cli.store(&b, m)?))
        }
        Command::TrainSiamese(m) => {
            let mut b = cli.load(m)?;
            let mut failed = None;
            b.train_siamese(|p| {
                if let Err(e) = emit(&progress_record(p)) {
                    failed.get_or_insert(e);
                }
            })?;
            if let Some(e) = failed {
                return Err(e);
            }
            emit(&saved("siamese", &cli.store(&b, m)?))
        }
        Command::Embed {
            model,
            queries,
            stage,
        } => embed(&cli, model, queries, stage.0),
        Command::Prime(args) => prime(&cli, args, Protocol::Priming),
        Command::Eprime(args) => prime(&cli, args, Protocol::Extended),
        Command::OovEmbed {
            model,
            queries,
            method,
            supplied,
            stage,
            top,
        } => oov_embed(
            &cli,
            model,
            queries,
            *method,
            supplied.as_deref(),
            stage.0,
            *top,
        ),
        Command::Eval(args) => eval(&cli, args),
    }
}

fn ingest(cli: &Cli, corpus_path: &Path) -> Result<()> {
    let text = fs::read_to_string(corpus_path)
        .with_context(|| format!("reading {}", corpus_path.display()))?;
    let corpus = parse_corpus(&text)?;
    let config = cli.config_layers(Config::default())?;
    let b = ModelBundle::ingest(&corpus, config, cli.seed.unwrap_or(DEFAULT_SEED))?;
    let sizes: Vec<usize> = corpus.documents.iter().map(|d| d.len()).collect();
    emit(&json!({
        "event": "ingest",
        "documents": corpus.len(),
        "terms": corpus.vocab_size(),
        "mean_cardinality": sizes.iter().sum::<usize>() as f64 / sizes.len() as f64,
        "max_cardinality": sizes.iter().max(),
        "train": b.split.train.len(),
        "validation": b.split.validation.len(),
        "test": b.split.test.len(),
        "feature_dim": b.pipeline.dim(),
        "lsa_dim": b.baselines.lsa.as_ref().map(|t| t.dim()),
    }))?;
    match &cli.out {
        Some(path) => {
            b.save(path)
                .with_context(|| format!("writing {}", path.display()))?;
            emit(&saved("ingest", path))
        }
        None => Ok(()),
    }
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        topics: a.topics,
        vocab_size: a.terms,
        docs: a.docs,
        min_cardinality: a.min_cardinality,
        max_cardinality: a.max_cardinality,
        polysemous: a.polysemous,
    };
    let seed = cli.seed.unwrap_or(DEFAULT_SEED);
    let s = generate_synthetic_corpus(&cfg, &mut seeded(seed))?;
    let text = s.corpus.to_text();
    match &cli.out {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
            let mut truth = path.clone().into_os_string();
            truth.push(".truth");
            fs::write(&truth, write_truth(&s.topic_of_doc))?;
            emit(&json!({
                "event": "synth", "documents": s.corpus.len(), "terms": s.corpus.vocab_size(),
                "polysemous": s.polysemous_terms, "path": path.display().to_string(),
                "truth": PathBuf::from(truth).display().to_string(),
            }))
        }
        None => {
            io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn top_terms(b: &ModelBundle, list: &RankedList, n: usize) -> Vec<Value> {
    list.terms
        .iter()
        .zip(&list.scores)
        .take(n)
        .map(|(&t, &s)| json!({"term": b.vocabulary.term(t), "score": s}))
        .collect()
}

fn embed(cli: &Cli, m: &ModelArg, path: &Path, stage: NetworkStage) -> Result<()> {
    let b = cli.load(m)?;
    let inputs = b.term_inputs()?;
    let model = b.concept_model(&inputs, stage)?;
    for q in queries::read_primed(path, &b.vocabulary)? {
        let l = model.context(&q.context)?;
        emit(&json!({
            "term": b.vocabulary.term(q.term),
            "context": queries::names(&b.vocabulary, &q.context),
            "local_context": l,
            "ce": model.embed(q.term, &l)?,
        }))?;
    }
    Ok(())
}

fn prime(cli: &Cli, a: &PrimeArgs, protocol: Protocol) -> Result<()> {
    let b = cli.load(&a.model)?;
    let kind: ModelKind = a.kind.parse()?;
    let inputs = b.term_inputs()?;
    let model = b.priming_model(kind, &inputs, b.seed)?;
    match protocol {
        Protocol::Priming => {
            for q in queries::read_primed(&a.queries, &b.vocabulary)? {
                let list = model.prime(q.term, &q.context)?;
                emit(&json!({
                    "term": b.vocabulary.term(q.term),
                    "context": queries::names(&b.vocabulary, &q.context),
                    "primed": top_terms(&b, &list, a.top),
                }))?;
            }
        }
        Protocol::Extended => {
            for ctx in queries::read_documents(&a.queries, &b.vocabulary)? {
                let list = model.extended_prime(&ctx)?;
                emit(&json!({
                    "context": queries::names(&b.vocabulary, &ctx),
                    "primed": top_terms(&b, &list, a.top),
                }))?;
            }
        }
    }
    Ok(())
}

fn oov_embed(
    cli: &Cli,
    m: &ModelArg,
    path: &Path,
    method: OovMethod,
    supplied: Option<&Path>,
    stage: NetworkStage,
    top: usize,
) -> Result<()> {
    let b = cli.load(m)?;
    let inputs = b.term_inputs()?;
    let model = b.concept_model(&inputs, stage)?;
    let supplied = match supplied {
        Some(p) => queries::read_term_lines(p)?,
        None if matches!(method, OovMethod::Feature) => {
            bail!("--supplied is required by the feature method")
        }
        None => Vec::new(),
    };
    let train = b.train_docs();
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    for line in text.lines() {
        let Some(q) = OovQuery::parse(line) else {
            continue;
        };
        let ctx = q.in_vocabulary_context(&b.vocabulary)?;
        let emb = match method {
            OovMethod::Concept => oov_concept_embed(&model, &ctx)?,
            OovMethod::Feature => oov_feature_embed(
                &model,
                &b.pipeline,
                &b.vocabulary,
                &train,
                &q.term,
                &ctx,
                &supplied,
            )?,
        };
        let list = prime_oov(&model, &emb, &ctx)?;
        emit(&json!({
            "term": q.term,
            "method": match method { OovMethod::Concept => "concept", OovMethod::Feature => "feature" },
            "context": queries::names(&b.vocabulary, &ctx),
            "ce": emb.ce,
            "primed": top_terms(&b, &list, top),
        }))?;
    }
    Ok(())
}

fn eval(cli: &Cli, a: &EvalArgs) -> Result<()> {
    let b = cli.load(&a.model)?;
    let kind: ModelKind = a.kind.parse()?;
    let protocol = match a.protocol {
        ProtocolArg::Priming => Protocol::Priming,
        ProtocolArg::Extended => Protocol::Extended,
    };
    let (docs, source) = match &a.queries {
        Some(p) => (
            queries::read_documents(p, &b.vocabulary)?,
            p.display().to_string(),
        ),
        None => {
            let (docs, name) = match a.split {
                SplitArg::Train => (b.train_docs(), "train"),
                SplitArg::Validation => (b.validation_docs(), "validation"),
                SplitArg::Test => (b.test_docs(), "test"),
            };
            (docs, name.to_string())
        }
    };
    let qs = if a.missing_rate > 0.0 {
        let mut rng = seeded(derive(b.seed, EVAL_CORRUPTION_STREAM));
        corrupted_queries(
            &docs,
            protocol,
            a.missing_rate,
            b.vocabulary.len(),
            &mut rng,
        )?
    } else {
        doc_queries(&docs, protocol)
    };
    if qs.is_empty() {
        bail!("no queries to evaluate");
    }
    let ks = a.ks.clone().unwrap_or_else(|| b.config.eval_ks.clone());
    let inputs = b.term_inputs()?;
    let model = b.priming_model(kind, &inputs, b.seed)?;
    let (per_query, report) = evaluate(model.as_ref(), &qs, &ks)?;
    if a.per_query {
        for r in &per_query {
            let mut v = serde_json::to_value(r)?;
            v["event"] = json!("query");
            emit(&v)?;
        }
    }
    if let Some(path) = &a.curve_csv {
        fs::write(path, report.curve_csv())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let p_at_k: serde_json::Map<String, Value> = report
        .p_at_k
        .iter()
        .map(|(k, p)| (format!("p@{k}"), json!(p)))
        .collect();
    emit(&json!({
        "event": "summary",
        "model": a.kind,
        "protocol": protocol,
        "source": source,
        "missing_rate": a.missing_rate,
        "queries": report.queries,
        "map": report.map,
        "auc": report.auc,
        "p_at_k": p_at_k,
        "curve": report.curve,
    }))
}
