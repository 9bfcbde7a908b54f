//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ce_siamese_core::bundle::ModelBundle;
use ce_siamese_core::config::Config;
use ce_siamese_core::corpus::{
    generate_synthetic_corpus, synthesize_negatives, Corpus, Document, SynthConfig, SyntheticCorpus,
};
use ce_siamese_core::embed::ConceptModel;
use ce_siamese_core::linalg::euclidean;
use ce_siamese_core::network::{autoencoder_loss_grad, AutoencoderConfig, Layer, Network};
use ce_siamese_core::oov::{oov_concept_embed, oov_feature_embed, prime_oov};
use ce_siamese_core::pipeline::{ModelKind, NetworkStage};
use ce_siamese_core::priming::{
    auc, average_precision, corrupted_queries, evaluate, extended_scores, interpolated_precision,
    p_at_k, queries, MetricsReport, Protocol, QueryMetrics,
};
use ce_siamese_core::rng::{derive, seeded};
use ce_siamese_core::topics::{dominant, purity, train_lda, GibbsSampler, LdaConfig};
use ce_siamese_core::training::{
    build_instances, make_pairs, prediction_loss_grad, siamese_loss_grad, train_siamese, Instance,
    Pair, PairKind, TrainingConfig,
};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

const DESK_PROFILE: &str = include_str!("../../../configs/desk.conf");
const SEEDS: [u64; 3] = [1, 2, 3];

const FD_STEP: f64 = 1e-5;
const FD_TOLERANCE: f64 = 1e-6;
const FD_FLOOR: f64 = 1e-4;
const FD_BUDGET: Duration = Duration::from_secs(10);
const ALPHA_ZERO_TOLERANCE: f64 = 1e-12;
const METRIC_TOLERANCE: f64 = 1e-12;
const METRIC_INSTANCES: usize = 200;
const CONTEXT_RATIO: f64 = 2.0;
const CONTEXT_BUDGET: Duration = Duration::from_secs(300);
const MAP_MARGIN: f64 = 0.25;
const MAP_BUDGET: Duration = Duration::from_secs(600);
const CENTROID_TOLERANCE: f64 = 1e-15;
const HELD_OUT_TERM: &str = "t0_0";
const PURITY_FLOOR: f64 = 0.9;
const NORMALIZATION_TOLERANCE: f64 = 1e-9;
const CORRUPTION_BAND: f64 = 0.02;
const MISSING_RATES: [f64; 3] = [0.0, 0.3, 0.5];

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn desk_config() -> Config {
    Config::from_text(DESK_PROFILE).expect("desk profile parses")
}

fn synthetic(seed: u64) -> SyntheticCorpus {
    generate_synthetic_corpus(&SynthConfig::default(), &mut seeded(seed)).expect("synthetic corpus")
}

/// Runs every stage on `corpus`; returns the bundle and the progress log.
fn train_all(corpus: &Corpus, seed: u64) -> (ModelBundle, Vec<String>) {
    let mut log = Vec::new();
    let mut b = ModelBundle::ingest(corpus, desk_config(), seed).expect("ingest");
    b.fit_lda().expect("lda");
    for h in b.pretrain().expect("pretrain") {
        log.push(format!("{h:?}"));
    }
    b.train_prediction(|p| log.push(serde_json::to_string(p).unwrap()))
        .expect("stage 1");
    b.train_siamese(|p| log.push(serde_json::to_string(p).unwrap()))
        .expect("stage 2");
    (b, log)
}

struct Run {
    seed: u64,
    synth: SyntheticCorpus,
    bundle: ModelBundle,
    log: Vec<String>,
    elapsed: Duration,
}

fn run(seed: u64) -> Run {
    let start = Instant::now();
    let synth = synthetic(seed);
    let (bundle, log) = train_all(&synth.corpus, seed);
    Run {
        seed,
        synth,
        bundle,
        log,
        elapsed: start.elapsed(),
    }
}

// ---- 1. gradient correctness -------------------------------------------

fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FD_FLOOR)
}

fn worst_fd_error(net: &Network, analytic: &[f64], loss: impl Fn(&Network) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let mut plus = net.clone();
        *plus.param_mut(i) += FD_STEP;
        let mut minus = net.clone();
        *minus.param_mut(i) -= FD_STEP;
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(a, numeric));
    }
    worst
}

/// Eight instances over a 5-term vocabulary with 6-dimensional inputs.
fn small_instances() -> Vec<Instance> {
    let docs: Vec<Document> = [vec![0, 1], vec![2, 3, 4], vec![1, 3]]
        .into_iter()
        .map(|l| Document::new(l, 5).unwrap())
        .collect();
    let contexts = vec![vec![0.8, 0.2], vec![0.1, 0.9], vec![0.45, 0.55]];
    let mut rng = seeded(31);
    let term_inputs: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let negatives = synthesize_negatives(&docs, 5, &mut rng).unwrap();
    build_instances(&docs, &contexts, &term_inputs, &negatives).unwrap()
}

fn small_pairs(instances: &[Instance]) -> Vec<Pair> {
    make_pairs(instances, Some(1), 1.0, &mut seeded(5)).unwrap()
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded(1);

    let cfg = AutoencoderConfig::default();
    let enc = Layer::glorot(6, 4, &mut rng);
    let mut dec = Layer::glorot(4, 6, &mut rng);
    dec.bias = nalgebra::DVector::from_fn(6, |_, _| rng.gen_range(-0.3..0.3));
    let x = DMatrix::from_fn(6, 8, |_, _| rng.gen_range(-0.9..0.9));
    let (_, ge, gd) = autoencoder_loss_grad(&enc, &dec, &x, &cfg).unwrap();
    let pack = |e: &Layer, d: &Layer| Network::from_layers(vec![e.clone(), d.clone()]).unwrap();
    let ae = worst_fd_error(&pack(&enc, &dec), &pack(&ge, &gd).params(), |n| {
        autoencoder_loss_grad(&n.layers()[0], &n.layers()[1], &x, &cfg)
            .unwrap()
            .0
    });

    let inst = small_instances();
    let net = Network::init(&[6, 4, 3, 5], &mut rng).unwrap();
    let batch: Vec<&Instance> = inst.iter().take(8).collect();
    let (_, g) = prediction_loss_grad(&net, &batch, false).unwrap();
    let pred = worst_fd_error(&net, &g.flat(), |n| {
        prediction_loss_grad(n, &batch, false).unwrap().0
    });

    let pairs = small_pairs(&inst);
    let refs: Vec<&Pair> = pairs.iter().collect();
    let scfg = TrainingConfig {
        alpha: 3.0,
        beta: Some(1.2),
        ..TrainingConfig::siamese()
    };
    let g = siamese_loss_grad(&net, &inst, &refs, &scfg).unwrap();
    let siam = worst_fd_error(&net, &g.total().flat(), |n| {
        siamese_loss_grad(n, &inst, &refs, &scfg).unwrap().loss
    });

    let elapsed = start.elapsed();
    let worst = ae.max(pred).max(siam);
    check(
        worst < FD_TOLERANCE && elapsed < FD_BUDGET,
        format!(
            "max relative error autoencoder {ae:.1e}, prediction {pred:.1e}, siamese {siam:.1e} \
             (limit {FD_TOLERANCE:e}); {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---- 2. siamese structure ----------------------------------------------

fn siamese_structure() -> Outcome {
    let inst = small_instances();
    let pairs = small_pairs(&inst);
    let refs: Vec<&Pair> = pairs.iter().collect();
    let net = Network::init(&[6, 4, 3, 5], &mut seeded(8)).unwrap();
    let cfg = TrainingConfig {
        alpha: 3.0,
        beta: Some(1.2),
        batch_size: 2,
        max_epochs: 5,
        learning_rate: 0.05,
        ..TrainingConfig::siamese()
    };

    let (_, gd) =
        ce_siamese_core::training::siamese_distance_grad(&net, &inst, &refs, &cfg).unwrap();
    let out = gd.layers.last().unwrap();
    let output_zero = out.weights.iter().chain(out.bias.iter()).all(|&v| v == 0.0);

    let mut updates = 0;
    let mut identical = true;
    train_siamese(
        net.clone(),
        &inst,
        &pairs,
        &cfg,
        None,
        &mut seeded(9),
        |_| {},
        |towers| {
            updates += 1;
            identical &= towers[0] == towers[1];
        },
    )
    .unwrap();

    let zero = TrainingConfig {
        alpha: 0.0,
        ..cfg.clone()
    };
    let combined = siamese_loss_grad(&net, &inst, &refs, &zero).unwrap().loss;
    let side = |pick: fn(&Pair) -> usize| {
        let batch: Vec<&Instance> = refs.iter().map(|p| &inst[pick(p)]).collect();
        prediction_loss_grad(&net, &batch, zero.swap_kappa)
            .unwrap()
            .0
    };
    let gap = (combined - (side(|p| p.first) + side(|p| p.second))).abs();

    check(
        output_zero && identical && updates > 0 && gap <= ALPHA_ZERO_TOLERANCE,
        format!(
            "output-layer siamese gradient zero: {output_zero}; towers identical over {updates} updates: \
             {identical}; alpha=0 gap {gap:.1e}"
        ),
    )
}

// ---- 3. pair-loss limits -----------------------------------------------

fn loss_limits() -> Outcome {
    let (beta, rho) = (1.7, 0.5);
    let e = 0.9;
    let i1 = PairKind::I1.loss(e, 1.0, beta, rho);
    let i3 = PairKind::I3.loss(beta, 0.37, beta, rho);
    let mut ratios = Vec::new();
    for (e, sim) in [(0.3, 0.8), (1.1, 0.2), (2.5, 0.55)] {
        ratios.push(PairKind::I2.loss(e, sim, beta, rho) / PairKind::I1.loss(e, sim, beta, rho));
    }
    check(
        i1 == e * e && i3 == 0.0 && ratios.iter().all(|&r| r == rho),
        format!(
            "I1 at 𝕕=0: {i1} (E²={}); I3 at E=β: {i3}; I2/I1 ratios {ratios:?}",
            e * e
        ),
    )
}

// ---- 4. metric oracle ----------------------------------------------------

struct Oracle {
    p_at: Vec<f64>,
    ap: f64,
    curve: [f64; 11],
}

/// Brute force from the definitions, with the recall comparison done in
/// integers: recall(K) ≥ i/10 ⟺ 10·hits(K) ≥ i·|δ|.
fn oracle(list: &[usize], truth: &HashSet<usize>) -> Oracle {
    let hits = |k: usize| list[..k].iter().filter(|t| truth.contains(t)).count();
    let m = truth.len();
    let p_at: Vec<f64> = (1..=list.len())
        .map(|k| hits(k) as f64 / k as f64)
        .collect();
    let ap = (1..=m).map(|k| p_at[k - 1]).sum::<f64>() / m as f64;
    let mut curve = [0.0; 11];
    for (i, slot) in curve.iter_mut().enumerate() {
        for k in 1..=list.len() {
            if 10 * hits(k) >= i * m {
                *slot = f64::max(*slot, p_at[k - 1]);
            }
        }
    }
    Oracle { p_at, ap, curve }
}

fn metric_oracle() -> Outcome {
    let mut rng = seeded(404);
    let mut worst: f64 = 0.0;
    let mut results = Vec::new();
    let mut oracle_aps = Vec::new();
    let mut oracle_aucs = Vec::new();
    for q in 0..METRIC_INSTANCES {
        let n = rng.gen_range(1..=12);
        let mut list: Vec<usize> = (0..n).collect();
        list.shuffle(&mut rng);
        let m = rng.gen_range(1..=n);
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(&mut rng);
        ids.truncate(m);
        let truth_set: HashSet<usize> = ids.iter().copied().collect();
        let truth = Document::new(ids, n).unwrap();

        let o = oracle(&list, &truth_set);
        for k in 1..=n {
            worst = worst.max((p_at_k(&list, &truth, k).unwrap() - o.p_at[k - 1]).abs());
        }
        worst = worst.max((average_precision(&list, &truth) - o.ap).abs());
        let curve = interpolated_precision(&list, &truth);
        for (a, b) in curve.iter().zip(&o.curve) {
            worst = worst.max((a - b).abs());
        }
        let o_auc = o.curve.iter().sum::<f64>() / 11.0;
        worst = worst.max((auc(&curve) - o_auc).abs());
        results.push(QueryMetrics::compute(q, &list, &truth, &[1]));
        oracle_aps.push(o.ap);
        oracle_aucs.push(o_auc);
    }
    let report = MetricsReport::summarize(&results);
    let map = oracle_aps.iter().sum::<f64>() / oracle_aps.len() as f64;
    worst = worst.max((report.map - map).abs());
    let mean_auc = oracle_aucs.iter().sum::<f64>() / oracle_aucs.len() as f64;
    worst = worst.max((report.auc - mean_auc).abs());

    let mut extended_exact = true;
    for _ in 0..50 {
        let n = rng.gen_range(2..=12);
        let dist = DMatrix::from_fn(n, n, |_, _| rng.gen_range(0.0..5.0));
        let m = rng.gen_range(2..=n);
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(&mut rng);
        ids.truncate(m);
        let doc = Document::new(ids.clone(), n).unwrap();
        let got = extended_scores(n, &doc, |a, b| dist[(a, b)]).unwrap();
        for (i, &g) in got.iter().enumerate() {
            let mut best = f64::INFINITY;
            for &t in &ids {
                if t != i && dist[(t, i)] < best {
                    best = dist[(t, i)];
                }
            }
            extended_exact &= g == best;
        }
    }
    check(
        worst <= METRIC_TOLERANCE && extended_exact,
        format!(
            "{METRIC_INSTANCES} instances: max deviation {worst:.1e} (limit {METRIC_TOLERANCE:e}); \
             extended priming exact: {extended_exact}"
        ),
    )
}

// ---- 5. contextualization -----------------------------------------------

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn contextualization(r: &Run) -> Outcome {
    let start = Instant::now();
    let b = &r.bundle;
    let inputs = b.term_inputs().unwrap();
    let model = b.concept_model(&inputs, NetworkStage::Siamese).unwrap();
    let poly = b.vocabulary.index_of(&r.synth.polysemous_terms[0]).unwrap();
    let train = b.train_docs();
    let topic: Vec<usize> = b
        .split
        .train
        .iter()
        .map(|&i| r.synth.topic_of_doc[i])
        .collect();

    let mut poly_ces = Vec::new();
    let mut doc_ces = Vec::new();
    for (d, doc) in train.iter().enumerate() {
        let l = model.context(doc).unwrap();
        if doc.contains(poly) {
            poly_ces.push((topic[d], model.embed(poly, &l).unwrap()));
        }
        doc_ces.push(model.embed_terms(doc.term_ids(), &l).unwrap());
    }
    let (mut inter, mut intra) = (Vec::new(), Vec::new());
    for (i, (ti, a)) in poly_ces.iter().enumerate() {
        for (tj, c) in &poly_ces[i + 1..] {
            let e = euclidean(a, c);
            if ti == tj {
                intra.push(e)
            } else {
                inter.push(e)
            }
        }
    }
    let (mut in_doc, mut cross_doc) = (Vec::new(), Vec::new());
    for (d, ces) in doc_ces.iter().enumerate() {
        for (i, a) in ces.iter().enumerate() {
            in_doc.extend(ces[i + 1..].iter().map(|c| euclidean(a, c)));
        }
        for other in &doc_ces[d + 1..] {
            for a in ces {
                cross_doc.extend(other.iter().map(|c| euclidean(a, c)));
            }
        }
    }
    let ratio = mean(&inter) / mean(&intra);
    let (in_doc, cross_doc) = (mean(&in_doc), mean(&cross_doc));
    let elapsed = r.elapsed + start.elapsed();
    check(
        ratio >= CONTEXT_RATIO && in_doc < cross_doc && elapsed < CONTEXT_BUDGET,
        format!(
            "seed {}: polysemous inter/intra {ratio:.2} (≥ {CONTEXT_RATIO}); intra-doc {in_doc:.3} < \
             cross-doc {cross_doc:.3}; {:.1}s",
            r.seed,
            elapsed.as_secs_f64()
        ),
    )
}

// ---- 6. priming beats random --------------------------------------------

fn training_map(
    b: &ModelBundle,
    kind: ModelKind,
    queries: &[ce_siamese_core::priming::Query],
) -> f64 {
    let inputs = b.term_inputs().unwrap();
    let model = b.priming_model(kind, &inputs, b.seed).unwrap();
    evaluate(model.as_ref(), queries, &[2]).unwrap().1.map
}

fn beats_random(runs: &[Run]) -> Outcome {
    let start = Instant::now();
    let mut gaps = Vec::new();
    let mut lines = Vec::new();
    for r in runs {
        let q = queries(&r.bundle.train_docs(), Protocol::Priming);
        let ce = training_map(&r.bundle, ModelKind::SiameseCe, &q);
        let random = training_map(&r.bundle, ModelKind::Random, &q);
        gaps.push(ce - random);
        lines.push(format!("seed {} {ce:.3} vs {random:.3}", r.seed));
    }
    let gap = mean(&gaps);
    let elapsed = start.elapsed() + runs.iter().map(|r| r.elapsed).sum::<Duration>();
    check(
        gap >= MAP_MARGIN && elapsed < MAP_BUDGET,
        format!(
            "mean MAP gain {gap:.3} (≥ {MAP_MARGIN}); {}; {:.1}s",
            lines.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

// ---- 7. OOV ---------------------------------------------------------------

fn centroid_exactness(r: &Run) -> f64 {
    let b = &r.bundle;
    let inputs = b.term_inputs().unwrap();
    let model = b.concept_model(&inputs, NetworkStage::Siamese).unwrap();
    let mut worst: f64 = 0.0;
    for doc in b.test_docs() {
        let got = oov_concept_embed(&model, &doc).unwrap().ce;
        let l = model.context(&doc).unwrap();
        let members: Vec<Vec<f64>> = doc
            .term_ids()
            .iter()
            .map(|&t| model.embed(t, &l).unwrap())
            .collect();
        for (j, &g) in got.iter().enumerate() {
            let want = members.iter().map(|c| c[j]).sum::<f64>() / members.len() as f64;
            worst = worst.max((g - want).abs());
        }
    }
    worst
}

fn oov_map(
    model: &ConceptModel,
    queries: &[Document],
    embed: impl Fn(&Document) -> ce_siamese_core::oov::OovEmbedding,
) -> f64 {
    let aps: Vec<f64> = queries
        .iter()
        .map(|ctx| {
            let list = prime_oov(model, &embed(ctx), ctx).unwrap();
            average_precision(&list.terms, ctx)
        })
        .collect();
    mean(&aps)
}

fn oov(r: &Run) -> Outcome {
    let worst = centroid_exactness(r);

    let originals: Vec<Vec<String>> = r
        .synth
        .corpus
        .documents
        .iter()
        .map(|d| {
            d.term_ids()
                .iter()
                .map(|&t| r.synth.corpus.vocabulary.term(t).to_string())
                .collect()
        })
        .collect();
    let reduced: Vec<Vec<String>> = originals
        .iter()
        .map(|d| d.iter().filter(|t| *t != HELD_OUT_TERM).cloned().collect())
        .collect();
    let corpus = Corpus::from_term_lists(&reduced).unwrap();
    let (b, _) = train_all(&corpus, r.seed);
    let held: Vec<usize> = b
        .split
        .validation
        .iter()
        .chain(&b.split.test)
        .copied()
        .filter(|&i| originals[i].iter().any(|t| t == HELD_OUT_TERM))
        .collect();
    let supplied: Vec<Vec<String>> = held.iter().map(|&i| originals[i].clone()).collect();
    let contexts: Vec<Document> = held.iter().map(|&i| b.documents[i].clone()).collect();

    let inputs = b.term_inputs().unwrap();
    let model = b.concept_model(&inputs, NetworkStage::Siamese).unwrap();
    let train = b.train_docs();
    let concept = oov_map(&model, &contexts, |ctx| {
        oov_concept_embed(&model, ctx).unwrap()
    });
    let feature = oov_map(&model, &contexts, |ctx| {
        oov_feature_embed(
            &model,
            &b.pipeline,
            &b.vocabulary,
            &train,
            HELD_OUT_TERM,
            ctx,
            &supplied,
        )
        .unwrap()
    });
    check(
        worst <= CENTROID_TOLERANCE && !contexts.is_empty() && concept >= feature,
        format!(
            "centroid deviation {worst:.1e} (limit {CENTROID_TOLERANCE:e}); held out {HELD_OUT_TERM:?} over \
             {} queries: concept MAP {concept:.3} ≥ feature MAP {feature:.3}",
            contexts.len()
        ),
    )
}

// ---- 8. LDA recovery -------------------------------------------------------

fn lda_recovery() -> Outcome {
    let cfg = SynthConfig {
        docs: 200,
        polysemous: 0,
        ..SynthConfig::default()
    };
    let s = generate_synthetic_corpus(&cfg, &mut seeded(808)).unwrap();
    let docs = &s.corpus.documents;
    let vocab = s.corpus.vocab_size();
    let lda = train_lda(docs, vocab, &LdaConfig::new(2), 17).unwrap();
    let contexts = lda.infer_all(docs).unwrap();
    let p = purity(&dominant(&contexts), &s.topic_of_doc);

    let sums = lda
        .topic_term()
        .iter()
        .map(|row| row.iter().sum::<f64>())
        .chain(std::iter::once(lda.topic_prior().iter().sum()))
        .chain(contexts.iter().map(|l| l.iter().sum()));
    let worst = sums.map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    let nonnegative = lda
        .topic_term()
        .iter()
        .flatten()
        .chain(contexts.iter().flatten())
        .all(|&v| v >= 0.0);

    let mut rng = seeded(18);
    let mut sampler = GibbsSampler::new(docs, vocab, 2, 0.1, 0.01, &mut rng);
    let tokens = sampler.token_count() as u64;
    let mut conserved = sampler.table_totals() == (tokens, tokens, tokens);
    for _ in 0..50 {
        sampler.sweep(&mut rng);
        conserved &= sampler.table_totals() == (tokens, tokens, tokens);
    }
    check(
        p > PURITY_FLOOR && worst <= NORMALIZATION_TOLERANCE && nonnegative && conserved,
        format!(
            "purity {p:.3} (> {PURITY_FLOOR}); max normalization error {worst:.1e}; \
             token counts conserved over 50 sweeps: {conserved}"
        ),
    )
}

// ---- 9. incomplete contexts ----------------------------------------------

fn corruption(runs: &[Run]) -> Outcome {
    let mut per_rate = vec![Vec::new(); MISSING_RATES.len()];
    for r in runs {
        let b = &r.bundle;
        let inputs = b.term_inputs().unwrap();
        let model = b
            .priming_model(ModelKind::SiameseCe, &inputs, b.seed)
            .unwrap();
        let train = b.train_docs();
        for (slot, &rate) in per_rate.iter_mut().zip(&MISSING_RATES) {
            let mut rng = seeded(derive(r.seed, 99));
            let q = corrupted_queries(
                &train,
                Protocol::Priming,
                rate,
                b.vocabulary.len(),
                &mut rng,
            )
            .unwrap();
            slot.push(evaluate(model.as_ref(), &q, &[2]).unwrap().1.map);
        }
    }
    let maps: Vec<f64> = per_rate.iter().map(|v| mean(v)).collect();
    let monotone = maps.windows(2).all(|w| w[0] >= w[1] - CORRUPTION_BAND);
    check(
        monotone,
        format!(
            "mean MAP at missing rate 0/0.3/0.5: {:.3} / {:.3} / {:.3} (band {CORRUPTION_BAND})",
            maps[0], maps[1], maps[2]
        ),
    )
}

// ---- 10. persistence and determinism ---------------------------------------

fn persistence(r: &Run) -> Outcome {
    let json = r.bundle.to_json().unwrap();
    let back = ModelBundle::from_json(&json).unwrap();
    let text_exact = back.to_json().unwrap() == json;
    let value_exact = back == r.bundle;

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    r.bundle.save(&path).unwrap();
    let file_exact = ModelBundle::load(&path).unwrap() == r.bundle;

    let corpus_again = synthetic(r.seed).corpus == r.synth.corpus;
    let (again, log) = train_all(&r.synth.corpus, r.seed);
    let stages_again = again == r.bundle && log == r.log;
    check(
        text_exact && value_exact && file_exact && corpus_again && stages_again,
        format!(
            "round trip text/value/file exact: {text_exact}/{value_exact}/{file_exact}; \
             rerun reproduces corpus: {corpus_again}, every stage and progress log: {stages_again}"
        ),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {n:>2} {name}: {detail}");
    };

    report(1, "gradient correctness", gradient_correctness());
    report(2, "siamese structural invariants", siamese_structure());
    report(3, "loss limiting cases", loss_limits());
    report(4, "metric oracle equivalence", metric_oracle());
    report(8, "lda recovery", lda_recovery());

    let runs: Vec<Run> = SEEDS.iter().map(|&s| run(s)).collect();
    report(5, "contextualization", contextualization(&runs[0]));
    report(6, "priming beats random", beats_random(&runs));
    report(7, "oov", oov(&runs[0]));
    report(9, "incomplete-context degradation", corruption(&runs));
    report(10, "persistence and determinism", persistence(&runs[0]));

    if failed == 0 {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
