use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng as _;

use super::prediction::PredictionTerms;
use super::{
    early_stop, Instance, Polarity, Progress, Stage, StopDecision, TrainingConfig, Validator,
};
use crate::error::{Error, Result};
use crate::linalg::columns_to_matrix;
use crate::network::{Gradients, Network};
use crate::rng::Rng;
use crate::topics::context_kl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairKind {
    /// Both positive.
    I1,
    /// Both negative.
    I2,
    /// One of each.
    I3,
}

impl PairKind {
    /// Siamese loss of one pair at embedding distance `e` and context
    /// similarity 𝔻, with its derivative in `e`.
    pub fn loss_and_slope(self, e: f64, similarity: f64, beta: f64, rho: f64) -> (f64, f64) {
        match self {
            PairKind::I1 | PairKind::I2 => {
                let w = if self == PairKind::I1 { 1.0 } else { rho };
                let r = e - beta * (1.0 - similarity);
                (w * r * r, 2.0 * w * r)
            }
            PairKind::I3 => {
                let r = e - beta;
                (similarity * r * r, 2.0 * similarity * r)
            }
        }
    }

    pub fn loss(self, e: f64, similarity: f64, beta: f64, rho: f64) -> f64 {
        self.loss_and_slope(e, similarity, beta, rho).0
    }
}

/// Two instances (by index) with their cached context distance 𝕕 and
/// similarity 𝔻 = exp(−λ𝕕/2).
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub kind: PairKind,
    pub first: usize,
    pub second: usize,
    pub kl: f64,
    pub similarity: f64,
}

impl Pair {
    pub fn new(
        kind: PairKind,
        first: usize,
        second: usize,
        instances: &[Instance],
        lambda: f64,
    ) -> Result<Self> {
        let kl = context_kl(&instances[first].context, &instances[second].context)?;
        Ok(Pair {
            kind,
            first,
            second,
            kl,
            similarity: (-0.5 * lambda * kl).exp(),
        })
    }
}

/// Draws `budget` positive–positive pairs, `budget` negative–negative pairs
/// and `2·budget` mixed pairs, uniformly within polarity classes.
pub fn make_pairs(
    instances: &[Instance],
    budget: Option<usize>,
    lambda: f64,
    rng: &mut Rng,
) -> Result<Vec<Pair>> {
    let by = |p: Polarity| -> Vec<usize> {
        (0..instances.len())
            .filter(|&i| instances[i].polarity == p)
            .collect()
    };
    let pos = by(Polarity::Positive);
    let neg = by(Polarity::Negative);
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::CannotFormPairKind);
    }
    let budget = budget.unwrap_or_else(|| (pos.len().min(neg.len()) / 2).max(1));
    let distinct = |class: &[usize], rng: &mut Rng| -> (usize, usize) {
        let a = rng.gen_range(0..class.len());
        let mut b = rng.gen_range(0..class.len() - 1);
        if b >= a {
            b += 1;
        }
        (class[a], class[b])
    };
    let mut pairs = Vec::with_capacity(4 * budget);
    for _ in 0..budget {
        let (a, b) = distinct(&pos, rng);
        pairs.push(Pair::new(PairKind::I1, a, b, instances, lambda)?);
    }
    for _ in 0..budget {
        let (a, b) = distinct(&neg, rng);
        pairs.push(Pair::new(PairKind::I2, a, b, instances, lambda)?);
    }
    for _ in 0..2 * budget {
        let a = *pos.choose(rng).expect("nonempty");
        let b = *neg.choose(rng).expect("nonempty");
        pairs.push(Pair::new(PairKind::I3, a, b, instances, lambda)?);
    }
    Ok(pairs)
}

/// Loss parts and per-tower gradients of the combined objective
/// L = L_P(side 1) + L_P(side 2) + α·L_S.
#[derive(Debug, Clone)]
pub struct SiameseGrad {
    pub loss: f64,
    pub prediction: [f64; 2],
    pub siamese: f64,
    /// Gradient contributed through each tower.
    pub towers: [Gradients; 2],
}

impl SiameseGrad {
    /// ∂L/∂θ for one shared parameter set (sum over towers).
    pub fn total(&self) -> Gradients {
        let mut g = self.towers[0].clone();
        g.add_assign(&self.towers[1]);
        g
    }

    /// Mean of the tower gradients, the update applied to both towers.
    pub fn mean(&self) -> Gradients {
        let mut g = self.total();
        g.scale(0.5);
        g
    }
}

struct Terms {
    include_prediction: bool,
    alpha: f64,
}

fn combined(
    towers: [&Network; 2],
    instances: &[Instance],
    pairs: &[&Pair],
    cfg: &TrainingConfig,
    terms: Terms,
) -> Result<SiameseGrad> {
    if pairs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let net = towers[0];
    let (h, d_in, d_out) = (net.depth(), net.input_dim(), net.output_dim());
    if h < 2 {
        return Err(Error::InvalidLayerSize);
    }
    let side = |pick: fn(&Pair) -> usize| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let chosen: Vec<&Instance> = pairs.iter().map(|p| &instances[pick(p)]).collect();
        if chosen.iter().any(|i| i.x.len() != d_in) {
            return Err(Error::InputDimensionMismatch);
        }
        if chosen.iter().any(|i| i.y.len() != d_out) {
            return Err(Error::FeatureDimensionMismatch);
        }
        Ok((
            columns_to_matrix(d_in, chosen.iter().map(|i| i.x.as_slice())),
            columns_to_matrix(d_out, chosen.iter().map(|i| i.y.as_slice())),
        ))
    };
    let (x1, y1) = side(|p| p.first)?;
    let (x2, y2) = side(|p| p.second)?;
    let acts = [towers[0].forward_batch(&x1), towers[1].forward_batch(&x2)];

    let beta = cfg.beta_for(net.ce_dim());
    let k = pairs.len() as f64;
    let ce_dim = net.ce_dim();
    let mut siamese = 0.0;
    let mut d_ce = [
        DMatrix::zeros(ce_dim, pairs.len()),
        DMatrix::zeros(ce_dim, pairs.len()),
    ];
    for (j, p) in pairs.iter().enumerate() {
        let diff = acts[0][h - 1].column(j) - acts[1][h - 1].column(j);
        let e = diff.norm();
        let (value, slope) = p.kind.loss_and_slope(e, p.similarity, beta, cfg.rho);
        siamese += value / k;
        if e > 0.0 {
            let g = diff * (terms.alpha * slope / (k * e));
            d_ce[0].set_column(j, &g);
            d_ce[1].set_column(j, &(-g));
        }
    }

    let mut prediction = [0.0; 2];
    let mut grads = Vec::with_capacity(2);
    for (t, (a, y)) in [(&acts[0], &y1), (&acts[1], &y2)].into_iter().enumerate() {
        let mut upstream = vec![None; h + 1];
        if terms.include_prediction {
            let p = PredictionTerms::evaluate(&a[h], y, cfg.swap_kappa);
            prediction[t] = p.loss;
            upstream[h] = Some(p.d_output);
        }
        upstream[h - 1] = Some(std::mem::replace(&mut d_ce[t], DMatrix::zeros(0, 0)));
        grads.push(towers[t].backward(a, &upstream));
    }
    let g2 = grads.pop().expect("two towers");
    let g1 = grads.pop().expect("two towers");
    Ok(SiameseGrad {
        loss: prediction[0] + prediction[1] + terms.alpha * siamese,
        prediction,
        siamese,
        towers: [g1, g2],
    })
}

/// Combined loss and gradients for a batch of pairs on one shared network.
pub fn siamese_loss_grad(
    net: &Network,
    instances: &[Instance],
    pairs: &[&Pair],
    cfg: &TrainingConfig,
) -> Result<SiameseGrad> {
    combined(
        [net, net],
        instances,
        pairs,
        cfg,
        Terms {
            include_prediction: true,
            alpha: cfg.alpha,
        },
    )
}

/// The distance term L_S alone and its gradient (unweighted by α).
pub fn siamese_distance_grad(
    net: &Network,
    instances: &[Instance],
    pairs: &[&Pair],
    cfg: &TrainingConfig,
) -> Result<(f64, Gradients)> {
    let g = combined(
        [net, net],
        instances,
        pairs,
        cfg,
        Terms {
            include_prediction: false,
            alpha: 1.0,
        },
    )?;
    Ok((g.siamese, g.total()))
}

/// Two parameter-identical towers updated with the mean of their gradients.
#[derive(Debug, Clone)]
pub struct SiameseTrainer {
    towers: [Network; 2],
}

impl SiameseTrainer {
    pub fn new(net: Network) -> Self {
        SiameseTrainer {
            towers: [net.clone(), net],
        }
    }

    pub fn towers(&self) -> &[Network; 2] {
        &self.towers
    }

    /// One SGD step on a batch of pairs; returns the batch loss.
    pub fn step(
        &mut self,
        instances: &[Instance],
        pairs: &[&Pair],
        cfg: &TrainingConfig,
        eta: f64,
    ) -> Result<f64> {
        let g = combined(
            [&self.towers[0], &self.towers[1]],
            instances,
            pairs,
            cfg,
            Terms {
                include_prediction: true,
                alpha: cfg.alpha,
            },
        )?;
        let update = g.mean();
        if !g.loss.is_finite() || !update.is_finite() {
            return Err(Error::TrainingDiverged);
        }
        for t in &mut self.towers {
            t.apply(&update, eta);
        }
        Ok(g.loss)
    }

    pub fn into_network(self) -> Network {
        let [a, _] = self.towers;
        a
    }
}

/// Mini-batch SGD on the combined objective over shuffled pairs. η decays by
/// `decay_factor` every `decay_period` mini-batches. `on_step` sees both
/// towers after every update.
#[allow(clippy::too_many_arguments)]
pub fn train_siamese(
    net: Network,
    instances: &[Instance],
    pairs: &[Pair],
    cfg: &TrainingConfig,
    validator: Option<&Validator>,
    rng: &mut Rng,
    mut on_progress: impl FnMut(&Progress),
    mut on_step: impl FnMut(&[Network; 2]),
) -> Result<Network> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::CannotFormPairKind);
    }
    let mut trainer = SiameseTrainer::new(net);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut evaluations = Vec::new();
    let mut batches_done = 0usize;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        let mut batches = 0;
        let mut eta = cfg.learning_rate_after(batches_done / cfg.decay_period);
        for chunk in order.chunks(cfg.batch_size) {
            eta = cfg.learning_rate_after(batches_done / cfg.decay_period);
            let batch: Vec<&Pair> = chunk.iter().map(|&i| &pairs[i]).collect();
            total += trainer.step(instances, &batch, cfg, eta)?;
            on_step(trainer.towers());
            batches += 1;
            batches_done += 1;
        }
        let mut record = Progress {
            epoch,
            stage: Stage::Siamese,
            loss: total / batches as f64,
            eta,
            validation_p2: None,
        };
        let mut stop = false;
        if let Some(v) = validator {
            if epoch % cfg.eval_period == 0 {
                let p2 = v(&trainer.towers()[0]);
                record.validation_p2 = Some(p2);
                evaluations.push(p2);
                stop = early_stop(&evaluations, cfg.stop_threshold) == StopDecision::Stop;
            }
        }
        on_progress(&record);
        if stop {
            break;
        }
    }
    Ok(trainer.into_network())
}
