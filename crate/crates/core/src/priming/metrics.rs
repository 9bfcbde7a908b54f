use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

/// Recall levels 0.0, 0.1, …, 1.0.
pub const RECALL_LEVELS: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

fn hits_prefix(list: &[usize], truth: &Document) -> Vec<usize> {
    let mut hits = Vec::with_capacity(list.len());
    let mut n = 0;
    for &t in list {
        if truth.contains(t) {
            n += 1;
        }
        hits.push(n);
    }
    hits
}

/// |top-K ∩ δ| / K.
pub fn p_at_k(list: &[usize], truth: &Document, k: usize) -> Result<f64> {
    if k == 0 || k > list.len() {
        return Err(Error::InvalidK);
    }
    let hits = list[..k].iter().filter(|&&t| truth.contains(t)).count();
    Ok(hits as f64 / k as f64)
}

/// Mean of P@K over K = 1..|δ| (K capped at the list length).
pub fn average_precision(list: &[usize], truth: &Document) -> f64 {
    let hits = hits_prefix(list, truth);
    let m = truth.len();
    (1..=m)
        .map(|k| {
            if k <= hits.len() {
                hits[k - 1] as f64 / k as f64
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / m as f64
}

/// Interpolated precision at each recall level: the best P@K among cut-offs
/// whose recall reaches the level (0 when none does).
pub fn interpolated_precision(list: &[usize], truth: &Document) -> [f64; 11] {
    let hits = hits_prefix(list, truth);
    let m = truth.len() as f64;
    let mut out = [0.0; 11];
    for (slot, &level) in out.iter_mut().zip(&RECALL_LEVELS) {
        for (k, &h) in hits.iter().enumerate() {
            // The slack absorbs rounding in level·|δ| (e.g. 0.3·10).
            if (h as f64) >= level * m - 1e-9 {
                *slot = f64::max(*slot, h as f64 / (k + 1) as f64);
            }
        }
    }
    out
}

pub fn auc(curve: &[f64; 11]) -> f64 {
    curve.iter().sum::<f64>() / 11.0
}

/// Metrics of one priming query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query: usize,
    pub ap: f64,
    /// (K, P@K) for each requested K within the list length.
    pub p_at_k: Vec<(usize, f64)>,
    pub curve: [f64; 11],
}

impl QueryMetrics {
    pub fn compute(query: usize, list: &[usize], truth: &Document, ks: &[usize]) -> Self {
        QueryMetrics {
            query,
            ap: average_precision(list, truth),
            p_at_k: ks
                .iter()
                .filter_map(|&k| p_at_k(list, truth, k).ok().map(|p| (k, p)))
                .collect(),
            curve: interpolated_precision(list, truth),
        }
    }
}

/// Dataset-level summary: every value is a mean over queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub queries: usize,
    pub map: f64,
    pub p_at_k: Vec<(usize, f64)>,
    pub curve: [f64; 11],
    pub auc: f64,
}

impl MetricsReport {
    pub fn summarize(results: &[QueryMetrics]) -> Self {
        let n = results.len().max(1) as f64;
        let mut curve = [0.0; 11];
        for r in results {
            for (c, v) in curve.iter_mut().zip(&r.curve) {
                *c += v / n;
            }
        }
        let mut ks: Vec<usize> = results
            .iter()
            .flat_map(|r| r.p_at_k.iter().map(|p| p.0))
            .collect();
        ks.sort_unstable();
        ks.dedup();
        let p_at_k = ks
            .into_iter()
            .map(|k| {
                let vals: Vec<f64> = results
                    .iter()
                    .filter_map(|r| r.p_at_k.iter().find(|p| p.0 == k).map(|p| p.1))
                    .collect();
                (k, vals.iter().sum::<f64>() / vals.len().max(1) as f64)
            })
            .collect();
        MetricsReport {
            queries: results.len(),
            map: results.iter().map(|r| r.ap).sum::<f64>() / n,
            p_at_k,
            curve,
            auc: auc(&curve),
        }
    }

    /// "recall_level,precision" rows.
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("recall_level,precision\n");
        for (l, p) in RECALL_LEVELS.iter().zip(&self.curve) {
            s.push_str(&format!("{l:.1},{p}\n"));
        }
        s
    }
}
