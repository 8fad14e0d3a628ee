//! Scoring: Recall@K m, node-assignment accuracy, and error-vs-correct
//! distribution buckets.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::dist_xy;
use crate::localize::LocalizationResult;
use crate::pna::Assignment;
use crate::query_gen::Query;

pub const DEFAULT_RECALL_KS: [u32; 3] = [5, 10, 15];

/// Fraction of errors within K meters, boundary inclusive.
pub fn recall_at(errors: &[f64], k: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyMetric);
    }
    if !(k > 0.0) {
        return Err(Error::Config(format!(
            "recall threshold must be > 0, got {k}"
        )));
    }
    let hits = errors.iter().filter(|&&e| e <= k).count();
    Ok(hits as f64 / errors.len() as f64)
}

/// Compares predicted and ground-truth assignments hint by hint.
///
/// Hint i is correct iff the grounded flags agree and, when grounded,
/// the matched nodes agree. A prediction with the wrong arity is aligned
/// to the ground truth and missing entries count as wrong.
pub fn assignment_accuracy(pred: &[Assignment], gt: &[Assignment]) -> (usize, Vec<bool>) {
    let flags: Vec<bool> = gt
        .iter()
        .enumerate()
        .map(|(i, g)| match pred.get(i) {
            Some(p) => {
                p.grounded == g.grounded && (!g.grounded || p.matched_node == g.matched_node)
            }
            None => false,
        })
        .collect();
    (flags.iter().filter(|&&f| f).count(), flags)
}

/// Linear-interpolation quantile (type 7) over sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let pos = (n - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Error distribution for one correct-count group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub correct_nodes: usize,
    pub n: usize,
    pub median_m: Option<f64>,
    pub q1_m: Option<f64>,
    pub q3_m: Option<f64>,
}

/// Groups (error, correct count) pairs by correct count 0..=max_correct
/// and summarizes each group with interpolated quartiles.
pub fn error_buckets(samples: &[(f64, usize)], max_correct: usize) -> Vec<Bucket> {
    (0..=max_correct)
        .map(|correct| {
            let mut errors: Vec<f64> = samples
                .iter()
                .filter(|&&(_, c)| c == correct)
                .map(|&(e, _)| e)
                .collect();
            errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if errors.is_empty() {
                return Bucket {
                    correct_nodes: correct,
                    n: 0,
                    median_m: None,
                    q1_m: None,
                    q3_m: None,
                };
            }
            let finite = |x: f64| x.is_finite().then_some(x);
            Bucket {
                correct_nodes: correct,
                n: errors.len(),
                median_m: finite(quantile_sorted(&errors, 0.5)),
                q1_m: finite(quantile_sorted(&errors, 0.25)),
                q3_m: finite(quantile_sorted(&errors, 0.75)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerQueryRow {
    pub query_id: u64,
    /// None encodes an infinite error (failed or missing prediction).
    pub error_m: Option<f64>,
    pub correct_nodes: usize,
}

/// Aggregate metrics for one prediction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_queries: usize,
    /// K meters -> fraction of queries within K.
    pub recall: BTreeMap<u32, f64>,
    pub per_hint_accuracy: f64,
    /// correct count -> number of queries.
    pub correct_histogram: BTreeMap<usize, usize>,
    pub buckets: Vec<Bucket>,
    pub per_query: Vec<PerQueryRow>,
}

/// Joins predictions to queries by id and assembles the full report.
///
/// Queries without a prediction (or with a failed one) score infinite
/// error and zero correct assignments, keeping recall denominators fixed.
pub fn evaluate(
    queries: &[Query],
    results: &[LocalizationResult],
    recall_ks: &[u32],
) -> Result<EvalReport> {
    if queries.is_empty() {
        return Err(Error::EmptyMetric);
    }
    let mut by_id: BTreeMap<u64, &LocalizationResult> = BTreeMap::new();
    for r in results {
        if by_id.insert(r.query_id, r).is_some() {
            return Err(Error::Integrity(format!(
                "duplicate prediction for query {}",
                r.query_id
            )));
        }
    }
    let known: std::collections::BTreeSet<u64> = queries.iter().map(|q| q.query_id).collect();
    if let Some(orphan) = by_id.keys().find(|id| !known.contains(id)) {
        return Err(Error::Integrity(format!(
            "prediction {orphan} joins no query"
        )));
    }

    let mut per_query = Vec::with_capacity(queries.len());
    let mut errors = Vec::with_capacity(queries.len());
    let mut samples = Vec::with_capacity(queries.len());
    let mut total_hints = 0usize;
    let mut total_correct = 0usize;
    let max_hints = queries.iter().map(|q| q.hints.len()).max().unwrap_or(0);

    let mut sorted: Vec<&Query> = queries.iter().collect();
    sorted.sort_by_key(|q| q.query_id);
    for query in sorted {
        let result = by_id.get(&query.query_id);
        let error = match result {
            Some(r) => match r.predicted_world {
                Some(world) => dist_xy(world, query.xi),
                None => f64::INFINITY,
            },
            None => f64::INFINITY,
        };
        let empty = Vec::new();
        let pred_assignments = result
            .and_then(|r| r.assignments.as_ref())
            .unwrap_or(&empty);
        let (correct, flags) = assignment_accuracy(pred_assignments, &query.gt_assignments);
        total_hints += flags.len();
        total_correct += correct;
        errors.push(error);
        samples.push((error, correct));
        per_query.push(PerQueryRow {
            query_id: query.query_id,
            error_m: error.is_finite().then_some(error),
            correct_nodes: correct,
        });
    }

    let mut recall = BTreeMap::new();
    for &k in recall_ks {
        recall.insert(k, recall_at(&errors, k as f64)?);
    }
    let mut correct_histogram = BTreeMap::new();
    for &(_, c) in &samples {
        *correct_histogram.entry(c).or_insert(0usize) += 1;
    }

    Ok(EvalReport {
        n_queries: queries.len(),
        recall,
        per_hint_accuracy: if total_hints == 0 {
            0.0
        } else {
            total_correct as f64 / total_hints as f64
        },
        correct_histogram,
        buckets: error_buckets(&samples, max_hints),
        per_query,
    })
}

impl EvalReport {
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Per-query rows: `query_id,error_m,correct_nodes` with `inf` for
    /// failed queries.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("query_id,error_m,correct_nodes\n");
        for row in &self.per_query {
            let err = match row.error_m {
                Some(e) => format!("{e}"),
                None => "inf".to_string(),
            };
            out.push_str(&format!("{},{},{}\n", row.query_id, err, row.correct_nodes));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Bucket rows for external plotting.
    pub fn save_buckets_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("correct_nodes,n,median_m,q1_m,q3_m\n");
        let fmt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for b in &self.buckets {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                b.correct_nodes,
                b.n,
                fmt(b.median_m),
                fmt(b.q1_m),
                fmt(b.q3_m)
            ));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}
