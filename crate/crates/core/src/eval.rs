//! Ranked-retrieval metrics and the all-words-as-queries benchmark.
//!
//! Precision, recall, rPrecision and average precision follow the usual
//! IR definitions; queries without a single relevant partner cannot have
//! an average precision (the formula divides by the relevant count), so
//! they are excluded from aggregates and reported separately. Because
//! opinions differ on whether top-1 accuracy should count such queries,
//! the report carries both readings.

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::retrieval::{query, Index, QueryParams, RetrievalError};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("index entries without transcriptions cannot be evaluated: {}", .ids.join(", "))]
    UnlabeledEntries { ids: Vec<String> },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

/// Canonical form used for relevance matching: trimmed, lowercased.
pub fn normalize_label(label: &str) -> String {
    label.trim().to_lowercase()
}

/// Set-based precision and recall; an empty retrieved set has no
/// precision and an empty relevant set has no recall, and both come back
/// as `None` rather than a misleading zero.
pub fn precision_recall(retrieved: &[&str], relevant: &[&str]) -> (Option<f64>, Option<f64>) {
    let relevant_set: HashSet<&str> = relevant.iter().copied().collect();
    let retrieved_set: HashSet<&str> = retrieved.iter().copied().collect();
    let overlap = retrieved_set.intersection(&relevant_set).count() as f64;
    let precision = if retrieved_set.is_empty() {
        None
    } else {
        Some(overlap / retrieved_set.len() as f64)
    };
    let recall = if relevant_set.is_empty() {
        None
    } else {
        Some(overlap / relevant_set.len() as f64)
    };
    (precision, recall)
}

/// Precision over the first `relevant_count` ranked results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RPrecision {
    pub value: f64,
    /// Set when the ranking held fewer than `relevant_count` results and
    /// the value had to be computed over the available prefix.
    pub truncated: bool,
}

/// `flags[n]` marks whether the item at rank n+1 is relevant. Returns
/// `None` when there is nothing relevant to find.
pub fn r_precision(flags: &[bool], relevant_count: usize) -> Option<RPrecision> {
    if relevant_count == 0 {
        return None;
    }
    let depth = relevant_count.min(flags.len());
    let hits = flags[..depth].iter().filter(|&&f| f).count();
    Some(RPrecision {
        value: hits as f64 / depth.max(1) as f64,
        truncated: flags.len() < relevant_count,
    })
}

/// Average precision: the mean of precision-at-n over the ranks n holding
/// relevant items, with the full relevant count as denominator so missing
/// items count as zero. `None` when `relevant_count` is zero.
pub fn average_precision(flags: &[bool], relevant_count: usize) -> Option<f64> {
    if relevant_count == 0 {
        return None;
    }
    let mut hits = 0u64;
    let mut total = 0.0f64;
    for (n, &flag) in flags.iter().enumerate() {
        if flag {
            hits += 1;
            total += hits as f64 / (n + 1) as f64;
        }
    }
    Some(total / relevant_count as f64)
}

/// Benchmark protocol knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalProtocol<S: Scalar> {
    /// Width penalty weight passed through to every query.
    pub lambda: S,
    /// Leave the query word out of its own candidate set and relevant
    /// count (the stricter convention).
    pub exclude_self: bool,
    /// Optional hard width cutoff instead of a soft penalty.
    pub width_filter: Option<S>,
}

impl<S: Scalar> Default for EvalProtocol<S> {
    fn default() -> Self {
        Self {
            lambda: S::from_f64(crate::retrieval::DEFAULT_LAMBDA).expect("default lambda fits"),
            exclude_self: true,
            width_filter: None,
        }
    }
}

/// Per-query evaluation record.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub id: String,
    pub label: String,
    /// Relevant candidates available to this query.
    pub relevant: usize,
    /// `None` when nothing was relevant.
    pub ap: Option<f64>,
    /// 1.0 when the top result is relevant, else 0.0.
    pub p_at_1: f64,
    pub r_precision: Option<f64>,
    /// The ranking was shorter than the relevant count (width filtering).
    pub truncated: bool,
}

/// Aggregated benchmark results.
///
/// Aggregates are means over scoreable queries (relevant count >= 1);
/// `p_at_1_all` additionally averages over every query, counting the
/// unanswerable ones as misses.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_query: Vec<QueryOutcome>,
    pub query_count: usize,
    pub scoreable: usize,
    pub map: Option<f64>,
    pub p_at_1: Option<f64>,
    pub p_at_1_all: f64,
    pub r_precision: Option<f64>,
    pub query_seconds: f64,
}

/// Issue every index entry as a query against the index and aggregate the
/// metrics. Relevance is case-insensitive transcription equality.
pub fn evaluate<S: Scalar>(
    index: &Index<S>,
    protocol: &EvalProtocol<S>,
) -> Result<EvalReport, EvalError> {
    let unlabeled: Vec<String> = index
        .entries()
        .iter()
        .filter(|e| e.label().is_none())
        .map(|e| e.id.clone())
        .collect();
    if !unlabeled.is_empty() {
        return Err(EvalError::UnlabeledEntries { ids: unlabeled });
    }

    let labels: Vec<String> = index
        .entries()
        .iter()
        .map(|e| normalize_label(e.label().expect("checked above")))
        .collect();

    let started = Instant::now();
    let outcomes: Vec<Result<QueryOutcome, EvalError>> = index
        .entries()
        .par_iter()
        .enumerate()
        .map(|(qi, entry)| {
            let label = &labels[qi];
            let relevant = labels
                .iter()
                .enumerate()
                .filter(|&(ci, l)| l == label && !(protocol.exclude_self && ci == qi))
                .count();
            let params = QueryParams {
                k: index.len(),
                lambda: protocol.lambda,
                width_filter: protocol.width_filter,
                exclude: protocol.exclude_self.then(|| entry.id.clone()),
                query_id: Some(entry.id.clone()),
            };
            let ranked = query(index, &entry.descriptor, &params)?;
            let flags: Vec<bool> = ranked
                .hits
                .iter()
                .map(|h| {
                    h.label.as_deref().map(normalize_label).as_deref() == Some(label.as_str())
                })
                .collect();
            let rp = r_precision(&flags, relevant);
            Ok(QueryOutcome {
                id: entry.id.clone(),
                label: entry.label().expect("checked above").to_string(),
                relevant,
                ap: average_precision(&flags, relevant),
                p_at_1: if flags.first().copied().unwrap_or(false) {
                    1.0
                } else {
                    0.0
                },
                r_precision: rp.map(|r| r.value),
                truncated: rp.map(|r| r.truncated).unwrap_or(false),
            })
        })
        .collect();
    let query_seconds = started.elapsed().as_secs_f64();

    let per_query: Vec<QueryOutcome> = outcomes.into_iter().collect::<Result<_, _>>()?;
    let query_count = per_query.len();
    let scoreable: Vec<&QueryOutcome> = per_query.iter().filter(|o| o.relevant > 0).collect();
    let mean =
        |xs: &[f64]| -> Option<f64> { (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64) };
    let aps: Vec<f64> = scoreable.iter().filter_map(|o| o.ap).collect();
    let p1s: Vec<f64> = scoreable.iter().map(|o| o.p_at_1).collect();
    let rps: Vec<f64> = scoreable.iter().filter_map(|o| o.r_precision).collect();
    let p_at_1_all = if query_count == 0 {
        0.0
    } else {
        per_query.iter().map(|o| o.p_at_1).sum::<f64>() / query_count as f64
    };
    Ok(EvalReport {
        query_count,
        scoreable: scoreable.len(),
        map: mean(&aps),
        p_at_1: mean(&p1s),
        p_at_1_all,
        r_precision: mean(&rps),
        query_seconds,
        per_query,
    })
}
