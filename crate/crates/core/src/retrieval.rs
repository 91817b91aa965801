//! Exact nearest-neighbor ranking with Bray-Curtis distance and a width
//! penalty.
//!
//! An index is a flat, id-sorted list of descriptors stamped with the
//! extraction-config fingerprint. Queries score every entry (no
//! approximate shortcuts), sort ascending, and break score ties by
//! candidate id so rankings are reproducible run to run.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::descriptor::{extract_descriptor, Descriptor, DescriptorError, ExtractConfig};
use crate::image::GrayImage;
use crate::scalar::Scalar;

/// Default weight of the width-ratio penalty.
pub const DEFAULT_LAMBDA: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum RetrievalError {
    #[error("descriptor dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("component {index} is {value}, but descriptors must be non-negative and finite")]
    InvalidComponent { index: usize, value: f64 },
    #[error("index entry {id:?} has zero width")]
    ZeroWidth { id: String },
    #[error("duplicate index id {0:?}")]
    DuplicateId(String),
    #[error("index has no entries")]
    EmptyIndex,
    #[error("corpus has no items")]
    EmptyCorpus,
    #[error("all {failures} corpus images failed descriptor extraction")]
    AllImagesFailed { failures: usize },
    #[error("invalid query parameters: {0}")]
    InvalidParams(String),
}

fn check_components<S: Scalar>(values: &[S]) -> Result<(), RetrievalError> {
    for (index, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < S::zero() {
            return Err(RetrievalError::InvalidComponent {
                index,
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(())
}

/// Bray-Curtis dissimilarity of two non-negative vectors.
///
/// Zero for identical vectors, one for disjoint support, and conventionally
/// zero when both vectors are entirely zero.
pub fn bray_curtis<S: Scalar>(a: &[S], b: &[S]) -> Result<S, RetrievalError> {
    if a.len() != b.len() {
        return Err(RetrievalError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    check_components(a)?;
    check_components(b)?;
    Ok(bray_curtis_unchecked(a, b))
}

fn bray_curtis_unchecked<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut num = S::zero();
    let mut den = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        num = num + (x - y).abs();
        // the inner sum is formed before accumulating so the rounding is
        // the same whichever argument comes first
        den = den + (x + y);
    }
    if den == S::zero() {
        S::zero()
    } else {
        num / den
    }
}

/// Symmetric width agreement in (0, 1]: min over max, 1 for equal widths.
fn width_ratio<S: Scalar>(a: u32, b: u32) -> S {
    if a == b {
        return S::one();
    }
    S::from_count(a.min(b) as u64) / S::from_count(a.max(b) as u64)
}

/// Final matching score: Bray-Curtis distance plus `lambda` times the
/// width disagreement `1 - min(w_q, w_c) / max(w_q, w_c)`.
pub fn score<S: Scalar>(
    query: &Descriptor<S>,
    cand: &Descriptor<S>,
    lambda: S,
) -> Result<S, RetrievalError> {
    if lambda < S::zero() || !lambda.is_finite() {
        return Err(RetrievalError::InvalidParams(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let bc = bray_curtis(&query.values, &cand.values)?;
    Ok(bc + lambda * (S::one() - width_ratio(query.width, cand.width)))
}

/// One item of a corpus to be indexed.
#[derive(Debug, Clone)]
pub struct CorpusItem {
    /// Unique id; ranking ties and persistence order follow it.
    pub id: String,
    /// Source page or document tag, carried through for reporting.
    pub page: String,
    pub label: Option<String>,
    pub image: GrayImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry<S: Scalar> {
    pub id: String,
    pub page: String,
    pub descriptor: Descriptor<S>,
}

impl<S: Scalar> IndexEntry<S> {
    pub fn width(&self) -> u32 {
        self.descriptor.width
    }

    pub fn label(&self) -> Option<&str> {
        self.descriptor.label.as_deref()
    }
}

/// Immutable searchable collection of descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct Index<S: Scalar> {
    entries: Vec<IndexEntry<S>>,
    fingerprint: u64,
    dim: usize,
}

impl<S: Scalar> Index<S> {
    /// Validates and adopts entries: ids must be unique (entries are kept
    /// sorted by id), dimensions uniform, components non-negative and
    /// finite, widths nonzero.
    pub fn new(mut entries: Vec<IndexEntry<S>>, fingerprint: u64) -> Result<Self, RetrievalError> {
        if entries.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in entries.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(RetrievalError::DuplicateId(pair[0].id.clone()));
            }
        }
        let dim = entries[0].descriptor.dim();
        for entry in &entries {
            if entry.descriptor.dim() != dim {
                return Err(RetrievalError::DimensionMismatch {
                    expected: dim,
                    actual: entry.descriptor.dim(),
                });
            }
            if entry.width() == 0 {
                return Err(RetrievalError::ZeroWidth {
                    id: entry.id.clone(),
                });
            }
            check_components(&entry.descriptor.values)?;
        }
        Ok(Self {
            entries,
            fingerprint,
            dim,
        })
    }

    pub fn entries(&self) -> &[IndexEntry<S>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn get(&self, id: &str) -> Option<&IndexEntry<S>> {
        self.entries
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// A corpus image that could not be indexed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildFailure {
    pub id: String,
    pub error: String,
}

/// Result of an index build: the index, per-image failures, and the
/// wall-clock extraction time for throughput reporting.
#[derive(Debug)]
pub struct IndexBuild<S: Scalar> {
    pub index: Index<S>,
    pub failures: Vec<BuildFailure>,
    pub extract_seconds: f64,
}

/// Extract a descriptor per corpus item, in parallel, and assemble the
/// index. Individual failures are collected; the build errors out only
/// when nothing could be indexed at all.
pub fn build_index<S: Scalar>(
    corpus: &[CorpusItem],
    config: &ExtractConfig,
) -> Result<IndexBuild<S>, RetrievalError> {
    if corpus.is_empty() {
        return Err(RetrievalError::EmptyCorpus);
    }
    let started = Instant::now();
    let results: Vec<Result<IndexEntry<S>, BuildFailure>> = corpus
        .par_iter()
        .map(|item| {
            extract_one(item, config).map_err(|e| BuildFailure {
                id: item.id.clone(),
                error: e.to_string(),
            })
        })
        .collect();
    let extract_seconds = started.elapsed().as_secs_f64();

    let mut entries = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(entry) => entries.push(entry),
            Err(failure) => failures.push(failure),
        }
    }
    if entries.is_empty() {
        return Err(RetrievalError::AllImagesFailed {
            failures: failures.len(),
        });
    }
    Ok(IndexBuild {
        index: Index::new(entries, config.fingerprint())?,
        failures,
        extract_seconds,
    })
}

fn extract_one<S: Scalar>(
    item: &CorpusItem,
    config: &ExtractConfig,
) -> Result<IndexEntry<S>, DescriptorError> {
    let mut descriptor = extract_descriptor(&item.image, config)?;
    descriptor.label = item.label.clone();
    Ok(IndexEntry {
        id: item.id.clone(),
        page: item.page.clone(),
        descriptor,
    })
}

/// Query-time knobs; none of them affect stored descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryParams<S: Scalar> {
    /// Result count cap, >= 1.
    pub k: usize,
    /// Width penalty weight, >= 0.
    pub lambda: S,
    /// When set, candidates whose width agreement falls below this
    /// threshold are dropped instead of penalized.
    pub width_filter: Option<S>,
    /// Entry id to leave out (the query itself in benchmark protocols).
    pub exclude: Option<String>,
    /// Id attached to the resulting ranking, for reporting.
    pub query_id: Option<String>,
}

impl<S: Scalar> Default for QueryParams<S> {
    fn default() -> Self {
        Self {
            k: 10,
            lambda: S::from_f64(DEFAULT_LAMBDA).expect("default lambda fits"),
            width_filter: None,
            exclude: None,
            query_id: None,
        }
    }
}

impl<S: Scalar> QueryParams<S> {
    fn validate(&self) -> Result<(), RetrievalError> {
        if self.k == 0 {
            return Err(RetrievalError::InvalidParams("k must be >= 1".into()));
        }
        if self.lambda < S::zero() || !self.lambda.is_finite() {
            return Err(RetrievalError::InvalidParams(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if let Some(f) = self.width_filter {
            if f < S::zero() || f > S::one() {
                return Err(RetrievalError::InvalidParams(format!(
                    "width filter must be in [0, 1], got {f}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit<S: Scalar> {
    pub id: String,
    pub score: S,
    pub label: Option<String>,
    pub width: u32,
}

/// Candidates in ascending score order, ties broken by ascending id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList<S: Scalar> {
    pub query_id: Option<String>,
    pub hits: Vec<Hit<S>>,
}

/// Score every index entry against `q` and return the top `k`.
pub fn query<S: Scalar>(
    index: &Index<S>,
    q: &Descriptor<S>,
    params: &QueryParams<S>,
) -> Result<RankedList<S>, RetrievalError> {
    params.validate()?;
    if index.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    if q.dim() != index.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: index.dim(),
            actual: q.dim(),
        });
    }
    check_components(&q.values)?;

    let mut hits: Vec<Hit<S>> = Vec::with_capacity(index.len());
    for entry in index.entries() {
        if params.exclude.as_deref() == Some(entry.id.as_str()) {
            continue;
        }
        let ratio = width_ratio::<S>(q.width, entry.width());
        if let Some(threshold) = params.width_filter {
            if ratio < threshold {
                continue;
            }
        }
        let bc = bray_curtis_unchecked(&q.values, &entry.descriptor.values);
        let score = bc + params.lambda * (S::one() - ratio);
        hits.push(Hit {
            id: entry.id.clone(),
            score,
            label: entry.descriptor.label.clone(),
            width: entry.width(),
        });
    }
    hits.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .expect("scores are finite")
            .then_with(|| a.id.cmp(&b.id))
    });
    hits.truncate(params.k);
    Ok(RankedList {
        query_id: params.query_id.clone(),
        hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn desc(values: &[f64], width: u32, label: Option<&str>) -> Descriptor<f64> {
        Descriptor {
            values: values.to_vec(),
            width,
            label: label.map(str::to_string),
        }
    }

    fn entry(id: &str, values: &[f64], width: u32, label: Option<&str>) -> IndexEntry<f64> {
        IndexEntry {
            id: id.to_string(),
            page: "p1".to_string(),
            descriptor: desc(values, width, label),
        }
    }

    #[test]
    fn bray_curtis_examples() {
        assert_eq!(bray_curtis(&[2.0, 1.0], &[2.0, 1.0]).unwrap(), 0.0);
        assert_eq!(bray_curtis(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        // (|2-1| + |1-1|) / (3 + 2)
        let hand = bray_curtis(&[2.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!((hand - 0.2f64).abs() < 1e-15);
        assert_eq!(bray_curtis(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn bray_curtis_rejects_bad_input() {
        assert_eq!(
            bray_curtis(&[1.0], &[1.0, 2.0]).unwrap_err(),
            RetrievalError::DimensionMismatch {
                expected: 1,
                actual: 2
            }
        );
        assert!(matches!(
            bray_curtis(&[-0.1, 0.0], &[0.0, 0.0]).unwrap_err(),
            RetrievalError::InvalidComponent { index: 0, .. }
        ));
        assert!(matches!(
            bray_curtis(&[0.0, f64::NAN], &[0.0, 0.0]).unwrap_err(),
            RetrievalError::InvalidComponent { index: 1, .. }
        ));
    }

    #[test]
    fn score_examples() {
        let q = desc(&[1.3, 0.0], 100, None);
        let c = desc(&[0.7, 0.0], 50, None);
        // BC = 0.6 / 2.0 = 0.3; penalty off
        assert!((score(&q, &c, 0.0).unwrap() - 0.3).abs() < 1e-15);
        // 0.3 + 0.1 * (1 - 50/100)
        assert!((score(&q, &c, 0.1).unwrap() - 0.35).abs() < 1e-15);

        let same = desc(&[1.3, 0.0], 100, None);
        assert_eq!(score(&q, &same, 7.5).unwrap(), 0.0);

        assert!(matches!(
            score(&q, &c, -0.1),
            Err(RetrievalError::InvalidParams(_))
        ));
    }

    #[test]
    fn index_validates_entries() {
        assert_eq!(
            Index::<f64>::new(vec![], 1).unwrap_err(),
            RetrievalError::EmptyIndex
        );
        assert_eq!(
            Index::new(
                vec![entry("a", &[1.0], 5, None), entry("a", &[2.0], 5, None)],
                1
            )
            .unwrap_err(),
            RetrievalError::DuplicateId("a".into())
        );
        assert_eq!(
            Index::new(
                vec![entry("a", &[1.0], 5, None), entry("b", &[2.0, 3.0], 5, None)],
                1
            )
            .unwrap_err(),
            RetrievalError::DimensionMismatch {
                expected: 1,
                actual: 2
            }
        );
        assert_eq!(
            Index::new(vec![entry("a", &[1.0], 0, None)], 1).unwrap_err(),
            RetrievalError::ZeroWidth { id: "a".into() }
        );
        let index = Index::new(
            vec![entry("b", &[1.0], 5, None), entry("a", &[2.0], 5, None)],
            42,
        )
        .unwrap();
        // entries come back sorted by id
        assert_eq!(index.entries()[0].id, "a");
        assert_eq!(index.fingerprint(), 42);
        assert!(index.get("b").is_some());
        assert!(index.get("c").is_none());
    }

    #[test]
    fn query_matches_full_sort_oracle() {
        let entries = vec![
            entry("w1", &[0.9, 0.1], 100, Some("one")),
            entry("w2", &[0.5, 0.5], 80, Some("two")),
            entry("w3", &[0.1, 0.9], 120, Some("three")),
            entry("w4", &[0.8, 0.2], 40, Some("four")),
            entry("w5", &[0.9, 0.1], 100, Some("five")),
        ];
        let index = Index::new(entries.clone(), 0).unwrap();
        let q = desc(&[0.85, 0.15], 95, None);
        let params = QueryParams {
            k: 5,
            lambda: 0.1,
            ..QueryParams::default()
        };
        let ranked = query(&index, &q, &params).unwrap();

        // independent oracle: score each entry via the public scorer and
        // stable-sort the (score, id) pairs
        let mut oracle: Vec<(f64, String)> = entries
            .iter()
            .map(|e| (score(&q, &e.descriptor, 0.1).unwrap(), e.id.clone()))
            .collect();
        oracle.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));

        assert_eq!(ranked.hits.len(), 5);
        for (hit, (expected_score, expected_id)) in ranked.hits.iter().zip(&oracle) {
            assert_eq!(&hit.id, expected_id);
            assert!((hit.score - expected_score).abs() < 1e-15);
        }
        // scores must be non-decreasing
        for pair in ranked.hits.windows(2) {
            assert!(pair[0].score <= pair[1].score);
        }
    }

    #[test]
    fn identical_entries_rank_adjacent_in_id_order() {
        let index = Index::new(
            vec![
                entry("dup-b", &[0.5, 0.5], 50, None),
                entry("dup-a", &[0.5, 0.5], 50, None),
                entry("far", &[0.0, 1.0], 50, None),
            ],
            0,
        )
        .unwrap();
        let q = desc(&[0.5, 0.5], 50, None);
        let ranked = query(&index, &q, &QueryParams::default()).unwrap();
        assert_eq!(ranked.hits[0].id, "dup-a");
        assert_eq!(ranked.hits[1].id, "dup-b");
        assert_eq!(ranked.hits[0].score, 0.0);
    }

    #[test]
    fn query_exclusion_truncation_and_errors() {
        let index = Index::new(
            vec![
                entry("a", &[1.0, 0.0], 50, None),
                entry("b", &[0.0, 1.0], 50, None),
            ],
            0,
        )
        .unwrap();
        let q = desc(&[1.0, 0.0], 50, None);

        let all = query(&index, &q, &QueryParams { k: 10, ..QueryParams::default() }).unwrap();
        assert_eq!(all.hits.len(), 2);

        let one = query(&index, &q, &QueryParams { k: 1, ..QueryParams::default() }).unwrap();
        assert_eq!(one.hits.len(), 1);
        assert_eq!(one.hits[0].id, "a");

        let excl = query(
            &index,
            &q,
            &QueryParams {
                exclude: Some("a".into()),
                ..QueryParams::default()
            },
        )
        .unwrap();
        assert_eq!(excl.hits.len(), 1);
        assert_eq!(excl.hits[0].id, "b");

        assert!(matches!(
            query(&index, &desc(&[1.0], 50, None), &QueryParams::default()),
            Err(RetrievalError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            query(&index, &q, &QueryParams { k: 0, ..QueryParams::default() }),
            Err(RetrievalError::InvalidParams(_))
        ));
    }

    #[test]
    fn width_filter_drops_mismatched_candidates() {
        let index = Index::new(
            vec![
                entry("near", &[0.5, 0.5], 100, None),
                entry("thin", &[0.5, 0.5], 20, None),
            ],
            0,
        )
        .unwrap();
        let q = desc(&[0.5, 0.5], 100, None);
        let ranked = query(
            &index,
            &q,
            &QueryParams {
                width_filter: Some(0.5),
                ..QueryParams::default()
            },
        )
        .unwrap();
        assert_eq!(ranked.hits.len(), 1);
        assert_eq!(ranked.hits[0].id, "near");
    }

    fn tiny_corpus() -> Vec<CorpusItem> {
        (0..3)
            .map(|i| CorpusItem {
                id: format!("img{i}"),
                page: "p".into(),
                label: Some(format!("word{i}")),
                image: GrayImage::from_fn(30 + i * 5, 20, |x, y| {
                    if (x + y + i) % 7 < 2 {
                        20
                    } else {
                        230
                    }
                })
                .unwrap(),
            })
            .collect()
    }

    #[test]
    fn build_index_roundtrip_and_failures() {
        let config = ExtractConfig::default();
        let corpus = tiny_corpus();
        let build: IndexBuild<f64> = build_index(&corpus, &config).unwrap();
        assert_eq!(build.index.len(), 3);
        assert!(build.failures.is_empty());
        assert_eq!(build.index.fingerprint(), config.fingerprint());

        // determinism across rebuilds
        let again: IndexBuild<f64> = build_index(&corpus, &config).unwrap();
        assert_eq!(build.index, again.index);

        // one undersized image: the rest still index
        let mut with_bad = tiny_corpus();
        with_bad.push(CorpusItem {
            id: "broken".into(),
            page: "p".into(),
            label: None,
            image: GrayImage::constant(2, 2, 0).unwrap(),
        });
        let partial: IndexBuild<f64> = build_index(&with_bad, &config).unwrap();
        assert_eq!(partial.index.len(), 3);
        assert_eq!(partial.failures.len(), 1);
        assert_eq!(partial.failures[0].id, "broken");

        // all failing
        let all_bad = vec![CorpusItem {
            id: "x".into(),
            page: "p".into(),
            label: None,
            image: GrayImage::constant(2, 2, 0).unwrap(),
        }];
        assert_eq!(
            build_index::<f64>(&all_bad, &config).unwrap_err(),
            RetrievalError::AllImagesFailed { failures: 1 }
        );
        assert_eq!(
            build_index::<f64>(&[], &config).unwrap_err(),
            RetrievalError::EmptyCorpus
        );
    }

    proptest! {
        #[test]
        fn bc_symmetry_identity_range(
            a in proptest::collection::vec(0.0f64..10.0, 1..20),
            b in proptest::collection::vec(0.0f64..10.0, 1..20),
        ) {
            let n = a.len().min(b.len());
            let (a, b) = (&a[..n], &b[..n]);
            let ab = bray_curtis(a, b).unwrap();
            let ba = bray_curtis(b, a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(bray_curtis(a, a).unwrap(), 0.0);
        }

        #[test]
        fn score_monotone_in_lambda(
            values in proptest::collection::vec(0.0f64..5.0, 4),
            wq in 1u32..200,
            wc in 1u32..200,
            l1 in 0.0f64..2.0,
            l2 in 0.0f64..2.0,
        ) {
            let q = Descriptor { values: values.clone(), width: wq, label: None };
            let c = Descriptor { values, width: wc, label: None };
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            let s_lo = score(&q, &c, lo).unwrap();
            let s_hi = score(&q, &c, hi).unwrap();
            if wq == wc {
                prop_assert_eq!(s_lo, s_hi);
            } else {
                prop_assert!(s_lo <= s_hi);
            }
        }

        /// A constant shift of every score (lambda against a uniform-width
        /// index adds the same penalty everywhere) cannot change the order.
        #[test]
        fn ranking_stable_under_constant_shift(
            seed_values in proptest::collection::vec(0.0f64..2.0, 8),
            lambda in 0.0f64..2.0,
        ) {
            let entries: Vec<IndexEntry<f64>> = seed_values
                .chunks(2)
                .enumerate()
                .map(|(i, pair)| entry(&format!("e{i}"), pair, 50, None))
                .collect();
            let index = Index::new(entries, 0).unwrap();
            let q = desc(&[1.0, 1.0], 100, None);
            let flat = query(
                &index,
                &q,
                &QueryParams { lambda: 0.0, ..QueryParams::default() },
            )
            .unwrap();
            let shifted = query(
                &index,
                &q,
                &QueryParams { lambda, ..QueryParams::default() },
            )
            .unwrap();
            let flat_ids: Vec<&String> = flat.hits.iter().map(|h| &h.id).collect();
            let shifted_ids: Vec<&String> = shifted.hits.iter().map(|h| &h.id).collect();
            prop_assert_eq!(flat_ids, shifted_ids);
        }
    }
}
