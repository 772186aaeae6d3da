//! Teacher scoring under a per-query budget.
//!
//! A [`Scorer`] stands in for the expensive re-ranker. Every document it
//! scores for a query is charged once against that query's [`ScoreBudget`];
//! later requests for the same document are answered from the budget's cache.

mod remote;
mod teachers;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::index::Index;
use crate::types::{Document, RankedList};

pub use remote::{RemoteTeacher, ScoreRequest, ScoreResponse, HealthResponse, DEFAULT_BATCH_SIZE};
pub use teachers::{
    noise_for, HiddenLinearTeacher, MockWeightsFile, QrelsOracleTeacher, TeacherWeights,
};

/// Default per-query cap on teacher invocations.
pub const DEFAULT_BUDGET: usize = 1000;

/// Something that scores (query, document) pairs.
///
/// `score_batch` must return exactly one finite score per input document,
/// in input order, and must be deterministic for fixed inputs.
pub trait Scorer: Send + Sync {
    fn score_batch(&self, query: &str, docs: &[Document]) -> Result<Vec<f64>>;
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn score_batch(&self, query: &str, docs: &[Document]) -> Result<Vec<f64>> {
        (**self).score_batch(query, docs)
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score_batch(&self, query: &str, docs: &[Document]) -> Result<Vec<f64>> {
        (**self).score_batch(query, docs)
    }
}

/// Per-query ledger of teacher-scored documents.
///
/// `used()` is the number of distinct documents scored, never more than `cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBudget {
    cap: usize,
    scores: BTreeMap<String, f64>,
}

impl Default for ScoreBudget {
    fn default() -> Self {
        Self::new(DEFAULT_BUDGET)
    }
}

impl ScoreBudget {
    pub fn new(cap: usize) -> Self {
        Self {
            cap,
            scores: BTreeMap::new(),
        }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn used(&self) -> usize {
        self.scores.len()
    }

    pub fn remaining(&self) -> usize {
        self.cap - self.scores.len()
    }

    pub fn is_scored(&self, doc_id: &str) -> bool {
        self.scores.contains_key(doc_id)
    }

    pub fn cached(&self, doc_id: &str) -> Option<f64> {
        self.scores.get(doc_id).copied()
    }

    pub fn scored_ids(&self) -> impl Iterator<Item = &str> {
        self.scores.keys().map(String::as_str)
    }

    /// All cached scores as a ranking.
    pub fn ranking(&self, query_id: &str) -> RankedList {
        let scored = self.scores.iter().map(|(d, &s)| (d.clone(), s)).collect();
        RankedList::from_scores(query_id, scored).expect("cache keys are unique")
    }

    fn charge(&mut self, doc_id: String, score: f64) {
        debug_assert!(self.scores.len() < self.cap || self.scores.contains_key(&doc_id));
        self.scores.insert(doc_id, score);
    }
}

/// Runs `scorer` over `docs`, checking the alignment and finiteness contract.
pub fn checked_scores<S: Scorer + ?Sized>(
    scorer: &S,
    query: &str,
    docs: &[Document],
) -> Result<Vec<f64>> {
    if docs.is_empty() {
        return Ok(Vec::new());
    }
    let scores = scorer.score_batch(query, docs)?;
    if scores.len() != docs.len() {
        return Err(Error::ScoreCountMismatch {
            batch: 0,
            expected: docs.len(),
            got: scores.len(),
        });
    }
    if let Some(position) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore { batch: 0, position });
    }
    Ok(scores)
}

/// Re-ranks `candidates` by teacher score.
///
/// Candidates already in the budget reuse their cached score for free. Fresh
/// candidates are scored in list order until the budget runs out; the rest
/// are dropped. Returns `None` when nothing could be scored or reused.
pub fn rerank<S: Scorer + ?Sized>(
    scorer: &S,
    index: &Index,
    query: &str,
    candidates: &RankedList,
    budget: &mut ScoreBudget,
) -> Result<Option<RankedList>> {
    if candidates.is_empty() {
        return Err(Error::EmptyList);
    }
    let mut out: Vec<(String, f64)> = Vec::with_capacity(candidates.len());
    let mut fresh: Vec<Document> = Vec::new();
    let remaining = budget.remaining();
    for entry in candidates {
        if let Some(score) = budget.cached(&entry.doc_id) {
            out.push((entry.doc_id.clone(), score));
        } else if fresh.len() < remaining {
            let doc = index
                .document(&entry.doc_id)
                .ok_or_else(|| Error::UnknownDoc(entry.doc_id.clone()))?;
            fresh.push(doc);
        }
    }
    let scores = checked_scores(scorer, query, &fresh)?;
    for (doc, score) in fresh.into_iter().zip(scores) {
        budget.charge(doc.doc_id.clone(), score);
        out.push((doc.doc_id, score));
    }
    if out.is_empty() {
        return Ok(None);
    }
    RankedList::from_scores(candidates.query_id.clone(), out).map(Some)
}

const EXHAUSTIVE_CHUNK: usize = 4096;

/// Scores every document in the index. Only sensible for small collections.
pub fn exhaustive_score<S: Scorer + ?Sized>(
    scorer: &S,
    query_id: &str,
    query: &str,
    index: &Index,
) -> Result<RankedList> {
    let docs: Vec<Document> = index.documents().collect();
    let mut scored = Vec::with_capacity(docs.len());
    for chunk in docs.chunks(EXHAUSTIVE_CHUNK) {
        let scores = checked_scores(scorer, query, chunk)?;
        scored.extend(chunk.iter().map(|d| d.doc_id.clone()).zip(scores));
    }
    RankedList::from_scores(query_id, scored)
}
