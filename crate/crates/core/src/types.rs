//! Shared domain types: documents, weighted term queries and ranked lists.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::tokenize;

/// A corpus document as read from the JSON-lines corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            text: text.into(),
        }
    }
}

/// Where a [`SparseQuery`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Distilled,
    Expanded,
    Merged,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Provenance::Original => "original",
            Provenance::Distilled => "distilled",
            Provenance::Expanded => "expanded",
            Provenance::Merged => "merged",
        };
        f.write_str(s)
    }
}

/// A non-empty map of terms to strictly positive weights.
///
/// Terms are kept in a `BTreeMap` so every traversal (and therefore every
/// floating-point accumulation driven by one) happens in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseQuery {
    weights: BTreeMap<String, f64>,
    provenance: Provenance,
}

impl SparseQuery {
    /// Builds a query, rejecting empty maps and any weight that is not finite and > 0.
    pub fn new(weights: BTreeMap<String, f64>, provenance: Provenance) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyQuery);
        }
        for (term, &weight) in &weights {
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::InvalidWeight {
                    term: term.clone(),
                    weight,
                });
            }
        }
        Ok(Self {
            weights,
            provenance,
        })
    }

    /// Like [`SparseQuery::new`] but silently drops terms whose weight is not > 0.
    /// Returns `None` if nothing survives.
    pub fn from_positive(
        weights: impl IntoIterator<Item = (String, f64)>,
        provenance: Provenance,
    ) -> Option<Self> {
        let weights: BTreeMap<String, f64> = weights
            .into_iter()
            .filter(|(_, w)| w.is_finite() && *w > 0.0)
            .collect();
        if weights.is_empty() {
            None
        } else {
            Some(Self {
                weights,
                provenance,
            })
        }
    }

    /// Tokenizes raw query text; each term is weighted by its count in the text.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for term in tokenize(text) {
            *weights.entry(term).or_insert(0.0) += 1.0;
        }
        Self::new(weights, Provenance::Original)
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.weights.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.weights.iter().map(|(t, &w)| (t.as_str(), w))
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.weights.keys().map(String::as_str)
    }

    pub fn l1_norm(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Multiplies every weight by `factor` (must be > 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let weights = self
            .weights
            .iter()
            .map(|(t, &w)| (t.clone(), w * factor))
            .collect();
        Self::new(weights, self.provenance)
    }

    /// Rescales so the weights sum to 1.
    pub fn l1_normalized(&self) -> Self {
        let norm = self.l1_norm();
        Self {
            weights: self
                .weights
                .iter()
                .map(|(t, &w)| (t.clone(), w / norm))
                .collect(),
            provenance: self.provenance,
        }
    }
}

/// One row of a [`RankedList`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub doc_id: String,
    pub score: f64,
    pub rank: usize,
}

/// Scored documents in rank order.
///
/// Scores are non-increasing, ranks run 1..=len, doc_ids are unique and
/// equal scores are ordered by ascending doc_id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    entries: Vec<RankedEntry>,
}

/// Descending score, then ascending doc_id.
pub(crate) fn rank_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

impl RankedList {
    pub fn empty(query_id: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            entries: Vec::new(),
        }
    }

    /// Sorts `(doc_id, score)` pairs into a ranking.
    pub fn from_scores(
        query_id: impl Into<String>,
        mut scored: Vec<(String, f64)>,
    ) -> Result<Self> {
        scored.sort_by(|a, b| rank_order((&a.0, a.1), (&b.0, b.1)));
        Self::from_ordered(query_id, scored)
    }

    /// Sorts and keeps the best `k`.
    pub fn top_k(
        query_id: impl Into<String>,
        mut scored: Vec<(String, f64)>,
        k: usize,
    ) -> Result<Self> {
        if scored.len() > k {
            scored.select_nth_unstable_by(k, |a, b| rank_order((&a.0, a.1), (&b.0, b.1)));
            scored.truncate(k);
        }
        Self::from_scores(query_id, scored)
    }

    /// Takes pairs already in rank order and assigns ranks 1..=n.
    pub fn from_ordered(
        query_id: impl Into<String>,
        ordered: Vec<(String, f64)>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(ordered.len());
        let mut entries = Vec::with_capacity(ordered.len());
        for (i, (doc_id, score)) in ordered.into_iter().enumerate() {
            if !seen.insert(doc_id.clone()) {
                return Err(Error::DuplicateInList(doc_id));
            }
            entries.push(RankedEntry {
                doc_id,
                score,
                rank: i + 1,
            });
        }
        Ok(Self {
            query_id: query_id.into(),
            entries,
        })
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, RankedEntry> {
        self.entries.iter()
    }

    pub fn doc_ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.doc_id.as_str()).collect()
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    pub fn truncated(mut self, k: usize) -> Self {
        self.truncate(k);
        self
    }
}

impl<'a> IntoIterator for &'a RankedList {
    type Item = &'a RankedEntry;
    type IntoIter = std::slice::Iter<'a, RankedEntry>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}
