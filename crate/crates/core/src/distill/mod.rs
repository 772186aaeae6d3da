//! Online distillation of a single-query lexical student.
//!
//! The student is linear over TF-IDF features with a ReLU on each parameter,
//! so its effective weights form an executable non-negative term query. It is
//! fitted to the teacher's ranking of the first-stage results with a
//! reciprocal-rank weighted pairwise loss plus ℓ1, then truncated to at most
//! `t` terms and interpolated with the original query.

mod loss;
mod train;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Provenance, SparseQuery};

pub use loss::{
    distill_loss, linear_loss_closed_form, loss_gradient, pair_weight, Features, LossParts,
    LossVariant, PAIR_RESTRICT_HEAD, PAIR_RESTRICT_MIN_DOCS,
};
pub use train::{train_odis, ConvergenceEvent, TrainConfig, FEATURE_INIT, QUERY_TERM_INIT};

/// Raw student parameters. The effective weight of a term is `max(0, θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistilledModel {
    pub theta: BTreeMap<String, f64>,
    pub variant: LossVariant,
    pub r_final: f64,
    pub epochs: usize,
    pub converged: bool,
    pub events: Vec<ConvergenceEvent>,
}

impl DistilledModel {
    pub fn from_theta(theta: BTreeMap<String, f64>) -> Self {
        Self {
            theta,
            variant: LossVariant::default(),
            r_final: 0.0,
            epochs: 0,
            converged: false,
            events: Vec::new(),
        }
    }

    pub fn effective(&self, term: &str) -> f64 {
        self.theta.get(term).map_or(0.0, |t| t.max(0.0))
    }

    /// `O(d) = Σ_t max(0, θ_t) · f(d, t)`.
    pub fn score(&self, features: &BTreeMap<String, f64>) -> f64 {
        features.iter().map(|(t, v)| self.effective(t) * v).sum()
    }

    pub fn nonzero_count(&self, threshold: f64) -> usize {
        self.theta.values().filter(|&&t| t > threshold).count()
    }
}

/// Keeps effective weights above `threshold`, then the `t` largest (ties by
/// term). `None` means the student is empty.
pub fn sparsify(model: &DistilledModel, t: usize, threshold: f64) -> Option<SparseQuery> {
    let mut kept: Vec<(&String, f64)> = model
        .theta
        .iter()
        .map(|(term, &th)| (term, th.max(0.0)))
        .filter(|&(_, w)| w > threshold)
        .collect();
    kept.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    kept.truncate(t);
    SparseQuery::from_positive(
        kept.into_iter().map(|(term, w)| (term.clone(), w)),
        Provenance::Distilled,
    )
}

/// `(1 − λ) · original + λ · new`, both L1-normalised first.
pub fn merge_query(original: &SparseQuery, new: &SparseQuery, lambda: f64) -> Result<SparseQuery> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidLambda(lambda));
    }
    let mut merged: BTreeMap<String, f64> = BTreeMap::new();
    for (t, w) in original.l1_normalized().iter() {
        *merged.entry(t.to_string()).or_insert(0.0) += (1.0 - lambda) * w;
    }
    for (t, w) in new.l1_normalized().iter() {
        *merged.entry(t.to_string()).or_insert(0.0) += lambda * w;
    }
    SparseQuery::from_positive(merged, Provenance::Merged).ok_or(Error::EmptyQuery)
}

/// JSON form of a learned or expanded query for offline inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryModelRecord {
    pub query_id: String,
    pub provenance: Provenance,
    pub terms: BTreeMap<String, f64>,
    pub lambda: f64,
    pub variant: String,
    pub r_final: Option<f64>,
    pub epochs: Option<usize>,
}

impl QueryModelRecord {
    pub fn distilled(
        query_id: &str,
        model: &DistilledModel,
        student: &SparseQuery,
        lambda: f64,
    ) -> Self {
        Self {
            query_id: query_id.to_string(),
            provenance: Provenance::Distilled,
            terms: student.weights().clone(),
            lambda,
            variant: model.variant.to_string(),
            r_final: Some(model.r_final),
            epochs: Some(model.epochs),
        }
    }

    pub fn expanded(query_id: &str, method: &str, expansion: &SparseQuery, lambda: f64) -> Self {
        Self {
            query_id: query_id.to_string(),
            provenance: Provenance::Expanded,
            terms: expansion.weights().clone(),
            lambda,
            variant: method.to_string(),
            r_final: None,
            epochs: None,
        }
    }
}
