//! Deterministic stand-in teachers for desk-scale experiments.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Scorer;
use crate::error::Result;
use crate::index::{term_frequencies, tfidf, Index};
use crate::types::Document;

/// Per-document RNG keyed by `(seed, doc_id)` so a document always draws the
/// same noise no matter when or in which batch it is scored.
fn doc_rng(seed: u64, doc_id: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(doc_id.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Gaussian noise `N(0, sd²)` fixed by `(seed, doc_id)`.
pub fn noise_for(seed: u64, doc_id: &str, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    let z: f64 = doc_rng(seed, doc_id).sample(StandardNormal);
    sd * z
}

/// A linear teacher over TF-IDF features: `Σ w_t · tfidf(t, d) + noise`.
///
/// Only the document frequencies of its own weight terms are kept, so the
/// teacher scores raw text without needing the index afterwards.
#[derive(Debug, Clone)]
pub struct HiddenLinearTeacher {
    weights: BTreeMap<String, f64>,
    noise_sd: f64,
    seed: u64,
    num_docs: usize,
    df: HashMap<String, usize>,
}

impl HiddenLinearTeacher {
    pub fn new(weights: BTreeMap<String, f64>, noise_sd: f64, seed: u64, index: &Index) -> Self {
        let df = weights
            .keys()
            .map(|t| (t.clone(), index.df(t)))
            .collect();
        Self {
            weights,
            noise_sd,
            seed,
            num_docs: index.num_docs(),
            df,
        }
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    /// Noise-free part of the score.
    pub fn linear_score(&self, text: &str) -> f64 {
        let tfs = term_frequencies(text);
        self.weights
            .iter()
            .map(|(t, &w)| match tfs.get(t) {
                Some(&tf) => w * tfidf(tf, self.df[t], self.num_docs),
                None => 0.0,
            })
            .sum()
    }

    pub fn score(&self, doc: &Document) -> f64 {
        self.linear_score(&doc.text) + noise_for(self.seed, &doc.doc_id, self.noise_sd)
    }

    /// Weights plus the corpus statistics needed to recompute TF-IDF from
    /// raw text, in the shape a stateless scoring service can load.
    pub fn export_mock_weights(&self) -> MockWeightsFile {
        MockWeightsFile {
            weights: self.weights.clone(),
            num_docs: self.num_docs,
            df: self.df.iter().map(|(t, &d)| (t.clone(), d)).collect(),
        }
    }
}

impl Scorer for HiddenLinearTeacher {
    fn score_batch(&self, _query: &str, docs: &[Document]) -> Result<Vec<f64>> {
        Ok(docs.iter().map(|d| self.score(d)).collect())
    }
}

/// Weights file consumed by the mock-linear scoring service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockWeightsFile {
    pub weights: BTreeMap<String, f64>,
    pub num_docs: usize,
    pub df: BTreeMap<String, usize>,
}

/// Per-query hidden teacher weights, as written by the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherWeights {
    pub noise_sd: f64,
    pub seed: u64,
    pub queries: BTreeMap<String, BTreeMap<String, f64>>,
}

impl TeacherWeights {
    pub fn teacher_for(&self, query_id: &str, index: &Index) -> Option<HiddenLinearTeacher> {
        self.queries
            .get(query_id)
            .map(|w| HiddenLinearTeacher::new(w.clone(), self.noise_sd, self.seed, index))
    }
}

/// Scores from relevance judgements: `grade + u` with `u ∈ [0, 0.5)` drawn
/// per document, so higher grades always win and ties are seeded.
#[derive(Debug, Clone)]
pub struct QrelsOracleTeacher {
    grades: HashMap<String, u32>,
    seed: u64,
}

const ORACLE_TIE_SPAN: f64 = 0.5;

impl QrelsOracleTeacher {
    pub fn new(grades: HashMap<String, u32>, seed: u64) -> Self {
        Self { grades, seed }
    }

    pub fn score(&self, doc_id: &str) -> f64 {
        let grade = self.grades.get(doc_id).copied().unwrap_or(0);
        let u: f64 = doc_rng(self.seed, doc_id).gen();
        f64::from(grade) + ORACLE_TIE_SPAN * u
    }
}

impl Scorer for QrelsOracleTeacher {
    fn score_batch(&self, _query: &str, docs: &[Document]) -> Result<Vec<f64>> {
        Ok(docs.iter().map(|d| self.score(&d.doc_id)).collect())
    }
}
