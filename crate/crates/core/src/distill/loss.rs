//! Reciprocal-rank weighted pairwise loss over a ReLU-gated linear student.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::DistilledModel;
use crate::error::{Error, Result};
use crate::types::RankedList;

/// Sparse feature vectors keyed by doc_id.
pub type Features = HashMap<String, BTreeMap<String, f64>>;

/// Softplus rankings longer than this only use pairs anchored in the head.
pub const PAIR_RESTRICT_MIN_DOCS: usize = 200;
/// Head depth used when pairs are restricted.
pub const PAIR_RESTRICT_HEAD: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossVariant {
    /// `w · (O(D2) − O(D1))`, unbounded below.
    Linear,
    /// `w · ln(1 + exp(O(D2) − O(D1)))`.
    #[default]
    Softplus,
}

impl std::fmt::Display for LossVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossVariant::Linear => "linear",
            LossVariant::Softplus => "softplus",
        })
    }
}

/// Pair weight `1/rank1 − 1/rank2`.
pub fn pair_weight(rank1: usize, rank2: usize) -> Result<f64> {
    if rank1 == 0 || rank2 == 0 {
        return Err(Error::ZeroRank);
    }
    Ok(1.0 / rank1 as f64 - 1.0 / rank2 as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub data: f64,
    pub reg: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.data + self.reg
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A ranking and its features compiled to dense local ids.
///
/// Rows are stored in rank order; `terms` is sorted, so local ids follow
/// lexicographic term order.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub terms: Vec<String>,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub ranks: Vec<usize>,
    pub variant: LossVariant,
    /// Upper-triangle pairs `(above, below, w)`; empty for the linear variant,
    /// which uses `linear_coef` instead.
    pub pairs: Vec<(u32, u32, f64)>,
    /// Per-document coefficient of `O(d)` in the linear loss.
    pub linear_coef: Vec<f64>,
}

impl Problem {
    pub fn new(
        features: &Features,
        ranking: &RankedList,
        extra_terms: impl IntoIterator<Item = String>,
        variant: LossVariant,
    ) -> Result<Self> {
        let mut vocab: BTreeSet<String> = extra_terms.into_iter().collect();
        for entry in ranking {
            let row = features
                .get(&entry.doc_id)
                .ok_or_else(|| Error::MissingFeatures(entry.doc_id.clone()))?;
            vocab.extend(row.keys().cloned());
        }
        let terms: Vec<String> = vocab.into_iter().collect();
        let local: HashMap<&str, usize> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let rows = ranking
            .iter()
            .map(|e| {
                features[&e.doc_id]
                    .iter()
                    .map(|(t, &v)| (local[t.as_str()], v))
                    .collect()
            })
            .collect();
        let ranks: Vec<usize> = ranking.iter().map(|e| e.rank).collect();
        if ranks.contains(&0) {
            return Err(Error::ZeroRank);
        }

        let n = ranks.len();
        let (pairs, linear_coef) = match variant {
            LossVariant::Linear => {
                let rr_sum: f64 = ranks.iter().map(|&r| 1.0 / r as f64).sum();
                let coef = ranks
                    .iter()
                    .map(|&r| rr_sum - n as f64 / r as f64)
                    .collect();
                (Vec::new(), coef)
            }
            LossVariant::Softplus => {
                let head = if n > PAIR_RESTRICT_MIN_DOCS {
                    PAIR_RESTRICT_HEAD.min(n)
                } else {
                    n
                };
                let mut pairs = Vec::new();
                for i in 0..head {
                    for j in (i + 1)..n {
                        let w = 1.0 / ranks[i] as f64 - 1.0 / ranks[j] as f64;
                        if w != 0.0 {
                            pairs.push((i as u32, j as u32, w));
                        }
                    }
                }
                (pairs, Vec::new())
            }
        };
        Ok(Self {
            terms,
            rows,
            ranks,
            variant,
            pairs,
            linear_coef,
        })
    }

    pub fn theta_vec(&self, model: &DistilledModel) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| model.theta.get(t).copied().unwrap_or(0.0))
            .collect()
    }

    /// Student scores `O(d) = Σ relu(θ_t) · f(d, t)` for every row.
    pub fn student_scores(&self, theta: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(t, v)| theta[t].max(0.0) * v).sum())
            .collect()
    }

    /// Data loss and `∂data/∂O(d)` per row.
    fn data_and_coef(&self, scores: &[f64]) -> (f64, Vec<f64>) {
        match self.variant {
            LossVariant::Linear => {
                let data = self
                    .linear_coef
                    .iter()
                    .zip(scores)
                    .map(|(c, o)| c * o)
                    .sum();
                (data, self.linear_coef.clone())
            }
            LossVariant::Softplus => {
                let mut coef = vec![0.0; scores.len()];
                let mut data = 0.0;
                for &(i, j, w) in &self.pairs {
                    let (i, j) = (i as usize, j as usize);
                    let margin = scores[j] - scores[i];
                    data += w * softplus(margin);
                    let g = w * sigmoid(margin);
                    coef[j] += g;
                    coef[i] -= g;
                }
                (data, coef)
            }
        }
    }

    pub fn loss(&self, theta: &[f64], r: f64) -> LossParts {
        let scores = self.student_scores(theta);
        let (data, _) = self.data_and_coef(&scores);
        let reg = r * theta.iter().map(|t| t.abs()).sum::<f64>();
        LossParts { data, reg }
    }

    /// Total loss and its gradient. ReLU and |·| subgradients at 0 are 0.
    pub fn loss_and_grad(&self, theta: &[f64], r: f64) -> (LossParts, Vec<f64>) {
        let scores = self.student_scores(theta);
        let (data, coef) = self.data_and_coef(&scores);
        let mut grad = vec![0.0; theta.len()];
        for (row, c) in self.rows.iter().zip(&coef) {
            for &(t, v) in row {
                grad[t] += c * v;
            }
        }
        let mut reg = 0.0;
        for (g, &th) in grad.iter_mut().zip(theta) {
            if th <= 0.0 {
                *g = 0.0;
            }
            *g += r * sign(th);
            reg += th.abs();
        }
        (LossParts { data, reg: r * reg }, grad)
    }
}

/// Evaluates the distillation loss of `model` against `teacher_ranking`.
///
/// Pairs are `(D1, D2)` with D1 ranked above D2, weighted by
/// [`pair_weight`]. Softplus rankings longer than 200 documents only use
/// pairs whose upper member is in the top 50.
pub fn distill_loss(
    model: &DistilledModel,
    features: &Features,
    teacher_ranking: &RankedList,
    variant: LossVariant,
    r: f64,
) -> Result<LossParts> {
    let problem = Problem::new(features, teacher_ranking, model.theta.keys().cloned(), variant)?;
    let theta = problem.theta_vec(model);
    if variant == LossVariant::Linear {
        let data = enumerate_linear(&problem, &problem.student_scores(&theta));
        let reg = r * theta.iter().map(|t| t.abs()).sum::<f64>();
        return Ok(LossParts { data, reg });
    }
    Ok(problem.loss(&theta, r))
}

/// Linear data loss by explicit enumeration of every upper-triangle pair.
fn enumerate_linear(problem: &Problem, scores: &[f64]) -> f64 {
    let n = scores.len();
    let mut data = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = 1.0 / problem.ranks[i] as f64 - 1.0 / problem.ranks[j] as f64;
            data += w * (scores[j] - scores[i]);
        }
    }
    data
}

/// Linear data loss via the per-document reduction
/// `Σ_d (Σ_e RR(e) − n · RR(d)) · O(d)`.
pub fn linear_loss_closed_form(
    model: &DistilledModel,
    features: &Features,
    teacher_ranking: &RankedList,
) -> Result<f64> {
    let problem = Problem::new(
        features,
        teacher_ranking,
        model.theta.keys().cloned(),
        LossVariant::Linear,
    )?;
    let theta = problem.theta_vec(model);
    Ok(problem.loss(&theta, 0.0).data)
}

/// Exact gradient of the total loss with respect to θ. Exact zeros are omitted.
pub fn loss_gradient(
    model: &DistilledModel,
    features: &Features,
    teacher_ranking: &RankedList,
    variant: LossVariant,
    r: f64,
) -> Result<BTreeMap<String, f64>> {
    let problem = Problem::new(features, teacher_ranking, model.theta.keys().cloned(), variant)?;
    let theta = problem.theta_vec(model);
    let (_, grad) = problem.loss_and_grad(&theta, r);
    Ok(problem
        .terms
        .into_iter()
        .zip(grad)
        .filter(|&(_, g)| g != 0.0)
        .collect())
}
