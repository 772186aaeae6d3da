//! Full-batch Adam over the pairwise distillation loss with escalating ℓ1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{Features, LossVariant, Problem};
use super::DistilledModel;
use crate::error::{Error, Result};
use crate::types::{RankedList, SparseQuery};

/// Initial θ for terms of the original query.
pub const QUERY_TERM_INIT: f64 = 1e-3;
/// Scale of the seeded initial θ for every other feature term.
pub const FEATURE_INIT: f64 = 1e-4;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Relative change in total loss below which an epoch counts as still.
    pub convergence_tol: f64,
    /// Consecutive still epochs that make a convergence event.
    pub patience: usize,
    pub r_init: f64,
    pub r_factor: f64,
    /// Maximum number of non-zero effective weights.
    pub sparsity_target: usize,
    pub nonzero_threshold: f64,
    pub loss_variant: LossVariant,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_epochs: 500,
            convergence_tol: 1e-4,
            patience: 10,
            r_init: 1.0,
            r_factor: 10.0,
            sparsity_target: 50,
            nonzero_threshold: 1e-6,
            loss_variant: LossVariant::Softplus,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("convergence_tol", self.convergence_tol),
            ("r_init", self.r_init),
            ("r_factor", self.r_factor),
            ("nonzero_threshold", self.nonzero_threshold),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.max_epochs == 0 || self.patience == 0 || self.sparsity_target == 0 {
            return Err(Error::Config(
                "max_epochs, patience and sparsity_target must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// A point where training converged under the current regularisation rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEvent {
    pub epoch: usize,
    pub r: f64,
    pub nonzero: usize,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(dim: usize) -> Self {
        Self {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for ((th, &g), (m, v)) in theta
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let before = *th;
            *th -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
            // A weight crossing zero from above is clipped there; with zero
            // subgradients at 0 it then stays put until the moments refill.
            if before > 0.0 && *th < 0.0 {
                *th = 0.0;
                *m = 0.0;
                *v = 0.0;
            }
        }
    }
}

fn count_nonzero(theta: &[f64], threshold: f64) -> usize {
    theta.iter().filter(|&&t| t > threshold).count()
}

/// Distils a sparse non-negative linear student from a teacher ranking.
///
/// `features` must cover every ranked document. Terms of `original` start at
/// [`QUERY_TERM_INIT`]; all other feature terms start at small seeded
/// positive values so their gates are open. Each time training converges
/// with more than `sparsity_target` effective terms, `r` is multiplied by
/// `r_factor` and training resumes from the current θ.
pub fn train_odis(
    features: &Features,
    teacher_ranking: &RankedList,
    original: Option<&SparseQuery>,
    config: &TrainConfig,
) -> Result<DistilledModel> {
    config.validate()?;
    if teacher_ranking.len() < 2 {
        return Err(Error::TooFewDocs(teacher_ranking.len()));
    }
    let query_terms: Vec<String> = original
        .map(|q| q.terms().map(str::to_string).collect())
        .unwrap_or_default();
    let problem = Problem::new(
        features,
        teacher_ranking,
        query_terms.iter().cloned(),
        config.loss_variant,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut theta: Vec<f64> = problem
        .terms
        .iter()
        .map(|t| {
            let jitter: f64 = rng.gen();
            if query_terms.binary_search(t).is_ok() {
                QUERY_TERM_INIT
            } else {
                FEATURE_INIT * (0.5 + jitter)
            }
        })
        .collect();

    let mut adam = Adam::new(theta.len());
    let mut r = config.r_init;
    let mut prev: Option<f64> = None;
    let mut still = 0;
    let mut epochs = 0;
    let mut events = Vec::new();
    let mut converged = false;

    while epochs < config.max_epochs {
        let (loss, grad) = problem.loss_and_grad(&theta, r);
        let total = loss.total();
        if let Some(p) = prev {
            let rel = (p - total).abs() / p.abs().max(f64::MIN_POSITIVE);
            if rel < config.convergence_tol {
                still += 1;
            } else {
                still = 0;
            }
        }
        prev = Some(total);

        if still >= config.patience {
            let nonzero = count_nonzero(&theta, config.nonzero_threshold);
            events.push(ConvergenceEvent {
                epoch: epochs,
                r,
                nonzero,
            });
            if nonzero <= config.sparsity_target {
                converged = true;
                break;
            }
            log::debug!("converged with {nonzero} terms at r={r}; escalating");
            r *= config.r_factor;
            still = 0;
            prev = None;
            adam = Adam::new(theta.len());
            continue;
        }

        adam.step(&mut theta, &grad, config.learning_rate);
        epochs += 1;
    }

    Ok(DistilledModel {
        theta: problem
            .terms
            .into_iter()
            .zip(theta)
            .filter(|&(_, v)| v != 0.0)
            .collect(),
        variant: config.loss_variant,
        r_final: r,
        epochs,
        converged,
        events,
    })
}
