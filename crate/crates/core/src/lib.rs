//! Online distillation for pseudo-relevance feedback.
//!
//! At query time a sparse, non-negative linear term-weight model is fitted
//! to a teacher's re-ranking of first-stage results, then executed as a
//! query over the inverted index to pull in documents the first stage
//! missed. Both passes share one teacher budget.
//!
//! ```no_run
//! use odis::harness::{run_odis_pipeline, PipelineConfig, Query};
//! use odis::index::Index;
//! use odis::scoring::TeacherWeights;
//!
//! # fn main() -> odis::Result<()> {
//! let index = Index::load("index/")?;
//! let weights: TeacherWeights = serde_json::from_str(&std::fs::read_to_string("teacher.json")?)?;
//! let query = Query::new("Q01", "kalo mipa");
//! let teacher = weights.teacher_for(&query.id, &index).unwrap();
//! let out = run_odis_pipeline(&index, &query, &teacher, &PipelineConfig::default())?;
//! println!("{} documents", out.final_ranking.len());
//! # Ok(())
//! # }
//! ```

pub mod distill;
pub mod error;
pub mod eval;
pub mod harness;
pub mod index;
pub mod prf;
pub mod scoring;
pub mod types;

pub use error::{Error, Result};
pub use types::{Document, Provenance, RankedEntry, RankedList, SparseQuery};
