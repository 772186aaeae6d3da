//! End-to-end pipelines, synthetic collections, file formats and reports.

mod pipeline;
mod report;
mod synth;
mod trec;

pub use pipeline::{
    run_baseline_pipeline, run_odis_pipeline, run_pipeline, run_queries, student_rerank,
    BudgetLedger, Diagnostics, FusionConfig, Method, PipelineConfig, PipelineOutput,
    TeacherSource, Timings,
};
pub use report::{evaluate_run, EvalOptions, EvalReport, Run};
pub use synth::{
    generate_synthetic, Range, SynthCollection, SynthSpec, CORPUS_FILE, QRELS_FILE, QUERIES_FILE,
    TEACHER_FILE,
};
pub use trec::{
    format_corpus, format_queries, format_run, parse_run, read_corpus, read_queries, read_run,
    write_run, Query,
};
