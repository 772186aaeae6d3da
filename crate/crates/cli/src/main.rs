use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use odis::eval::{MetricConfig, Qrels};
use odis::harness::{
    evaluate_run, format_run, generate_synthetic, read_corpus, read_queries, read_run, run_queries, EvalOptions,
    Method, PipelineConfig, Query, SynthSpec, TeacherSource,
};
use odis::index::Index;
use odis::scoring::{exhaustive_score, RemoteTeacher, TeacherWeights};
use odis::{RankedList, SparseQuery};

#[derive(Parser, Debug)]
#[command(name = "odis", version, about = "Budgeted re-ranking with online distillation of lexical queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an index from a JSON-lines corpus
    Index { corpus: PathBuf, index_dir: PathBuf },
    /// First-stage retrieval of a query file
    Retrieve(RetrieveArgs),
    /// Retrieve, re-rank, feed back and re-rank under a shared teacher budget
    Pipeline(PipelineArgs),
    /// Generate a synthetic collection from a JSON spec
    Synth {
        spec: PathBuf,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Per-query and mean metrics of a run file
    Eval(EvalArgs),
    /// Teacher-score every document (reference rankings for RBO)
    Exhaustive(ExhaustiveArgs),
    /// Write per-query weight files for a mock-linear scoring service
    MockWeights {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        teacher_weights: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Bm25,
    Tfidf,
}

#[derive(Args, Debug)]
struct RetrieveArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 1000)]
    k: usize,
    #[arg(long, value_enum, default_value = "bm25")]
    model: Model,
    /// Run file (stdout if omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "bm25")]
    tag: String,
}

#[derive(Args, Debug)]
struct TeacherArgs {
    /// hidden-linear, qrels-oracle or remote:URL
    #[arg(long, default_value = "hidden-linear")]
    teacher: String,
    /// Per-query weights for the hidden-linear teacher
    #[arg(long)]
    teacher_weights: Option<PathBuf>,
    /// Judgements for the qrels-oracle teacher
    #[arg(long)]
    qrels: Option<PathBuf>,
    /// Documents per request for a remote teacher
    #[arg(long, default_value_t = odis::scoring::DEFAULT_BATCH_SIZE)]
    batch_size: usize,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[command(flatten)]
    teacher: TeacherArgs,
    /// JSON pipeline config; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    first_stage: Option<usize>,
    #[arg(long)]
    fb_terms: Option<usize>,
    #[arg(long)]
    fb_docs: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_depth: Option<usize>,
    /// Fuse BM25 with TF-IDF retrieval in the first stage
    #[arg(long)]
    fusion: bool,
    /// Run file (stdout if omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Directory for per-query diagnostics JSON
    #[arg(long, default_value = "diagnostics")]
    diagnostics: PathBuf,
    /// Also write the first-stage run here
    #[arg(long)]
    first_stage_output: Option<PathBuf>,
    #[arg(long)]
    tag: Option<String>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    run: PathBuf,
    qrels: PathBuf,
    /// Exhaustive reference run for RBO
    #[arg(long)]
    ref_run: Option<PathBuf>,
    /// First-stage run for overlap and +Rel/q
    #[arg(long)]
    first_stage: Option<PathBuf>,
    /// Second run for paired t-tests
    #[arg(long)]
    compare: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    min_rel: u32,
    #[arg(long, default_value_t = 0.99)]
    rbo_p: f64,
    /// Write the JSON report here
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExhaustiveArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[command(flatten)]
    teacher: TeacherArgs,
    #[arg(long, default_value_t = 1000)]
    depth: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: odis::Error| e.to_string())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index { corpus, index_dir } => {
            let docs = read_corpus(&corpus).with_context(|| format!("reading {}", corpus.display()))?;
            let index = Index::build(docs)?;
            index.save(&index_dir)?;
            let s = index.stats();
            eprintln!("indexed {} documents, {} terms, avgdl {:.2}", s.num_docs, s.num_terms, s.avgdl);
            Ok(())
        }
        Command::Retrieve(args) => retrieve(args),
        Command::Pipeline(args) => pipeline(args),
        Command::Synth { spec, out } => {
            let spec: SynthSpec = serde_json::from_str(&fs::read_to_string(&spec)?)
                .with_context(|| format!("parsing {}", spec.display()))?;
            let coll = generate_synthetic(&spec)?;
            coll.write_to(&out)?;
            eprintln!(
                "wrote {} documents, {} queries to {}",
                coll.corpus.len(),
                coll.queries.len(),
                out.display()
            );
            Ok(())
        }
        Command::Eval(args) => eval(args),
        Command::Exhaustive(args) => exhaustive(args),
        Command::MockWeights { index, teacher_weights, out } => {
            let index = Index::load(&index)?;
            let weights = load_teacher_weights(&teacher_weights)?;
            fs::create_dir_all(&out)?;
            for qid in weights.queries.keys() {
                let teacher = weights.teacher_for(qid, &index).expect("query present");
                let path = out.join(format!("{qid}.json"));
                fs::write(&path, serde_json::to_string_pretty(&teacher.export_mock_weights())?)?;
            }
            eprintln!("wrote {} weight files to {}", weights.queries.len(), out.display());
            Ok(())
        }
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_queries(path: &Path) -> Result<Vec<Query>> {
    read_queries(path).with_context(|| format!("reading {}", path.display()))
}

fn load_teacher_weights(path: &Path) -> Result<TeacherWeights> {
    serde_json::from_str(&fs::read_to_string(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn teacher_source(args: &TeacherArgs) -> Result<TeacherSource> {
    match args.teacher.as_str() {
        "hidden-linear" => {
            let path = args
                .teacher_weights
                .as_ref()
                .context("--teacher hidden-linear needs --teacher-weights")?;
            Ok(TeacherSource::HiddenLinear(load_teacher_weights(path)?))
        }
        "qrels-oracle" => {
            let path = args.qrels.as_ref().context("--teacher qrels-oracle needs --qrels")?;
            Ok(TeacherSource::QrelsOracle {
                qrels: Qrels::read(path)?,
                seed: 0,
            })
        }
        other => match other.strip_prefix("remote:") {
            Some(url) => {
                let remote = RemoteTeacher::new(url).with_batch_size(args.batch_size);
                let health = remote.health().with_context(|| format!("teacher service at {url}"))?;
                log::info!("teacher service {} reports {}", health.model, health.status);
                Ok(TeacherSource::Remote(remote))
            }
            None => bail!("unknown teacher `{other}`; expected hidden-linear, qrels-oracle or remote:URL"),
        },
    }
}

fn sorted_by_id<T>(mut items: Vec<T>, id: impl Fn(&T) -> &str) -> Vec<T> {
    items.sort_by(|a, b| id(a).cmp(id(b)));
    items
}

fn retrieve(args: RetrieveArgs) -> Result<()> {
    let index = Index::load(&args.index)?;
    let queries = sorted_by_id(load_queries(&args.queries)?, |q| &q.id);
    let mut runs = Vec::with_capacity(queries.len());
    for q in &queries {
        let list = match SparseQuery::from_text(&q.text) {
            Ok(query) => match args.model {
                Model::Bm25 => index.bm25_retrieve(&q.id, &query, args.k)?,
                Model::Tfidf => index.execute_sparse_query(&q.id, &query, args.k)?,
            },
            Err(odis::Error::EmptyQuery) => {
                log::warn!("query {} has no indexable terms", q.id);
                RankedList::empty(q.id.clone())
            }
            Err(e) => return Err(e.into()),
        };
        runs.push(list);
    }
    emit(args.output.as_deref(), &format_run(&runs, &args.tag))
}

fn pipeline_config(args: &PipelineArgs) -> Result<PipelineConfig> {
    let mut c = match &args.config {
        Some(p) => PipelineConfig::from_json_file(p).with_context(|| format!("reading {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(m) = args.method {
        c.method = m;
    }
    if let Some(v) = args.budget {
        c.total_budget = v;
    }
    if let Some(v) = args.first_stage {
        c.first_stage_k = v;
    }
    if let Some(v) = args.fb_terms {
        c.fb_terms = v;
    }
    if let Some(v) = args.fb_docs {
        c.fb_docs = v;
    }
    if let Some(v) = args.lambda {
        c.lambda = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if let Some(v) = args.output_depth {
        c.output_depth = v;
    }
    if args.fusion {
        c.fusion.enabled = true;
    }
    c.validate()?;
    Ok(c)
}

fn pipeline(args: PipelineArgs) -> Result<()> {
    let config = pipeline_config(&args)?;
    let index = Index::load(&args.index)?;
    let queries = sorted_by_id(load_queries(&args.queries)?, |q| &q.id);
    let teachers = teacher_source(&args.teacher)?;
    let outputs = run_queries(&index, &queries, &teachers, &config)?;

    let tag = args.tag.clone().unwrap_or_else(|| config.method.to_string());
    emit(args.output.as_deref(), &format_run(outputs.iter().map(|o| &o.final_ranking), &tag))?;

    if let Some(path) = &args.first_stage_output {
        let lists: Vec<RankedList> = outputs
            .iter()
            .map(|o| {
                let d = &o.diagnostics;
                let n = d.first_stage.len();
                RankedList::from_ordered(
                    d.query_id.clone(),
                    d.first_stage.iter().enumerate().map(|(i, id)| (id.clone(), (n - i) as f64)).collect(),
                )
            })
            .collect::<odis::Result<_>>()?;
        fs::write(path, format_run(&lists, "first-stage"))?;
    }

    fs::create_dir_all(&args.diagnostics)?;
    let mut flagged = 0;
    for o in &outputs {
        let d = &o.diagnostics;
        if !d.flags.is_empty() {
            flagged += 1;
            log::warn!("query {}: {}", d.query_id, d.flags.join(", "));
        }
        let path = args.diagnostics.join(format!("{}.json", d.query_id));
        fs::write(&path, serde_json::to_string_pretty(d)?)?;
    }
    let used: usize = outputs.iter().map(|o| o.diagnostics.budget.used).sum();
    eprintln!(
        "{} queries, method {}, {} teacher calls in total, {flagged} flagged; diagnostics in {}",
        outputs.len(),
        config.method,
        used,
        args.diagnostics.display()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let read = |p: &PathBuf| read_run(p).with_context(|| format!("reading {}", p.display()));
    let run = read(&args.run)?;
    let qrels = Qrels::read(&args.qrels).with_context(|| format!("reading {}", args.qrels.display()))?;
    let reference = args.ref_run.as_ref().map(read).transpose()?;
    let first_stage = args.first_stage.as_ref().map(read).transpose()?;
    let compare = args.compare.as_ref().map(read).transpose()?;
    let options = EvalOptions {
        metrics: MetricConfig {
            k: args.k,
            min_rel: args.min_rel,
            rbo_p: args.rbo_p,
        },
        reference: reference.as_ref(),
        first_stage: first_stage.as_ref(),
        compare: compare.as_ref(),
    };
    let report = evaluate_run(&run, &qrels, &options)?;
    print!("{}", report.to_table());
    if let Some(path) = &args.json {
        fs::write(path, serde_json::to_string_pretty(&report.to_json())?)?;
    }
    Ok(())
}

fn exhaustive(args: ExhaustiveArgs) -> Result<()> {
    let index = Index::load(&args.index)?;
    let queries = sorted_by_id(load_queries(&args.queries)?, |q| &q.id);
    let teachers = teacher_source(&args.teacher)?;
    let mut runs = Vec::with_capacity(queries.len());
    for q in &queries {
        let teacher = teachers.teacher_for(q, &index)?;
        runs.push(exhaustive_score(&teacher, &q.id, &q.text, &index)?.truncated(args.depth));
    }
    emit(args.output.as_deref(), &format_run(&runs, "exhaustive"))
}
