//! `amr-bench`: command-line front end.
//!
//! Exit codes: 0 success, 1 structural failure (a graph does not parse), 2 usage or
//! integrity error (bad flags or config, unreadable files, corrupt gold data, missing
//! predictions).

use amr_bench::config::RunConfig;
use amr_bench::corpus::{
    format_finetune, format_prompts, load_path, stratified_sample, to_jsonl, CorpusEntry, LoadOptions, Split,
    SubsetCatalog,
};
use amr_bench::evaluator::{evaluate, read_predictions, CiMode, EvalOptions, InvalidHandling};
use amr_bench::extraction::{Extractor, TemplateFamily};
use amr_bench::penman::{parse, serialize_with_metadata, StructuralReport};
use amr_bench::report::{emit_report, render, summary_table, Report, RunInfo, REPORT_FILE};
use amr_bench::smatch::{brute_force_score, score_pair, PairOutcome, ScoreConfig, DEFAULT_MAX_VARIABLES};
use amr_bench::{analysis, TripleSet};
use clap::{Args, Parser, Subcommand};
use std::collections::HashSet;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "amr-bench", version, about = "Parse, validate and score AMR graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a graph file (or every file in a directory) and pretty-print it.
    Parse(GraphArgs),
    /// Check a graph file (or every file in a directory) and list structural errors.
    Validate(GraphArgs),
    /// SMATCH precision, recall and F1 of a predicted graph against a gold graph.
    Score(ScoreArgs),
    /// Score a predictions file against a gold corpus and write a report directory.
    Eval(EvalArgs),
    /// Write fine-tuning records (or inference prompts) for a corpus.
    Prepare(PrepareArgs),
    /// Draw a depth-stratified sample and print its ids.
    Sample(SampleArgs),
    /// Render comparison tables and charts from saved reports.
    Report(ReportArgs),
}

#[derive(Args)]
struct GraphArgs {
    path: PathBuf,
    /// Treat the input as a raw generation and extract the graph with this template first.
    #[arg(long)]
    family: Option<TemplateFamily>,
}

#[derive(Args)]
struct ScoreArgs {
    gold: PathBuf,
    pred: PathBuf,
    /// Extract the prediction from a raw generation of this template first.
    #[arg(long)]
    family: Option<TemplateFamily>,
    /// Hill-climbing starts (default 4).
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pairs with at most this many variables on the smaller side are solved exactly (default 5).
    #[arg(long)]
    exact_threshold: Option<usize>,
    /// Always use exhaustive search (at most 8 variables on the smaller side).
    #[arg(long)]
    exact: bool,
    /// Print the full result, mapping included, as JSON.
    #[arg(long)]
    json: bool,
}

/// Settings shared by corpus commands; each overrides the config file.
#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed; falls back to the config, then AMR_BENCH_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Chat template family (llama32, deepseek-r1-llama-distilled, phi35, gemma2, plain).
    #[arg(long)]
    family: Option<TemplateFamily>,
    /// Only use entries of this split.
    #[arg(long)]
    split: Option<Split>,
    /// Skip gold entries that do not parse instead of failing.
    #[arg(long)]
    relaxed: bool,
    /// File with one entry id per line; other entries are ignored.
    #[arg(long)]
    ids: Option<PathBuf>,
    /// Compare subset/split counts with the AMR 3.0 release and warn on differences.
    #[arg(long)]
    check_catalog: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Gold corpus file or directory.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Predictions JSONL: one {"id", "generation"} object per line.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Report directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run name used in comparison tables and charts.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    exact_threshold: Option<usize>,
    /// Scoring threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// per-depth or per-sentence.
    #[arg(long)]
    ci_mode: Option<CiMode>,
    /// exclude or score-as-zero.
    #[arg(long)]
    invalid: Option<InvalidHandling>,
}

#[derive(Args)]
struct PrepareArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output JSONL file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit prompts without the assistant turn, keyed by id.
    #[arg(long)]
    inference: bool,
    #[arg(long)]
    system_prompt: Option<String>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    per_depth: Option<usize>,
    #[arg(long)]
    min_depth: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    /// Write ids here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// `report.json` files or report directories.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

fn structural(message: impl Display) -> Failure {
    Failure { code: 1, message: message.to_string() }
}

fn usage(message: impl Display) -> Failure {
    Failure { code: 2, message: message.to_string() }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Parse(a) => cmd_graphs(&a, true),
        Command::Validate(a) => cmd_graphs(&a, false),
        Command::Score(a) => cmd_score(&a),
        Command::Eval(a) => cmd_eval(a),
        Command::Prepare(a) => cmd_prepare(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("{}", f.message.trim_end());
            }
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    std::fs::write(path, contents).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn graph_text(raw: &str, family: Option<TemplateFamily>) -> String {
    match family {
        Some(f) => Extractor::new().extract(raw, f),
        None => raw.to_string(),
    }
}

fn report_lines(report: &StructuralReport) -> String {
    report
        .errors
        .iter()
        .map(|e| format!("{}\t{}\t{}\n", e.offset, e.kind, e.message))
        .collect()
}

fn cmd_graphs(args: &GraphArgs, pretty: bool) -> CmdResult {
    if args.path.is_dir() {
        return graph_dir(args);
    }
    let text = graph_text(&read(&args.path)?, args.family);
    match parse(&text) {
        Ok(g) => {
            if pretty {
                println!("{}", serialize_with_metadata(&g));
            } else {
                println!("valid");
            }
            Ok(())
        }
        Err(report) => Err(structural(report_lines(&report))),
    }
}

fn graph_dir(args: &GraphArgs) -> CmdResult {
    let mut files: Vec<PathBuf> = std::fs::read_dir(&args.path)
        .map_err(|e| usage(format!("{}: {e}", args.path.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
        .collect();
    files.sort();
    let mut invalid = 0;
    let mut out = std::io::stdout().lock();
    for f in &files {
        let text = graph_text(&read(f)?, args.family);
        let line = match parse(&text) {
            Ok(g) => format!(
                "{}\tok\tdepth={}\tvariables={}",
                f.display(),
                analysis::depth(&g),
                g.variable_count()
            ),
            Err(r) => {
                invalid += 1;
                let kinds: Vec<String> = r.kinds().iter().map(|k| k.to_string()).collect();
                format!("{}\tinvalid\t{}", f.display(), kinds.join(","))
            }
        };
        let _ = writeln!(out, "{line}");
    }
    if invalid > 0 {
        return Err(structural(format!("{invalid} of {} files invalid", files.len())));
    }
    Ok(())
}

fn cmd_score(args: &ScoreArgs) -> CmdResult {
    let defaults = ScoreConfig::default();
    let env_seed = std::env::var(amr_bench::config::SEED_ENV).ok();
    let config = ScoreConfig {
        restarts: args.restarts.unwrap_or(defaults.restarts),
        seed: amr_bench::config::resolve_seed(args.seed, env_seed.as_deref()).map_err(usage)?,
        exact_threshold: args.exact_threshold.unwrap_or(defaults.exact_threshold),
    };
    if config.restarts == 0 {
        return Err(usage("--restarts must be at least 1"));
    }
    let gold = read(&args.gold)?;
    let pred = graph_text(&read(&args.pred)?, args.family);
    let invalid = |report: StructuralReport| {
        usage(format!(
            "prediction {} is not a valid graph:\n{}",
            args.pred.display(),
            report_lines(&report)
        ))
    };
    let result = if args.exact {
        let gold = parse(&gold).map_err(|r| usage(format!("gold {} does not parse:\n{}", args.gold.display(), report_lines(&r))))?;
        let pred = parse(&pred).map_err(invalid)?;
        let triples = |g| -> TripleSet { analysis::extract_triples(g) };
        brute_force_score(&triples(&gold), &triples(&pred), DEFAULT_MAX_VARIABLES).map_err(usage)?
    } else {
        match score_pair(&gold, &pred, &config).map_err(usage)? {
            PairOutcome::Invalid(report) => return Err(invalid(report)),
            PairOutcome::Scored(r) => r,
        }
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&result).expect("result serializes"));
    } else {
        println!("Precision {:.4}", result.precision);
        println!("Recall {:.4}", result.recall);
        println!("F1 {:.4}", result.f1);
    }
    Ok(())
}

/// Loads the config file and applies the flags shared by corpus commands.
fn run_config(run: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &run.config {
        Some(p) => RunConfig::load(p).map_err(usage)?,
        None => RunConfig::default(),
    };
    if run.seed.is_some() {
        cfg.seed = run.seed;
    }
    if run.family.is_some() {
        cfg.family = run.family;
    }
    if run.split.is_some() {
        cfg.split = run.split;
    }
    cfg.relaxed |= run.relaxed;
    Ok(cfg)
}

fn load_corpus(cfg: &RunConfig, run: &RunArgs, path: &Path) -> Result<Vec<CorpusEntry>, Failure> {
    let options = LoadOptions {
        subset_rules: cfg.subsets.clone(),
        default_split: cfg.default_split,
        relaxed: cfg.relaxed,
    };
    let loaded = load_path(path, &options).map_err(usage)?;
    if !loaded.skipped.is_empty() {
        eprintln!("skipped {} gold entries that do not parse", loaded.skipped.len());
    }
    if run.check_catalog {
        for d in SubsetCatalog::amr3().diff(&SubsetCatalog::observe(&loaded.entries)) {
            eprintln!("warning: catalog mismatch {d}");
        }
    }
    let mut entries = loaded.entries;
    if let Some(split) = cfg.split {
        entries.retain(|e| e.split == split);
    }
    if let Some(ids_path) = &run.ids {
        let ids: HashSet<String> = read(ids_path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        let known: HashSet<&str> = entries.iter().map(|e| e.id.as_str()).collect();
        let mut unknown: Vec<&String> = ids.iter().filter(|i| !known.contains(i.as_str())).collect();
        if !unknown.is_empty() {
            unknown.sort();
            let list: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(usage(format!("ids not in corpus: {}", list.join(", "))));
        }
        entries.retain(|e| ids.contains(&e.id));
    }
    Ok(entries)
}

fn required(value: Option<PathBuf>, name: &str) -> Result<PathBuf, Failure> {
    value.ok_or_else(|| usage(format!("--{name} is required (or set `{name}` in the config file)")))
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let mut cfg = run_config(&args.run)?;
    if let Some(v) = args.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = args.exact_threshold {
        cfg.exact_threshold = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    if let Some(v) = args.ci_mode {
        cfg.ci_mode = v;
    }
    if let Some(v) = args.invalid {
        cfg.invalid = v;
    }
    if let Some(v) = args.label {
        cfg.label = v;
    }
    cfg.validate().map_err(usage)?;
    let gold = required(args.gold.or(cfg.gold.clone()), "gold")?;
    let preds_path = required(args.predictions.or(cfg.predictions.clone()), "predictions")?;
    let out = required(args.out.or(cfg.out.clone()), "out")?;

    let entries = load_corpus(&cfg, &args.run, &gold)?;
    let file = std::fs::File::open(&preds_path).map_err(|e| usage(format!("{}: {e}", preds_path.display())))?;
    let predictions = read_predictions(std::io::BufReader::new(file)).map_err(usage)?;
    let score = cfg.score_config().map_err(usage)?;
    let options = EvalOptions {
        score,
        family: cfg.family,
        extractor: cfg.extractor(),
        workers: cfg.workers,
    };
    let records = evaluate(&entries, &predictions, &options).map_err(usage)?;
    let run = RunInfo {
        seed: score.seed,
        restarts: score.restarts,
        exact_threshold: score.exact_threshold,
        family: cfg.family,
        ci_mode: cfg.ci_mode,
        invalid: cfg.invalid,
    };
    let report = Report::build(&cfg.label, run, &records).map_err(usage)?;
    emit_report(&report, &out).map_err(usage)?;
    print!("{}", summary_table(&report));
    println!("report written to {}", out.display());
    Ok(())
}

fn cmd_prepare(args: PrepareArgs) -> CmdResult {
    let mut cfg = run_config(&args.run)?;
    if let Some(p) = args.system_prompt {
        cfg.system_prompt = p;
    }
    let corpus = required(args.corpus.or(cfg.gold.clone()), "corpus")?;
    let out = required(args.out.or(cfg.out.clone()), "out")?;
    let entries = load_corpus(&cfg, &args.run, &corpus)?;
    let family = cfg.family.unwrap_or(TemplateFamily::Llama32);
    let extractor = cfg.extractor();
    let text = if args.inference {
        to_jsonl(&format_prompts(&entries, &extractor, family, &cfg.system_prompt))
    } else {
        to_jsonl(&format_finetune(&entries, &extractor, family, &cfg.system_prompt))
    };
    write_file(&out, &text)?;
    println!("wrote {} records to {}", entries.len(), out.display());
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> CmdResult {
    let mut cfg = run_config(&args.run)?;
    if let Some(v) = args.per_depth {
        cfg.per_depth = v;
    }
    if let Some(v) = args.min_depth {
        cfg.depth_min = v;
    }
    if let Some(v) = args.max_depth {
        cfg.depth_max = v;
    }
    cfg.validate().map_err(usage)?;
    let corpus = required(args.corpus.or(cfg.gold.clone()), "corpus")?;
    let entries = load_corpus(&cfg, &args.run, &corpus)?;
    let seed = cfg.resolved_seed().map_err(usage)?;
    let sample = stratified_sample(&entries, cfg.per_depth, cfg.depths(), seed).map_err(usage)?;
    for s in &sample.shortfalls {
        eprintln!(
            "depth {}: {} of {} requested entries available",
            s.depth, s.available, s.requested
        );
    }
    let ids: String = sample.entries.iter().map(|e| format!("{}\n", e.id)).collect();
    match args.out {
        Some(p) => write_file(&p, &ids),
        None => {
            print!("{ids}");
            Ok(())
        }
    }
}

fn cmd_report(args: &ReportArgs) -> CmdResult {
    let reports = args
        .reports
        .iter()
        .map(|p| {
            let path = if p.is_dir() { p.join(REPORT_FILE) } else { p.clone() };
            Report::read(&path).map_err(usage)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let written = render(&reports, &args.out).map_err(usage)?;
    for r in &reports {
        println!("{}", r.label);
        print!("{}", summary_table(r));
    }
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}
