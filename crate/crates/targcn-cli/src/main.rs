//! Command-line entry point: dataset tooling, training, evaluation,
//! ablations, search-range sweeps and parameter reports.
//!
//! Every command resolves its configuration the same way — defaults, then
//! the `--config` key=value file, then explicit flags — prints the resolved
//! config before doing anything, and embeds it together with a SHA-256 hash
//! of the input files in the emitted report. Exit codes: 0 success, 1
//! config/data errors, 2 training divergence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use targcn::config::RunConfig;
use targcn::encoder::ModelDims;
use targcn::eval::{
    evaluate, ranks_tsv, EvalOptions, FilterIndex, FilterMode, MetricsReport, TieMode,
};
use targcn::ingest::{
    compute_stats, make_irregular_split, make_unseen_split, parse_dataset_dir, write_quadruples,
    Dataset,
};
use targcn::tkg::{add_reciprocals, SplitTag, TemporalKg};
use targcn::training::{count_parameters, load_checkpoint, records_to_jsonl, train, TrainOptions};

#[derive(Parser)]
#[command(
    name = "targcn",
    version,
    about = "Temporal KG completion with a time-aware relational graph encoder"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TieModeArg {
    Pessimistic,
    Mean,
}

impl From<TieModeArg> for TieMode {
    fn from(v: TieModeArg) -> Self {
        match v {
            TieModeArg::Pessimistic => TieMode::Pessimistic,
            TieModeArg::Mean => TieMode::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FilterModeArg {
    TimeAware,
    Static,
}

impl From<FilterModeArg> for FilterMode {
    fn from(v: FilterModeArg) -> Self {
        match v {
            FilterModeArg::TimeAware => FilterMode::TimeAware,
            FilterModeArg::Static => FilterMode::Static,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Valid,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AblationVariant {
    AbsoluteTime,
    RandomSample,
    WholeNeighborhood,
}

impl AblationVariant {
    fn name(self) -> &'static str {
        match self {
            AblationVariant::AbsoluteTime => "absolute-time",
            AblationVariant::RandomSample => "random-sample",
            AblationVariant::WholeNeighborhood => "whole-neighborhood",
        }
    }

    /// Flip exactly one switch relative to the baseline config.
    fn apply(self, cfg: &mut RunConfig) {
        match self {
            AblationVariant::AbsoluteTime => {
                cfg.time_encoder_variant = targcn::TimeEncoderVariant::Absolute
            }
            AblationVariant::RandomSample => cfg.sampler_variant = targcn::SamplerVariant::Uniform,
            AblationVariant::WholeNeighborhood => cfg.sampler_variant = targcn::SamplerVariant::All,
        }
    }
}

/// Flags shared by the model-running commands.
#[derive(Debug, clap::Args)]
struct RunArgs {
    /// key = value config file; flags below override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory with train.txt / valid.txt / test.txt
    #[arg(long, env = "TARGCN_DATA_DIR")]
    data_dir: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for evaluation (training itself stays single-worker)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "pessimistic")]
    tie_mode: TieModeArg,
    #[arg(long, value_enum, default_value = "time-aware")]
    filter_mode: FilterModeArg,
    /// Override the score function from the config file
    #[arg(long)]
    score_fn: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a dataset and print its statistics as JSON
    Stats {
        #[arg(long, env = "TARGCN_DATA_DIR")]
        data_dir: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Generate the unseen-timestamps robustness split (days 5/15/25 held out)
    GenUnseen {
        #[arg(long, env = "TARGCN_DATA_DIR")]
        data_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate the irregular-timestamps robustness split (snapshot gaps 1–4)
    GenIrregular {
        #[arg(long, env = "TARGCN_DATA_DIR")]
        data_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a model; writes checkpoints and a JSON-lines log
    Train {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate a checkpoint on the valid or test split
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, env = "TARGCN_DATA_DIR")]
        data_dir: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value = "pessimistic")]
        tie_mode: TieModeArg,
        #[arg(long, value_enum, default_value = "time-aware")]
        filter_mode: FilterModeArg,
        /// Also write a per-query rank dump (TSV: s, r, o, t, rank)
        #[arg(long)]
        dump_ranks: bool,
    },
    /// Train + evaluate one ablation variant (exactly one switch flipped)
    Ablate {
        #[arg(long, value_enum)]
        variant: AblationVariant,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train + evaluate one model per search range; emits the sweep table
    SweepRange {
        /// Comma-separated search ranges, e.g. 15,50,100,200,300,365
        #[arg(long)]
        ranges: String,
        #[arg(long, value_enum, default_value = "test")]
        split: SplitArg,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Parameter count and per-tensor breakdown
    Params {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Parse vocab sizes from a dataset directory…
        #[arg(long, env = "TARGCN_DATA_DIR")]
        data_dir: Option<PathBuf>,
        /// …or pass them explicitly
        #[arg(long)]
        entities: Option<usize>,
        #[arg(long)]
        relations: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // Exit codes: 0 success (including --help/--version), 1 usage/config/data
    // errors, 2 training divergence.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let diverged = matches!(
                err.downcast_ref::<targcn::Error>(),
                Some(targcn::Error::Divergence(_))
            );
            if diverged {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Stats { data_dir, out_dir } => cmd_stats(&data_dir, out_dir.as_deref()),
        Command::GenUnseen {
            data_dir,
            out_dir,
            seed,
        } => cmd_gen_unseen(&data_dir, &out_dir, seed),
        Command::GenIrregular {
            data_dir,
            out_dir,
            seed,
        } => cmd_gen_irregular(&data_dir, &out_dir, seed),
        Command::Train { run } => cmd_train(&run),
        Command::Eval {
            checkpoint,
            data_dir,
            split,
            out_dir,
            threads,
            tie_mode,
            filter_mode,
            dump_ranks,
        } => cmd_eval(
            &checkpoint,
            &data_dir,
            split,
            out_dir.as_deref(),
            threads,
            tie_mode.into(),
            filter_mode.into(),
            dump_ranks,
        ),
        Command::Ablate { variant, run } => cmd_ablate(variant, &run),
        Command::SweepRange { ranges, split, run } => cmd_sweep_range(&ranges, split, &run),
        Command::Params {
            config,
            data_dir,
            entities,
            relations,
            out_dir,
        } => cmd_params(
            config.as_deref(),
            data_dir.as_deref(),
            entities,
            relations,
            out_dir.as_deref(),
        ),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn resolve_config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            RunConfig::from_key_values(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(sf) = &args.score_fn {
        cfg.set("score_fn", sf)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn eval_threads(requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)
    })
}

fn print_resolved(cfg: &RunConfig) {
    println!("# resolved config");
    print!("{}", cfg.to_key_values());
}

/// SHA-256 of the three split files, per file and combined.
fn hash_inputs(data_dir: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut combined = Sha256::new();
    for name in ["train.txt", "valid.txt", "test.txt"] {
        let path = data_dir.join(name);
        let bytes =
            std::fs::read(&path).with_context(|| format!("cannot read {}", path.display()))?;
        let digest = hex(&Sha256::digest(&bytes));
        combined.update(digest.as_bytes());
        out.insert(name.to_string(), digest);
    }
    out.insert("combined".to_string(), hex(&combined.finalize()));
    Ok(out)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn load_data(data_dir: &Path) -> anyhow::Result<Dataset> {
    parse_dataset_dir(data_dir)
        .with_context(|| format!("loading dataset from {}", data_dir.display()))
}

fn build_train_kg(ds: &Dataset) -> anyhow::Result<TemporalKg> {
    let aug = add_reciprocals(&ds.train, ds.vocab.num_relations() as u32)?;
    Ok(TemporalKg::build(
        aug,
        ds.vocab.num_entities(),
        ds.vocab.num_relations(),
        ds.vocab.num_time_indices(),
        SplitTag::Train,
    )?)
}

fn full_filter(ds: &Dataset) -> FilterIndex {
    FilterIndex::build(
        &[&ds.train, &ds.valid, &ds.test],
        ds.vocab.num_relations() as u32,
    )
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn report_value(
    command: &str,
    cfg: Option<&RunConfig>,
    data_hash: &BTreeMap<String, String>,
    extra: serde_json::Value,
) -> serde_json::Value {
    let mut v = serde_json::json!({
        "command": command,
        "input_sha256": data_hash,
        "result": extra,
    });
    if let Some(cfg) = cfg {
        v["resolved_config"] = serde_json::to_value(cfg.as_map()).unwrap();
    }
    v
}

fn metrics_files(dir: &Path, stem: &str, report: &MetricsReport) -> anyhow::Result<()> {
    write_json(
        &dir.join(format!("{stem}.json")),
        &serde_json::to_value(report)?,
    )?;
    let csv = format!("{}\n{}\n", MetricsReport::csv_header(), report.csv_row());
    std::fs::write(dir.join(format!("{stem}.csv")), csv)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_stats(data_dir: &Path, out_dir: Option<&Path>) -> anyhow::Result<()> {
    let ds = load_data(data_dir)?;
    let json = serde_json::to_value(ds.stats)?;
    println!("{}", serde_json::to_string_pretty(&json)?);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("stats.json"), &json)?;
        ds.vocab
            .write_maps(&dir.join("entities.tsv"), &dir.join("relations.tsv"))?;
    }
    Ok(())
}

fn cmd_gen_unseen(data_dir: &Path, out_dir: &Path, seed: u64) -> anyhow::Result<()> {
    let ds = load_data(data_dir)?;
    let calendar = ds.vocab.calendar()?;
    let (train, valid, test) = make_unseen_split(&ds.train, &calendar, seed)?;
    std::fs::create_dir_all(out_dir)?;
    write_quadruples(&out_dir.join("train.txt"), &train, &ds.vocab)?;
    write_quadruples(&out_dir.join("valid.txt"), &valid, &ds.vocab)?;
    write_quadruples(&out_dir.join("test.txt"), &test, &ds.vocab)?;
    ds.vocab.write_maps(
        &out_dir.join("entities.tsv"),
        &out_dir.join("relations.tsv"),
    )?;
    let stats = compute_stats(&train, &valid, &test);
    let json = serde_json::to_value(stats)?;
    write_json(&out_dir.join("stats.json"), &json)?;
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(())
}

fn cmd_gen_irregular(data_dir: &Path, out_dir: &Path, seed: u64) -> anyhow::Result<()> {
    let ds = load_data(data_dir)?;
    let max_index = (ds.vocab.num_time_indices() - 1) as u32;
    let (train, valid, test, stats) =
        make_irregular_split(&ds.train, &ds.valid, &ds.test, max_index, seed);
    std::fs::create_dir_all(out_dir)?;
    write_quadruples(&out_dir.join("train.txt"), &train, &ds.vocab)?;
    write_quadruples(&out_dir.join("valid.txt"), &valid, &ds.vocab)?;
    write_quadruples(&out_dir.join("test.txt"), &test, &ds.vocab)?;
    ds.vocab.write_maps(
        &out_dir.join("entities.tsv"),
        &out_dir.join("relations.tsv"),
    )?;
    let json = serde_json::to_value(stats)?;
    write_json(&out_dir.join("stats.json"), &json)?;
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(())
}

type TrainingResult = (
    targcn::encoder::ModelParams,
    Vec<targcn::training::EpochRecord>,
    f64,
    usize,
);

fn run_training(
    cfg: &RunConfig,
    ds: &Dataset,
    out_dir: Option<&Path>,
    threads: usize,
    tie_mode: TieMode,
    filter_mode: FilterMode,
) -> anyhow::Result<TrainingResult> {
    let kg = build_train_kg(ds)?;
    let options = TrainOptions {
        out_dir: out_dir.map(Path::to_path_buf),
        eval_options: EvalOptions {
            tie_mode,
            filter_mode,
            threads,
        },
    };
    let outcome = train(&kg, &ds.valid, cfg, &options)?;
    Ok((
        outcome.params,
        outcome.records,
        outcome.best_valid_mrr,
        outcome.best_epoch,
    ))
}

fn cmd_train(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = resolve_config(args)?;
    print_resolved(&cfg);
    let hash = hash_inputs(&args.data_dir)?;
    let ds = load_data(&args.data_dir)?;
    let threads = eval_threads(args.threads);
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("targcn-out"));
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("resolved_config.txt"), cfg.to_key_values())?;

    let (params, records, best_mrr, best_epoch) = run_training(
        &cfg,
        &ds,
        Some(&out_dir),
        threads,
        args.tie_mode.into(),
        args.filter_mode.into(),
    )?;

    // Final filtered metrics on valid with the best checkpoint and the full
    // train ∪ valid ∪ test filter.
    let kg = build_train_kg(&ds)?;
    let filter = full_filter(&ds);
    let (report, _) = evaluate(
        &kg,
        &ds.valid,
        &filter,
        &params,
        &cfg,
        SplitTag::Valid,
        EvalOptions {
            tie_mode: args.tie_mode.into(),
            filter_mode: args.filter_mode.into(),
            threads,
        },
    )?;
    metrics_files(&out_dir, "metrics_valid", &report)?;
    std::fs::write(out_dir.join("train_log.jsonl"), records_to_jsonl(&records))?;
    let report_json = report_value(
        "train",
        Some(&cfg),
        &hash,
        serde_json::json!({
            "epochs_run": records.len(),
            "best_epoch": best_epoch,
            "best_valid_mrr": best_mrr,
            "final_valid": serde_json::to_value(&report)?,
        }),
    );
    write_json(&out_dir.join("report.json"), &report_json)?;
    println!("best epoch {best_epoch}: valid MRR {best_mrr:.4}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    checkpoint: &Path,
    data_dir: &Path,
    split: SplitArg,
    out_dir: Option<&Path>,
    threads: Option<usize>,
    tie_mode: TieMode,
    filter_mode: FilterMode,
    dump_ranks: bool,
) -> anyhow::Result<()> {
    let bytes = std::fs::read(checkpoint)
        .with_context(|| format!("cannot read checkpoint {}", checkpoint.display()))?;
    let ckpt = load_checkpoint(&bytes)?;
    let cfg = ckpt.config.clone();
    print_resolved(&cfg);
    let hash = hash_inputs(data_dir)?;
    let ds = load_data(data_dir)?;
    if ds.vocab.num_entities() != ckpt.num_entities
        || ds.vocab.num_relations() != ckpt.num_base_relations
    {
        return Err(anyhow!(
            "checkpoint was trained on |E|={}, |R|={} but the dataset has |E|={}, |R|={}",
            ckpt.num_entities,
            ckpt.num_base_relations,
            ds.vocab.num_entities(),
            ds.vocab.num_relations()
        ));
    }
    let kg = build_train_kg(&ds)?;
    let filter = full_filter(&ds);
    let (split_tag, facts) = match split {
        SplitArg::Valid => (SplitTag::Valid, &ds.valid),
        SplitArg::Test => (SplitTag::Test, &ds.test),
    };
    let (report, results) = evaluate(
        &kg,
        facts,
        &filter,
        &ckpt.params,
        &cfg,
        split_tag,
        EvalOptions {
            tie_mode,
            filter_mode,
            threads: eval_threads(threads),
        },
    )?;
    println!(
        "{} MRR {:.4}  Hits@1 {:.4}  Hits@3 {:.4}  Hits@10 {:.4}  ({} queries)",
        report.split, report.mrr, report.hits1, report.hits3, report.hits10, report.num_queries
    );
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let stem = format!("metrics_{}", report.split);
        metrics_files(dir, &stem, &report)?;
        if dump_ranks {
            std::fs::write(
                dir.join(format!("ranks_{}.tsv", report.split)),
                ranks_tsv(&results),
            )?;
        }
        let report_json = report_value("eval", Some(&cfg), &hash, serde_json::to_value(&report)?);
        write_json(&dir.join("report.json"), &report_json)?;
    }
    Ok(())
}

fn cmd_ablate(variant: AblationVariant, args: &RunArgs) -> anyhow::Result<()> {
    let baseline = resolve_config(args)?;
    let mut cfg = baseline.clone();
    variant.apply(&mut cfg);
    print_resolved(&cfg);
    let hash = hash_inputs(&args.data_dir)?;
    let ds = load_data(&args.data_dir)?;
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("targcn-out"))
        .join(format!("ablate_{}", variant.name()));
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(
        out_dir.join("config_baseline.txt"),
        baseline.to_key_values(),
    )?;
    std::fs::write(out_dir.join("config_variant.txt"), cfg.to_key_values())?;

    let threads = eval_threads(args.threads);
    let (params, records, best_mrr, best_epoch) = run_training(
        &cfg,
        &ds,
        Some(&out_dir),
        threads,
        args.tie_mode.into(),
        args.filter_mode.into(),
    )?;
    let kg = build_train_kg(&ds)?;
    let filter = full_filter(&ds);
    let (report, _) = evaluate(
        &kg,
        &ds.test,
        &filter,
        &params,
        &cfg,
        SplitTag::Test,
        EvalOptions {
            tie_mode: args.tie_mode.into(),
            filter_mode: args.filter_mode.into(),
            threads,
        },
    )?;
    metrics_files(&out_dir, "metrics_test", &report)?;
    std::fs::write(out_dir.join("train_log.jsonl"), records_to_jsonl(&records))?;
    let report_json = report_value(
        "ablate",
        Some(&cfg),
        &hash,
        serde_json::json!({
            "variant": variant.name(),
            "best_epoch": best_epoch,
            "best_valid_mrr": best_mrr,
            "test": serde_json::to_value(&report)?,
        }),
    );
    write_json(&out_dir.join("report.json"), &report_json)?;
    println!("ablation {}: test MRR {:.4}", variant.name(), report.mrr);
    Ok(())
}

fn cmd_sweep_range(ranges: &str, split: SplitArg, args: &RunArgs) -> anyhow::Result<()> {
    let base_cfg = resolve_config(args)?;
    let parsed: Vec<u32> = ranges
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u32>()
                .map_err(|_| anyhow!("invalid search range {tok:?} in --ranges"))
        })
        .collect::<anyhow::Result<_>>()?;
    if parsed.is_empty() {
        return Err(anyhow!("--ranges is empty"));
    }
    print_resolved(&base_cfg);
    let hash = hash_inputs(&args.data_dir)?;
    let ds = load_data(&args.data_dir)?;
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("targcn-out"))
        .join("sweep_range");
    std::fs::create_dir_all(&out_dir)?;

    let threads = eval_threads(args.threads);
    let mut csv = String::from("range,mrr,hits1,hits3,hits10\n");
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &range in &parsed {
        let mut cfg = base_cfg.clone();
        cfg.search_range = Some(range);
        let attempt = (|| -> anyhow::Result<MetricsReport> {
            let (params, _, _, _) = run_training(
                &cfg,
                &ds,
                None,
                threads,
                args.tie_mode.into(),
                args.filter_mode.into(),
            )?;
            let kg = build_train_kg(&ds)?;
            let filter = full_filter(&ds);
            let (split_tag, facts) = match split {
                SplitArg::Valid => (SplitTag::Valid, &ds.valid),
                SplitArg::Test => (SplitTag::Test, &ds.test),
            };
            let (report, _) = evaluate(
                &kg,
                facts,
                &filter,
                &params,
                &cfg,
                split_tag,
                EvalOptions {
                    tie_mode: args.tie_mode.into(),
                    filter_mode: args.filter_mode.into(),
                    threads,
                },
            )?;
            Ok(report)
        })();
        match attempt {
            Ok(report) => {
                csv.push_str(&format!(
                    "{range},{},{},{},{}\n",
                    report.mrr, report.hits1, report.hits3, report.hits10
                ));
                println!("range {range}: MRR {:.4}", report.mrr);
                rows.push(serde_json::json!({
                    "range": range,
                    "mrr": report.mrr,
                    "hits1": report.hits1,
                    "hits3": report.hits3,
                    "hits10": report.hits10,
                }));
            }
            Err(e) => {
                eprintln!("range {range} failed: {e:#}");
                failures.push(serde_json::json!({ "range": range, "error": format!("{e:#}") }));
            }
        }
    }
    std::fs::write(out_dir.join("sweep.csv"), &csv)?;
    let report_json = report_value(
        "sweep-range",
        Some(&base_cfg),
        &hash,
        serde_json::json!({ "rows": rows, "failures": failures }),
    );
    write_json(&out_dir.join("sweep.json"), &report_json)?;
    Ok(())
}

fn cmd_params(
    config: Option<&Path>,
    data_dir: Option<&Path>,
    entities: Option<usize>,
    relations: Option<usize>,
    out_dir: Option<&Path>,
) -> anyhow::Result<()> {
    let cfg = match config {
        Some(path) => RunConfig::from_key_values(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let (num_entities, num_relations) = match (entities, relations) {
        (Some(e), Some(r)) => (e, r),
        _ => {
            let dir = data_dir
                .ok_or_else(|| anyhow!("pass either --entities and --relations, or --data-dir"))?;
            let ds = load_data(dir)?;
            (ds.vocab.num_entities(), ds.vocab.num_relations())
        }
    };
    let report = count_parameters(&cfg, num_entities, num_relations);
    let dims = ModelDims::from_config(&cfg, num_entities, num_relations);
    let json = serde_json::json!({
        "embedding_size": cfg.embedding_size,
        "time_dim": dims.d_t,
        "num_entities": num_entities,
        "num_base_relations": num_relations,
        "total": report.total,
        "breakdown": report.breakdown,
    });
    println!("{}", serde_json::to_string_pretty(&json)?);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("params.json"), &json)?;
        std::fs::write(dir.join("params.csv"), report.csv())?;
    }
    Ok(())
}
