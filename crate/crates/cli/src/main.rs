use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use rayon::prelude::*;
use tempred_core::analysis::DEFAULT_DIFF_SIZE_CAP;
use tempred_core::ingest::{DEFAULT_EXCLUDE, DEFAULT_INCLUDE};
use tempred_core::synth::oracle_classify_bundle;
use tempred_core::{
    emit_report, export_bundle, open_repository, run_analysis, AnalysisConfig, Diagnostics, FileFilterRules,
    Granularity, Normalization, OutputFormat, Report, Scope, Source, TimeRange,
};

/// Temporal redundancy of commit histories: how many commits only add
/// lines or tokens that earlier commits already added.
#[derive(Parser)]
#[command(name = "tempred", version, about)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze one or more repositories or bundles.
    Analyze(AnalyzeArgs),
    /// Write a repository's history as a portable bundle.
    ExportBundle(ExportArgs),
    /// Classify a bundle with the brute-force reference implementation.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct FilterArgs {
    /// Keep paths matching this glob (repeatable; replaces the default `**/*.java`).
    #[arg(long = "include", value_name = "GLOB")]
    include: Vec<String>,

    /// Drop paths matching this glob (repeatable; replaces the default test-code globs).
    #[arg(long = "exclude", value_name = "GLOB")]
    exclude: Vec<String>,
}

impl FilterArgs {
    fn rules(&self) -> Result<FileFilterRules> {
        let or_default = |given: &[String], default: &[&str]| -> Vec<String> {
            if given.is_empty() {
                default.iter().map(|s| s.to_string()).collect()
            } else {
                given.to_vec()
            }
        };
        Ok(FileFilterRules::new(
            or_default(&self.include, DEFAULT_INCLUDE),
            or_default(&self.exclude, DEFAULT_EXCLUDE),
        )?)
    }
}

#[derive(Args)]
struct RangeArgs {
    /// Branch or other revision whose first-parent history is walked.
    #[arg(long, default_value = "HEAD")]
    branch: String,

    /// Skip commits older than this (seconds since the epoch, inclusive).
    #[arg(long, value_name = "TS")]
    since: Option<i64>,

    /// Skip commits newer than this (seconds since the epoch, inclusive).
    #[arg(long, value_name = "TS")]
    until: Option<i64>,
}

impl RangeArgs {
    fn range(&self) -> Result<TimeRange> {
        if let (Some(s), Some(u)) = (self.since, self.until) {
            if s > u {
                bail!("--since {s} is after --until {u}");
            }
        }
        Ok(TimeRange {
            since: self.since,
            until: self.until,
        })
    }
}

#[derive(Args)]
struct MetricArgs {
    /// Granularities to measure.
    #[arg(long, value_delimiter = ',', default_values_t = Granularity::ALL)]
    granularity: Vec<Granularity>,

    /// Scopes to measure.
    #[arg(long, value_delimiter = ',', default_values_t = Scope::ALL)]
    scope: Vec<Scope>,

    /// Normalize before diffing (pre) or diff raw text and filter after (post).
    #[arg(long, default_value_t = Normalization::Pre)]
    normalize: Normalization,

    /// Output format: json, csv or table.
    #[arg(long, default_value = "json")]
    format: OutputFormat,

    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Repository (or bundle with --bundle); repeat for several projects.
    #[arg(long, required = true, value_name = "PATH")]
    source: Vec<PathBuf>,

    /// Treat every source as a bundle directory.
    #[arg(long)]
    bundle: bool,

    /// Project names, in --source order (defaults to directory names).
    #[arg(long, value_name = "NAME")]
    name: Vec<String>,

    #[command(flatten)]
    range: RangeArgs,

    #[command(flatten)]
    filter: FilterArgs,

    #[command(flatten)]
    metrics: MetricArgs,

    /// Include per-commit classifications in the report.
    #[arg(long)]
    trace_commits: bool,

    /// Skip files whose before+after fragment count exceeds this.
    #[arg(long, default_value_t = DEFAULT_DIFF_SIZE_CAP, value_name = "N")]
    diff_size_cap: usize,
}

#[derive(Args)]
struct ExportArgs {
    /// Repository to export.
    #[arg(long, value_name = "PATH")]
    source: PathBuf,

    /// Bundle directory to create.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    #[command(flatten)]
    range: RangeArgs,

    #[command(flatten)]
    filter: FilterArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// Bundle directory to classify.
    #[arg(long, value_name = "DIR")]
    bundle: PathBuf,

    #[command(flatten)]
    filter: FilterArgs,

    #[command(flatten)]
    metrics: MetricArgs,
}

fn configure(metrics: &MetricArgs, filter: &FilterArgs, source: Source) -> Result<AnalysisConfig> {
    let mut config = AnalysisConfig::new(source);
    config.granularities = metrics.granularity.clone();
    config.scopes = metrics.scope.clone();
    config.normalization = metrics.normalize;
    config.filter = filter.rules()?;
    config.validate()?;
    Ok(config)
}

fn write_reports(reports: &[Report], metrics: &MetricArgs) -> Result<()> {
    match &metrics.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut out = BufWriter::new(file);
            emit_report(reports, metrics.format, &mut out)?;
            out.flush().with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            emit_report(reports, metrics.format, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    if !args.name.is_empty() && args.name.len() != args.source.len() {
        bail!("got {} --name values for {} sources", args.name.len(), args.source.len());
    }
    let range = args.range.range()?;
    let configs = args
        .source
        .iter()
        .enumerate()
        .map(|(i, path)| {
            let source = if args.bundle {
                Source::Bundle { dir: path.clone() }
            } else {
                Source::Repository {
                    path: path.clone(),
                    branch: args.range.branch.clone(),
                    range,
                }
            };
            let mut config = configure(&args.metrics, &args.filter, source)?;
            config.project = args.name.get(i).cloned();
            config.trace_commits = args.trace_commits;
            config.diff_size_cap = args.diff_size_cap;
            config.validate()?;
            Ok(config)
        })
        .collect::<Result<Vec<_>>>()?;

    let reports = configs
        .par_iter()
        .map(|config| {
            info!("analyzing {}", config.source.path().display());
            run_analysis(config).with_context(|| format!("analyzing {}", config.source.path().display()))
        })
        .collect::<Result<Vec<_>>>()?;
    write_reports(&reports, &args.metrics)
}

fn export(args: ExportArgs) -> Result<()> {
    let history = open_repository(&args.source, &args.range.branch, args.range.range()?)?
        .with_path_filter(args.filter.rules()?);
    let written = export_bundle(history, &args.out)?;
    info!("wrote {written} commits to {}", args.out.display());
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let config = configure(
        &args.metrics,
        &args.filter,
        Source::Bundle {
            dir: args.bundle.clone(),
        },
    )?;
    let result = oracle_classify_bundle(&args.bundle, &config)?;
    let diagnostics = Diagnostics {
        commits_total: result.classifications.len() as u64,
        ..Diagnostics::default()
    };
    let report = Report::from_summary(&config, &result.summary, diagnostics);
    write_reports(&[report], &args.metrics)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::ExportBundle(args) => export(args),
        Command::Oracle(args) => oracle(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
