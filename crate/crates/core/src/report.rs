//! Report assembly and serialization (JSON, CSV, and a plain-text table).

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{AnalysisConfig, AnalysisOutcome, Diagnostics, Source};
use crate::error::{Error, Result};
use crate::fragment::{Granularity, Normalization};
use crate::redundancy::{CommitClassification, ProjectSummary, Scope};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Table,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "table" => Ok(OutputFormat::Table),
            other => Err(Error::InvalidConfig(format!(
                "unknown output format `{other}` (expected json|csv|table)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptableCommits {
    pub line: Option<u64>,
    pub token: Option<u64>,
}

impl AcceptableCommits {
    pub fn get(&self, granularity: Granularity) -> Option<u64> {
        match granularity {
            Granularity::Line => self.line,
            Granularity::Token => self.token,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub granularity: Granularity,
    pub scope: Scope,
    pub redundant_commits: u64,
    pub temporal_redundancy: Option<f64>,
    /// Global pool size; null for the local scope.
    pub pool_size: Option<u64>,
    /// Median local pool size; null for the global scope.
    pub local_pool_size_median: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub source_kind: String,
    pub source: String,
    pub branch: Option<String>,
    pub since: Option<i64>,
    pub until: Option<i64>,
    pub granularities: Vec<Granularity>,
    pub scopes: Vec<Scope>,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    pub normalize: Normalization,
    pub diff_size_cap: usize,
    pub tool_version: String,
}

impl ConfigEcho {
    pub fn of(config: &AnalysisConfig) -> Self {
        let (source_kind, branch, since, until) = match &config.source {
            Source::Repository { branch, range, .. } => {
                ("repository", Some(branch.clone()), range.since, range.until)
            }
            Source::Bundle { .. } => ("bundle", None, None, None),
        };
        ConfigEcho {
            source_kind: source_kind.into(),
            source: config.source.path().display().to_string(),
            branch,
            since,
            until,
            granularities: config.granularities.clone(),
            scopes: config.scopes.clone(),
            include: config.filter.include_globs().to_vec(),
            exclude: config.filter.exclude_globs().to_vec(),
            normalize: config.normalization,
            diff_size_cap: config.diff_size_cap,
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Per-project results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub project: String,
    pub acceptable_commits: AcceptableCommits,
    pub metrics: Vec<MetricRow>,
    pub diagnostics: Diagnostics,
    pub config_echo: ConfigEcho,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commits: Option<Vec<CommitClassification>>,
}

impl Report {
    pub fn new(config: &AnalysisConfig, outcome: AnalysisOutcome) -> Self {
        let mut report = Report::from_summary(config, &outcome.summary, outcome.diagnostics);
        if config.trace_commits {
            report.commits = Some(outcome.classifications);
        }
        report
    }

    /// Builds the report rows for the selected granularities and scopes.
    pub fn from_summary(config: &AnalysisConfig, summary: &ProjectSummary, diagnostics: Diagnostics) -> Self {
        let mut acceptable = AcceptableCommits::default();
        let mut metrics = Vec::new();
        for g in &config.granularities {
            let Some(gs) = summary.get(*g) else { continue };
            match g {
                Granularity::Line => acceptable.line = Some(gs.acceptable_commits),
                Granularity::Token => acceptable.token = Some(gs.acceptable_commits),
            }
            for scope in &config.scopes {
                let s = gs.scope(*scope);
                metrics.push(MetricRow {
                    granularity: *g,
                    scope: *scope,
                    redundant_commits: s.redundant_commits,
                    temporal_redundancy: s.temporal_redundancy,
                    pool_size: (*scope == Scope::Global).then_some(gs.global_pool_size),
                    local_pool_size_median: match scope {
                        Scope::Global => None,
                        Scope::Local => gs.local_pool_size_median,
                    },
                });
            }
        }
        Report {
            project: config.project_name(),
            acceptable_commits: acceptable,
            metrics,
            diagnostics,
            config_echo: ConfigEcho::of(config),
            commits: None,
        }
    }

    pub fn metric(&self, granularity: Granularity, scope: Scope) -> Option<&MetricRow> {
        self.metrics
            .iter()
            .find(|m| m.granularity == granularity && m.scope == scope)
    }
}

/// Whole percent, as in the human-readable table. Null renders as `n/a`.
pub fn format_percent(ratio: Option<f64>) -> String {
    match ratio {
        Some(r) => format!("{}%", (100.0 * r).round() as i64),
        None => "n/a".into(),
    }
}

fn format_size(size: Option<f64>) -> String {
    match size {
        Some(s) if s.fract() == 0.0 => format!("{}", s as i64),
        Some(s) => format!("{s:.1}"),
        None => "n/a".into(),
    }
}

pub fn to_json(reports: &[Report]) -> Result<String> {
    let mut out = match reports {
        [single] => serde_json::to_string_pretty(single)?,
        many => serde_json::to_string_pretty(many)?,
    };
    out.push('\n');
    Ok(out)
}

pub const CSV_HEADER: [&str; 8] = [
    "project",
    "granularity",
    "scope",
    "acceptable_commits",
    "redundant_commits",
    "temporal_redundancy",
    "pool_size",
    "local_pool_size_median",
];

pub fn to_csv(reports: &[Report]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER)?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for report in reports {
        for m in &report.metrics {
            writer.write_record([
                report.project.clone(),
                m.granularity.to_string(),
                m.scope.to_string(),
                opt(report.acceptable_commits.get(m.granularity).map(|a| a.to_string())),
                m.redundant_commits.to_string(),
                opt(m.temporal_redundancy.map(|r| r.to_string())),
                opt(m.pool_size.map(|p| p.to_string())),
                opt(m.local_pool_size_median.map(|p| p.to_string())),
            ])?;
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidConfig(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Table with one row per project: acceptable commits, then for each
/// granularity and scope the whole-percent redundancy and the pool size
/// (global pool size, or median local pool size).
pub fn to_table(reports: &[Report]) -> String {
    let mut columns: Vec<(Granularity, Scope)> = Vec::new();
    for r in reports {
        for m in &r.metrics {
            if !columns.contains(&(m.granularity, m.scope)) {
                columns.push((m.granularity, m.scope));
            }
        }
    }

    let mut header = vec!["Program".to_owned(), "Acceptable".to_owned()];
    for (g, s) in &columns {
        let g = match g {
            Granularity::Line => "Line",
            Granularity::Token => "Token",
        };
        let s = match s {
            Scope::Global => "Global",
            Scope::Local => "Local",
        };
        header.push(format!("{g} {s} TR"));
        header.push(format!("{g} {s} Pool"));
    }

    let mut rows = vec![header];
    for r in reports {
        let acceptable = match (r.acceptable_commits.line, r.acceptable_commits.token) {
            (Some(l), Some(t)) if l != t => format!("{l} (token {t})"),
            (Some(l), _) => l.to_string(),
            (None, Some(t)) => t.to_string(),
            (None, None) => "n/a".into(),
        };
        let mut row = vec![r.project.clone(), acceptable];
        for (g, s) in &columns {
            match r.metric(*g, *s) {
                Some(m) => {
                    row.push(format_percent(m.temporal_redundancy));
                    row.push(match s {
                        Scope::Global => format_size(m.pool_size.map(|p| p as f64)),
                        Scope::Local => format_size(m.local_pool_size_median),
                    });
                }
                None => row.extend(["n/a".to_owned(), "n/a".to_owned()]),
            }
        }
        rows.push(row);
    }

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, w))| {
                if c == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            let _ = writeln!(out, "{}", rule.join("-|-"));
        }
    }
    out
}

pub fn render(reports: &[Report], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => to_json(reports),
        OutputFormat::Csv => to_csv(reports),
        OutputFormat::Table => Ok(to_table(reports)),
    }
}

pub fn emit_report<W: Write>(reports: &[Report], format: OutputFormat, mut out: W) -> Result<()> {
    let text = render(reports, format)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<output>", e))
}
