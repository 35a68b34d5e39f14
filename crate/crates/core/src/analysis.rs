//! End-to-end pipeline: commits in, per-commit verdicts and a project
//! summary out.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::diff::{diff, diff_fragments, Edits, FileDelta};
use crate::error::{Error, Result};
use crate::fragment::{fragment_lines, lex, raw_units, Fragment, Granularity, Normalization, RawUnit, TokenKind};
use crate::ingest::{
    filter_files, load_history_bundle, open_repository, CommitRecord, CommitStream, FileFilterRules, IngestStats,
    TimeRange,
};
use crate::redundancy::{
    classify_commit, index_commit, summarize, ChangeSet, CommitClassification, GranularityVerdict, ProjectSummary,
    Scope, ScopedPools,
};
use crate::report::Report;

pub const DEFAULT_DIFF_SIZE_CAP: usize = 200_000;

/// Fragments listed per delta in diagnostics.
const DIAGNOSTIC_SAMPLE: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    Repository {
        path: PathBuf,
        branch: String,
        range: TimeRange,
    },
    Bundle {
        dir: PathBuf,
    },
}

impl Source {
    pub fn path(&self) -> &Path {
        match self {
            Source::Repository { path, .. } => path,
            Source::Bundle { dir } => dir,
        }
    }

    /// The last path component, used as the default project name.
    pub fn default_project_name(&self) -> String {
        let path = self.path();
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .or_else(|| {
                path.canonicalize()
                    .ok()
                    .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            })
            .unwrap_or_else(|| path.display().to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub source: Source,
    pub project: Option<String>,
    pub granularities: Vec<Granularity>,
    pub scopes: Vec<Scope>,
    pub filter: FileFilterRules,
    pub normalization: Normalization,
    pub trace_commits: bool,
    /// Files whose before+after fragment count exceeds this at any
    /// granularity are skipped.
    pub diff_size_cap: usize,
}

impl AnalysisConfig {
    pub fn new(source: Source) -> Self {
        AnalysisConfig {
            source,
            project: None,
            granularities: Granularity::ALL.to_vec(),
            scopes: Scope::ALL.to_vec(),
            filter: FileFilterRules::default(),
            normalization: Normalization::Pre,
            trace_commits: false,
            diff_size_cap: DEFAULT_DIFF_SIZE_CAP,
        }
    }

    pub fn bundle(dir: impl Into<PathBuf>) -> Self {
        AnalysisConfig::new(Source::Bundle { dir: dir.into() })
    }

    /// Sorts and dedups the selections; rejects empty ones.
    pub fn validate(&mut self) -> Result<()> {
        self.granularities.sort();
        self.granularities.dedup();
        self.scopes.sort();
        self.scopes.dedup();
        if self.granularities.is_empty() {
            return Err(Error::InvalidConfig("no granularity selected".into()));
        }
        if self.scopes.is_empty() {
            return Err(Error::InvalidConfig("no scope selected".into()));
        }
        if self.diff_size_cap == 0 {
            return Err(Error::InvalidConfig("diff size cap must be positive".into()));
        }
        Ok(())
    }

    pub fn project_name(&self) -> String {
        self.project
            .clone()
            .unwrap_or_else(|| self.source.default_project_name())
    }
}

/// One side of a file, prepared for diffing at one granularity.
#[derive(Clone, Debug)]
enum Prepared {
    Normalized(Vec<Fragment>),
    Raw(Vec<RawUnit>),
}

impl Prepared {
    fn len(&self) -> usize {
        match self {
            Prepared::Normalized(f) => f.len(),
            Prepared::Raw(u) => u.len(),
        }
    }

    fn empty(normalization: Normalization) -> Self {
        match normalization {
            Normalization::Pre => Prepared::Normalized(Vec::new()),
            Normalization::Post => Prepared::Raw(Vec::new()),
        }
    }
}

fn diff_prepared(before: &Prepared, after: &Prepared) -> Edits<Fragment> {
    match (before, after) {
        (Prepared::Normalized(b), Prepared::Normalized(a)) => diff_fragments(b, a),
        (Prepared::Raw(b), Prepared::Raw(a)) => {
            let bk: Vec<&str> = b.iter().map(|u| u.raw.as_str()).collect();
            let ak: Vec<&str> = a.iter().map(|u| u.raw.as_str()).collect();
            let script = diff(&bk, &ak);
            Edits {
                added: script.inserted().filter_map(|j| a[j].fragment.clone()).collect(),
                removed: script.deleted().filter_map(|i| b[i].fragment.clone()).collect(),
            }
        }
        _ => unreachable!("both sides are prepared with the same normalization"),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub fallback_tokens: u64,
    pub oversize_files_skipped: u64,
}

struct CachedFile {
    text: String,
    prepared: Vec<Prepared>,
}

/// Turns commits into [`ChangeSet`]s: file filtering, fragmenting and
/// diffing. Remembers the latest contents of each path so unchanged
/// "before" sides are not re-fragmented.
pub struct ChangeSetBuilder {
    filter: FileFilterRules,
    normalization: Normalization,
    granularities: Vec<Granularity>,
    size_cap: usize,
    cache: HashMap<String, CachedFile>,
    stats: BuildStats,
}

impl ChangeSetBuilder {
    pub fn new(config: &AnalysisConfig) -> Self {
        ChangeSetBuilder {
            filter: config.filter.clone(),
            normalization: config.normalization,
            granularities: config.granularities.clone(),
            size_cap: config.diff_size_cap,
            cache: HashMap::new(),
            stats: BuildStats::default(),
        }
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    fn prepare(&mut self, text: &str, granularity: Granularity) -> Prepared {
        match (self.normalization, granularity) {
            (Normalization::Pre, Granularity::Line) => Prepared::Normalized(fragment_lines(text)),
            (Normalization::Pre, Granularity::Token) => {
                let tokens = lex(text);
                self.stats.fallback_tokens +=
                    tokens.iter().filter(|t| t.kind == TokenKind::Unknown).count() as u64;
                Prepared::Normalized(
                    tokens
                        .into_iter()
                        .filter(|t| t.kind != TokenKind::Comment)
                        .map(|t| Fragment::new_unchecked(t.text.to_owned(), Granularity::Token))
                        .collect(),
                )
            }
            (Normalization::Post, g) => Prepared::Raw(raw_units(text, g)),
        }
    }

    fn prepare_all(&mut self, text: Option<&str>) -> Vec<Prepared> {
        let granularities = self.granularities.clone();
        granularities
            .into_iter()
            .map(|g| match text {
                Some(t) => self.prepare(t, g),
                None => Prepared::empty(self.normalization),
            })
            .collect()
    }

    pub fn build(&mut self, commit: CommitRecord) -> ChangeSet {
        let mut deltas = Vec::new();
        for change in filter_files(commit.file_changes, &self.filter) {
            let cached = self.cache.remove(&change.path);
            let before = match (cached, change.before.as_deref()) {
                (Some(c), Some(text)) if c.text == text => c.prepared,
                (_, text) => self.prepare_all(text),
            };
            let after = self.prepare_all(change.after.as_deref());

            let oversize = before
                .iter()
                .zip(&after)
                .any(|(b, a)| b.len() + a.len() > self.size_cap);
            if oversize {
                warn!(
                    "{}: skipping {} (exceeds diff size cap of {} fragments)",
                    commit.commit_id, change.path, self.size_cap
                );
                self.stats.oversize_files_skipped += 1;
            } else {
                for (g, (b, a)) in self.granularities.iter().zip(before.iter().zip(&after)) {
                    deltas.push(FileDelta::new(change.path.clone(), *g, diff_prepared(b, a)));
                }
            }

            if let Some(text) = change.after {
                self.cache.insert(
                    change.path,
                    CachedFile {
                        text,
                        prepared: after,
                    },
                );
            }
        }
        ChangeSet {
            commit_id: commit.commit_id,
            order_index: commit.order_index,
            deltas,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaSample {
    pub path: String,
    pub granularity: Granularity,
    pub added_total: usize,
    pub removed_total: usize,
    pub added: Vec<String>,
    pub removed: Vec<String>,
}

impl DeltaSample {
    fn of(delta: &FileDelta) -> Self {
        let sample = |frags: &[Fragment]| {
            frags
                .iter()
                .take(DIAGNOSTIC_SAMPLE)
                .map(|f| f.content().to_owned())
                .collect()
        };
        DeltaSample {
            path: delta.path.clone(),
            granularity: delta.granularity,
            added_total: delta.added.len(),
            removed_total: delta.removed.len(),
            added: sample(&delta.added),
            removed: sample(&delta.removed),
        }
    }
}

/// A commit that is redundant at line granularity but not at token
/// granularity for the same scope.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsumptionViolation {
    pub commit_id: String,
    pub order_index: u64,
    pub scope: Scope,
    pub token_acceptable: bool,
    pub token_novel: Vec<String>,
    pub deltas: Vec<DeltaSample>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub commits_total: u64,
    pub ingest: IngestStats,
    pub fallback_tokens: u64,
    pub oversize_files_skipped: u64,
    /// Commits acceptable at one granularity but not the other.
    pub acceptability_divergence: Vec<String>,
    pub line_token_subsumption_violations: Vec<SubsumptionViolation>,
    /// Scope-ordering or pool-subset breaches; always empty unless there is
    /// a bug.
    pub invariant_violations: Vec<String>,
}

/// Everything a finished analysis produced.
#[derive(Debug)]
pub struct AnalysisOutcome {
    pub classifications: Vec<CommitClassification>,
    pub summary: ProjectSummary,
    pub pools: Vec<ScopedPools>,
    pub diagnostics: Diagnostics,
}

/// Incremental classifier: feed commits in order, then [`finish`](Self::finish).
pub struct Analyzer {
    builder: ChangeSetBuilder,
    pools: Vec<ScopedPools>,
    classifications: Vec<CommitClassification>,
    diagnostics: Diagnostics,
}

impl Analyzer {
    pub fn new(config: &AnalysisConfig) -> Self {
        Analyzer {
            builder: ChangeSetBuilder::new(config),
            pools: config.granularities.iter().map(|g| ScopedPools::new(*g)).collect(),
            classifications: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    }

    pub fn pools(&self) -> &[ScopedPools] {
        &self.pools
    }

    pub fn process(&mut self, commit: CommitRecord) -> Result<&CommitClassification> {
        let changes = self.builder.build(commit);
        let mut verdicts = Vec::with_capacity(self.pools.len());
        for pools in &mut self.pools {
            let g = pools.granularity();
            let sizes_before = pools.global().len();
            let verdict = classify_commit(pools, &changes, g)?;
            index_commit(pools, &changes, g)?;

            if verdict.local.redundant && !verdict.global.redundant {
                self.diagnostics.invariant_violations.push(format!(
                    "{} ({g}): locally but not globally redundant",
                    changes.commit_id
                ));
            }
            if pools.global().len() < sizes_before {
                self.diagnostics
                    .invariant_violations
                    .push(format!("{} ({g}): global pool shrank", changes.commit_id));
            }
            for delta in changes.deltas(g) {
                let within = pools
                    .local(&delta.path)
                    .map_or(true, |p| p.iter().all(|(f, _)| pools.global().contains(f)));
                if !within {
                    self.diagnostics.invariant_violations.push(format!(
                        "{} ({g}): local pool of {} escapes the global pool",
                        changes.commit_id, delta.path
                    ));
                }
            }
            verdicts.push(verdict);
        }
        self.audit(&changes, &verdicts);
        self.diagnostics.commits_total += 1;
        debug!("classified {} ({})", changes.commit_id, changes.order_index);
        self.classifications.push(CommitClassification {
            commit_id: changes.commit_id,
            order_index: changes.order_index,
            verdicts,
        });
        Ok(self.classifications.last().expect("just pushed"))
    }

    fn audit(&mut self, changes: &ChangeSet, verdicts: &[GranularityVerdict]) {
        let find = |g| verdicts.iter().find(|v| v.granularity == g);
        let (Some(line), Some(token)) = (find(Granularity::Line), find(Granularity::Token)) else {
            return;
        };
        if line.acceptable != token.acceptable {
            self.diagnostics
                .acceptability_divergence
                .push(changes.commit_id.clone());
        }
        for scope in Scope::ALL {
            if line.redundant(scope) && !token.redundant(scope) {
                self.diagnostics
                    .line_token_subsumption_violations
                    .push(SubsumptionViolation {
                        commit_id: changes.commit_id.clone(),
                        order_index: changes.order_index,
                        scope,
                        token_acceptable: token.acceptable,
                        token_novel: token.scope(scope).novel_sample.clone(),
                        deltas: changes.deltas.iter().map(DeltaSample::of).collect(),
                    });
            }
        }
    }

    pub fn finish(mut self, ingest: IngestStats) -> AnalysisOutcome {
        let stats = self.builder.stats();
        self.diagnostics.fallback_tokens = stats.fallback_tokens;
        self.diagnostics.oversize_files_skipped = stats.oversize_files_skipped;
        self.diagnostics.ingest = ingest;
        AnalysisOutcome {
            summary: summarize(&self.classifications, &self.pools),
            classifications: self.classifications,
            pools: self.pools,
            diagnostics: self.diagnostics,
        }
    }
}

/// Runs the incremental pipeline over an already-open stream.
pub fn analyze_stream<S: CommitStream>(mut stream: S, config: &AnalysisConfig) -> Result<AnalysisOutcome> {
    let mut analyzer = Analyzer::new(config);
    for commit in stream.by_ref() {
        analyzer.process(commit?)?;
    }
    Ok(analyzer.finish(stream.ingest_stats()))
}

/// Opens the configured source and runs the full pipeline.
pub fn run_analysis(config: &AnalysisConfig) -> Result<Report> {
    let mut config = config.clone();
    config.validate()?;
    let outcome = match &config.source {
        Source::Repository { path, branch, range } => {
            let history = open_repository(path, branch, *range)?.with_path_filter(config.filter.clone());
            analyze_stream(history, &config)?
        }
        Source::Bundle { dir } => analyze_stream(load_history_bundle(dir)?, &config)?,
    };
    Ok(Report::new(&config, outcome))
}
