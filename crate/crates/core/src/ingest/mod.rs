//! Ordered commit streams from git repositories or history bundles.

mod bundle;
mod git;

use globset::{Glob, GlobBuilder, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bundle::{export_bundle, load_history_bundle, write_bundle, BundleHistory, MANIFEST};
pub use git::{open_repository, GitHistory, TimeRange};

/// One commit of the traversed history.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub commit_id: String,
    /// 0-based position in the emitted stream; the ordering used for
    /// redundancy, timestamps are informational only.
    pub order_index: u64,
    /// Seconds since the epoch, UTC.
    pub timestamp: i64,
    pub file_changes: Vec<FileChange>,
}

/// A before/after file pair. `None` means the file does not exist on that
/// side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub before: Option<String>,
    pub after: Option<String>,
}

impl FileChange {
    /// `None` for pairs that carry no change.
    pub fn new(path: impl Into<String>, before: Option<String>, after: Option<String>) -> Option<Self> {
        if before == after {
            return None;
        }
        Some(FileChange {
            path: path.into(),
            before,
            after,
        })
    }
}

/// Counters for things skipped or tolerated while reading history.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub merges_skipped: u64,
    pub binary_files_skipped: u64,
    pub lossy_decodes: u64,
    pub out_of_order_timestamps: u64,
    pub files_filtered_out: u64,
}

/// A source of [`CommitRecord`]s in `order_index` order.
pub trait CommitStream: Iterator<Item = Result<CommitRecord>> {
    fn ingest_stats(&self) -> IngestStats;
}

/// Include/exclude path globs. A path is kept iff it matches at least one
/// include pattern and no exclude pattern.
#[derive(Clone, Debug)]
pub struct FileFilterRules {
    include_globs: Vec<String>,
    exclude_globs: Vec<String>,
    include: GlobSet,
    exclude: GlobSet,
}

pub const DEFAULT_INCLUDE: &[&str] = &["**/*.java"];
pub const DEFAULT_EXCLUDE: &[&str] = &[
    "**/test/**",
    "**/tests/**",
    "**/*Test.java",
    "**/*Tests.java",
    "**/*TestCase.java",
];

fn build_set(patterns: &[String]) -> Result<GlobSet> {
    let mut builder = GlobSetBuilder::new();
    for pattern in patterns {
        let glob: Glob = GlobBuilder::new(pattern)
            .literal_separator(true)
            .build()
            .map_err(|e| Error::InvalidGlob {
                pattern: pattern.clone(),
                reason: e.kind().to_string(),
            })?;
        builder.add(glob);
    }
    builder.build().map_err(|e| Error::InvalidGlob {
        pattern: patterns.join(","),
        reason: e.to_string(),
    })
}

impl FileFilterRules {
    pub fn new<I, E>(include: I, exclude: E) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<String>,
        E: IntoIterator,
        E::Item: Into<String>,
    {
        let include_globs: Vec<String> = include.into_iter().map(Into::into).collect();
        let exclude_globs: Vec<String> = exclude.into_iter().map(Into::into).collect();
        Ok(FileFilterRules {
            include: build_set(&include_globs)?,
            exclude: build_set(&exclude_globs)?,
            include_globs,
            exclude_globs,
        })
    }

    pub fn include_globs(&self) -> &[String] {
        &self.include_globs
    }

    pub fn exclude_globs(&self) -> &[String] {
        &self.exclude_globs
    }

    pub fn matches(&self, path: &str) -> bool {
        self.include.is_match(path) && !self.exclude.is_match(path)
    }
}

impl Default for FileFilterRules {
    fn default() -> Self {
        FileFilterRules::new(DEFAULT_INCLUDE.iter().copied(), DEFAULT_EXCLUDE.iter().copied())
            .expect("default globs are valid")
    }
}

impl PartialEq for FileFilterRules {
    fn eq(&self, other: &Self) -> bool {
        self.include_globs == other.include_globs && self.exclude_globs == other.exclude_globs
    }
}

pub fn filter_files(changes: Vec<FileChange>, rules: &FileFilterRules) -> Vec<FileChange> {
    changes.into_iter().filter(|c| rules.matches(&c.path)).collect()
}

/// An in-memory stream, mostly for tests and the synthetic generator.
pub struct VecStream {
    commits: std::vec::IntoIter<CommitRecord>,
}

impl VecStream {
    pub fn new(commits: Vec<CommitRecord>) -> Self {
        VecStream {
            commits: commits.into_iter(),
        }
    }
}

impl Iterator for VecStream {
    type Item = Result<CommitRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        self.commits.next().map(Ok)
    }
}

impl CommitStream for VecStream {
    fn ingest_stats(&self) -> IngestStats {
        IngestStats::default()
    }
}
