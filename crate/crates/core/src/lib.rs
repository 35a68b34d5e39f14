//! Temporal redundancy of source-code commits.
//!
//! A commit is *temporally redundant* when every fragment (line or token) it
//! adds was already added by some earlier commit, either anywhere in the
//! project (global scope) or in the same file (local scope). This crate reads
//! a commit history, fragments and diffs every changed file, classifies each
//! commit against first-seen fragment pools, and aggregates per-project
//! metrics.
//!
//! ```no_run
//! use tempred_core::{run_analysis, AnalysisConfig};
//!
//! let report = run_analysis(&AnalysisConfig::bundle("fixtures/pico")).unwrap();
//! println!("{}", tempred_core::report::to_table(&[report]));
//! ```

pub mod analysis;
pub mod diff;
pub mod error;
pub mod fragment;
pub mod ingest;
pub mod redundancy;
pub mod report;
pub mod synth;

pub use analysis::{analyze_stream, run_analysis, AnalysisConfig, AnalysisOutcome, Analyzer, Diagnostics, Source};
pub use diff::{diff, diff_fragments, EditScript, Edits, FileDelta};
pub use error::{Error, Result};
pub use fragment::{fragment_lines, fragment_tokens, strip_comments, Fragment, Granularity, Normalization};
pub use ingest::{
    export_bundle, filter_files, load_history_bundle, open_repository, CommitRecord, CommitStream, FileChange,
    FileFilterRules, TimeRange,
};
pub use redundancy::{
    classify_commit, index_commit, summarize, ChangeSet, CommitClassification, FragmentPool, ProjectSummary, Scope,
    ScopedPools,
};
pub use report::{emit_report, OutputFormat, Report};
