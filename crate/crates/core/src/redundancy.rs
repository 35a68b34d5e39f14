//! Fragment pools and per-commit temporal-redundancy verdicts.
//!
//! A commit is temporally redundant at a scope when it adds at least one
//! fragment and every fragment it adds was already added by an earlier
//! commit: anywhere in the project for the global scope, to the same file
//! path for the local scope. Pools index the first commit that added each
//! fragment value and are updated only after the commit has been
//! classified, so a commit never makes its own additions redundant.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diff::FileDelta;
use crate::error::{Error, Result};
use crate::fragment::Granularity;

/// Number of novel fragments kept per verdict for reporting.
pub const NOVEL_SAMPLE: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Global,
    Local,
}

impl Scope {
    pub const ALL: [Scope; 2] = [Scope::Global, Scope::Local];

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Global => "global",
            Scope::Local => "local",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "global" => Ok(Scope::Global),
            "local" => Ok(Scope::Local),
            other => Err(Error::InvalidConfig(format!("unknown scope `{other}`"))),
        }
    }
}

/// The added/removed fragments of one commit, one delta per retained file
/// and granularity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeSet {
    pub commit_id: String,
    pub order_index: u64,
    pub deltas: Vec<FileDelta>,
}

impl ChangeSet {
    pub fn deltas(&self, granularity: Granularity) -> impl Iterator<Item = &FileDelta> {
        self.deltas
            .iter()
            .filter(move |d| d.granularity == granularity)
    }

    pub fn added_count(&self, granularity: Granularity) -> usize {
        self.deltas(granularity).map(|d| d.added.len()).sum()
    }
}

/// First-seen index of fragment values at one granularity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FragmentPool {
    granularity: Granularity,
    entries: HashMap<String, u64>,
}

impl FragmentPool {
    pub fn new(granularity: Granularity) -> Self {
        FragmentPool {
            granularity,
            entries: HashMap::new(),
        }
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, content: &str) -> bool {
        self.entries.contains_key(content)
    }

    /// Order index of the first commit that added `content`.
    pub fn first_seen(&self, content: &str) -> Option<u64> {
        self.entries.get(content).copied()
    }

    /// Records `content` as seen at `order_index` unless it is already known.
    /// Returns whether it was new.
    pub fn insert(&mut self, content: &str, order_index: u64) -> bool {
        if self.entries.contains_key(content) {
            return false;
        }
        self.entries.insert(content.to_owned(), order_index);
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// The global pool plus one local pool per file path, all at one
/// granularity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScopedPools {
    granularity: Granularity,
    global: FragmentPool,
    local: BTreeMap<String, FragmentPool>,
    last_indexed: Option<u64>,
}

impl ScopedPools {
    pub fn new(granularity: Granularity) -> Self {
        ScopedPools {
            granularity,
            global: FragmentPool::new(granularity),
            local: BTreeMap::new(),
            last_indexed: None,
        }
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn global(&self) -> &FragmentPool {
        &self.global
    }

    pub fn local(&self, path: &str) -> Option<&FragmentPool> {
        self.local.get(path)
    }

    pub fn local_pools(&self) -> impl Iterator<Item = (&str, &FragmentPool)> {
        self.local.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn last_indexed(&self) -> Option<u64> {
        self.last_indexed
    }

    /// Whether every local entry is also in the global pool.
    pub fn locals_within_global(&self) -> bool {
        self.local
            .values()
            .all(|pool| pool.entries.keys().all(|f| self.global.contains(f)))
    }

    fn check(&self, changes: &ChangeSet, granularity: Granularity) -> Result<()> {
        if granularity != self.granularity {
            return Err(Error::GranularityMismatch {
                pool: self.granularity,
                requested: granularity,
            });
        }
        match self.last_indexed {
            Some(last) if last >= changes.order_index => Err(Error::OrderingViolation {
                order_index: changes.order_index,
                last_indexed: last,
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeVerdict {
    pub redundant: bool,
    /// Added fragment occurrences absent from the pool.
    pub novel_count: usize,
    /// The first few distinct novel fragments, in order of appearance.
    pub novel_sample: Vec<String>,
}

impl ScopeVerdict {
    fn record_novel(&mut self, content: &str) {
        self.novel_count += 1;
        if self.novel_sample.len() < NOVEL_SAMPLE && !self.novel_sample.iter().any(|s| s == content) {
            self.novel_sample.push(content.to_owned());
        }
    }
}

/// Verdicts for one commit at one granularity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GranularityVerdict {
    pub granularity: Granularity,
    pub acceptable: bool,
    pub added_count: usize,
    pub global: ScopeVerdict,
    pub local: ScopeVerdict,
}

impl GranularityVerdict {
    pub fn scope(&self, scope: Scope) -> &ScopeVerdict {
        match scope {
            Scope::Global => &self.global,
            Scope::Local => &self.local,
        }
    }

    pub fn redundant(&self, scope: Scope) -> bool {
        self.scope(scope).redundant
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitClassification {
    pub commit_id: String,
    pub order_index: u64,
    pub verdicts: Vec<GranularityVerdict>,
}

impl CommitClassification {
    pub fn verdict(&self, granularity: Granularity) -> Option<&GranularityVerdict> {
        self.verdicts.iter().find(|v| v.granularity == granularity)
    }
}

/// Classifies one commit against pools that hold exactly the additions of
/// earlier commits.
pub fn classify_commit(
    pools: &ScopedPools,
    changes: &ChangeSet,
    granularity: Granularity,
) -> Result<GranularityVerdict> {
    pools.check(changes, granularity)?;

    let mut global = ScopeVerdict::default();
    let mut local = ScopeVerdict::default();
    let mut added_count = 0;
    for delta in changes.deltas(granularity) {
        let local_pool = pools.local(&delta.path);
        for fragment in &delta.added {
            added_count += 1;
            let content = fragment.content();
            if !pools.global.contains(content) {
                global.record_novel(content);
            }
            if !local_pool.is_some_and(|p| p.contains(content)) {
                local.record_novel(content);
            }
        }
    }
    let acceptable = added_count > 0;
    global.redundant = acceptable && global.novel_count == 0;
    local.redundant = acceptable && local.novel_count == 0;
    Ok(GranularityVerdict {
        granularity,
        acceptable,
        added_count,
        global,
        local,
    })
}

/// Adds a classified commit's fragments to the pools. Existing entries keep
/// their first-seen index.
pub fn index_commit(pools: &mut ScopedPools, changes: &ChangeSet, granularity: Granularity) -> Result<()> {
    pools.check(changes, granularity)?;
    let order = changes.order_index;
    for delta in changes.deltas(granularity) {
        if delta.added.is_empty() {
            continue;
        }
        let local = pools
            .local
            .entry(delta.path.clone())
            .or_insert_with(|| FragmentPool::new(granularity));
        for fragment in &delta.added {
            pools.global.insert(fragment.content(), order);
            local.insert(fragment.content(), order);
        }
    }
    pools.last_indexed = Some(order);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScopeSummary {
    pub redundant_commits: u64,
    /// `None` when there are no acceptable commits.
    pub temporal_redundancy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GranularitySummary {
    pub granularity: Granularity,
    pub acceptable_commits: u64,
    pub global: ScopeSummary,
    pub local: ScopeSummary,
    pub global_pool_size: u64,
    /// Median final local pool size over all paths that ever received an
    /// addition; `None` when there are none.
    pub local_pool_size_median: Option<f64>,
}

impl GranularitySummary {
    pub fn scope(&self, scope: Scope) -> &ScopeSummary {
        match scope {
            Scope::Global => &self.global,
            Scope::Local => &self.local,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectSummary {
    pub granularities: Vec<GranularitySummary>,
}

impl ProjectSummary {
    pub fn get(&self, granularity: Granularity) -> Option<&GranularitySummary> {
        self.granularities
            .iter()
            .find(|g| g.granularity == granularity)
    }
}

pub fn ratio(numerator: u64, denominator: u64) -> Option<f64> {
    (denominator > 0).then(|| numerator as f64 / denominator as f64)
}

/// Median with the even case averaged.
pub fn median(values: &mut [u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid] as f64
    } else {
        (values[mid - 1] as f64 + values[mid] as f64) / 2.0
    })
}

/// Aggregates per-commit verdicts and final pool sizes, one entry per pool
/// set in `pools`.
pub fn summarize(classifications: &[CommitClassification], pools: &[ScopedPools]) -> ProjectSummary {
    let granularities = pools
        .iter()
        .map(|pools| {
            let g = pools.granularity();
            let verdicts = classifications.iter().filter_map(|c| c.verdict(g));
            let (mut acceptable, mut global, mut local) = (0u64, 0u64, 0u64);
            for v in verdicts {
                acceptable += u64::from(v.acceptable);
                global += u64::from(v.global.redundant);
                local += u64::from(v.local.redundant);
            }
            let mut local_sizes: Vec<u64> = pools.local.values().map(|p| p.len() as u64).collect();
            GranularitySummary {
                granularity: g,
                acceptable_commits: acceptable,
                global: ScopeSummary {
                    redundant_commits: global,
                    temporal_redundancy: ratio(global, acceptable),
                },
                local: ScopeSummary {
                    redundant_commits: local,
                    temporal_redundancy: ratio(local, acceptable),
                },
                global_pool_size: pools.global.len() as u64,
                local_pool_size_median: median(&mut local_sizes),
            }
        })
        .collect();
    ProjectSummary { granularities }
}
