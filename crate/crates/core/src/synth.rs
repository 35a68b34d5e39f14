//! Synthetic histories with controllable redundancy, and a brute-force
//! reference classifier.
//!
//! The reference classifier keeps no pools: for every added fragment of
//! commit `j` it rescans the added fragments of commits `0..j`. It shares the
//! fragmenting and diffing front end with the pipeline but none of the pool
//! or summary code.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{AnalysisConfig, ChangeSetBuilder};
use crate::error::Result;
use crate::ingest::{load_history_bundle, write_bundle, CommitRecord, FileChange};
use crate::redundancy::{
    CommitClassification, GranularitySummary, GranularityVerdict, ProjectSummary, ScopeSummary, ScopeVerdict,
    NOVEL_SAMPLE,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistorySpec {
    pub seed: u64,
    pub commit_count: usize,
    pub file_count: usize,
    /// Fresh statements are drawn uniformly from this many templates;
    /// `None` makes every fresh statement distinct.
    pub fragment_alphabet_size: Option<usize>,
    /// Chance that an inserted statement is taken from statements added by
    /// earlier commits.
    pub reuse_probability: f64,
    /// Chance that a reused statement comes from the same file's history
    /// (when it has any) rather than the whole project's.
    pub locality_bias: f64,
    /// Chance of deleting or replacing lines, and of deletion-only commits.
    pub churn: f64,
    /// Add files outside the default include/exclude rules as noise.
    pub filtered_noise: bool,
}

impl Default for HistorySpec {
    fn default() -> Self {
        HistorySpec {
            seed: 0,
            commit_count: 20,
            file_count: 3,
            fragment_alphabet_size: Some(40),
            reuse_probability: 0.5,
            locality_bias: 0.5,
            churn: 0.3,
            filtered_noise: true,
        }
    }
}

/// Java-ish statement number `k`. Every statement contains a token unique to
/// `k`, so distinct statements never share all their tokens.
pub fn statement(k: usize) -> String {
    let a = k % 7;
    let b = (k / 7) % 5;
    match k % 4 {
        0 => format!("x{a} = x{b} + {k};"),
        1 => format!("int v{k} = x{a} * x{b};"),
        2 => format!("if (x{a} > {k}) x{b}--;"),
        _ => format!("call{a}(x{b}, \"s{k}\");"),
    }
}

struct Generator {
    spec: HistorySpec,
    rng: ChaCha8Rng,
    files: Vec<Option<Vec<String>>>,
    /// Statements added by committed history, project-wide and per file.
    global: Vec<usize>,
    local: Vec<Vec<usize>>,
    next_fresh: usize,
}

impl Generator {
    fn new(spec: &HistorySpec) -> Self {
        let files = spec.file_count.max(1);
        Generator {
            spec: spec.clone(),
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            files: vec![None; files],
            global: Vec::new(),
            local: vec![Vec::new(); files],
            next_fresh: 0,
        }
    }

    fn path(file: usize) -> String {
        format!("src/main/java/synth/F{file}.java")
    }

    fn fresh(&mut self) -> usize {
        match self.spec.fragment_alphabet_size {
            Some(n) if n > 0 => self.rng.gen_range(0..n),
            _ => {
                self.next_fresh += 1;
                self.next_fresh - 1
            }
        }
    }

    fn draw(&mut self, file: usize) -> usize {
        if !self.global.is_empty() && self.rng.gen_bool(self.spec.reuse_probability) {
            let local = &self.local[file];
            let from = if !local.is_empty() && self.rng.gen_bool(self.spec.locality_bias) {
                local
            } else {
                &self.global
            };
            return *from.choose(&mut self.rng).expect("non-empty");
        }
        self.fresh()
    }

    /// A source line for statement `k`, with random indentation and the
    /// occasional trailing comment.
    fn render(&mut self, k: usize) -> String {
        let indent = " ".repeat(self.rng.gen_range(0..3) * 4);
        if self.rng.gen_bool(0.15) {
            format!("{indent}{} // note", statement(k))
        } else {
            format!("{indent}{}", statement(k))
        }
    }

    fn decoration(&mut self) -> Option<String> {
        match self.rng.gen_range(0..10) {
            0 => Some(String::new()),
            1 => Some("    /* reviewed */".into()),
            _ => None,
        }
    }

    fn insert_lines(&mut self, file: usize, lines: &mut Vec<String>, added: &mut Vec<usize>) {
        for _ in 0..self.rng.gen_range(1..=3) {
            let k = self.draw(file);
            let line = self.render(k);
            let at = self.rng.gen_range(0..=lines.len());
            lines.insert(at, line);
            added.push(k);
        }
        if let Some(d) = self.decoration() {
            let at = self.rng.gen_range(0..=lines.len());
            lines.insert(at, d);
        }
    }

    fn commit(&mut self, index: usize) -> CommitRecord {
        let file_count = self.files.len();
        let deletion_only = index > 0 && self.rng.gen_bool(self.spec.churn / 4.0);
        let touched_count = self.rng.gen_range(1..=file_count.min(3));
        let mut order: Vec<usize> = (0..file_count).collect();
        order.shuffle(&mut self.rng);
        let touched = &order[..touched_count];

        let mut changes = Vec::new();
        let mut added: Vec<(usize, usize)> = Vec::new();
        for (n, &file) in touched.iter().enumerate() {
            let before = self.files[file].clone();
            let mut lines = before.clone().unwrap_or_default();
            let mut file_added = Vec::new();
            let must_insert = n == 0 && !deletion_only;
            let churn = self.spec.churn;

            if deletion_only || (!must_insert && before.is_some() && self.rng.gen_bool(churn / 3.0)) {
                if lines.len() > 1 && self.rng.gen_bool(0.7) {
                    let at = self.rng.gen_range(0..lines.len());
                    lines.remove(at);
                } else {
                    lines.clear();
                }
            } else {
                if !lines.is_empty() && self.rng.gen_bool(churn) {
                    let at = self.rng.gen_range(0..lines.len());
                    lines.remove(at);
                }
                self.insert_lines(file, &mut lines, &mut file_added);
            }

            let after = (!lines.is_empty()).then(|| {
                let mut text = lines.join("\n");
                text.push('\n');
                text
            });
            let before_text = before.map(|l| {
                let mut text = l.join("\n");
                text.push('\n');
                text
            });
            self.files[file] = after.is_some().then_some(lines);
            changes.extend(FileChange::new(Self::path(file), before_text, after));
            added.extend(file_added.into_iter().map(|k| (file, k)));
        }

        if self.spec.filtered_noise && self.rng.gen_bool(0.2) {
            let k = self.fresh();
            let path = if self.rng.gen_bool(0.5) {
                format!("src/test/java/synth/F{}Test.java", self.rng.gen_range(0..file_count))
            } else {
                "README.md".to_owned()
            };
            changes.push(FileChange {
                path,
                before: None,
                after: Some(format!("{}\n// {index}\n", statement(k))),
            });
        }

        for (file, k) in added {
            if !self.global.contains(&k) {
                self.global.push(k);
            }
            if !self.local[file].contains(&k) {
                self.local[file].push(k);
            }
        }

        let digest = Sha256::digest(format!("{}:{index}", self.spec.seed).as_bytes());
        CommitRecord {
            commit_id: hex::encode(&digest[..20]),
            order_index: index as u64,
            timestamp: 1_000_000_000 + index as i64 * 3600,
            file_changes: changes,
        }
    }
}

/// Deterministic in-memory history for `spec`.
pub fn generate_commits(spec: &HistorySpec) -> Vec<CommitRecord> {
    let mut gen = Generator::new(spec);
    (0..spec.commit_count).map(|i| gen.commit(i)).collect()
}

/// Writes the history for `spec` as a bundle under `out_dir`. Short
/// contents are inlined, the rest stored as blobs.
pub fn generate_history(spec: &HistorySpec, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let out_dir = out_dir.as_ref();
    write_bundle(generate_commits(spec).into_iter().map(Ok), out_dir, Some(64))?;
    Ok(out_dir.to_path_buf())
}

/// Reference classifications and summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub classifications: Vec<CommitClassification>,
    pub summary: ProjectSummary,
}

/// Added fragments of one file in one commit.
struct Added<'a> {
    path: &'a str,
    fragments: Vec<&'a str>,
}

fn scope_verdict<'a>(added: impl Iterator<Item = (&'a str, bool)>) -> ScopeVerdict {
    let mut verdict = ScopeVerdict::default();
    let mut total = 0;
    for (fragment, seen) in added {
        total += 1;
        if !seen {
            verdict.novel_count += 1;
            if verdict.novel_sample.len() < NOVEL_SAMPLE && !verdict.novel_sample.iter().any(|s| s == fragment) {
                verdict.novel_sample.push(fragment.to_owned());
            }
        }
    }
    verdict.redundant = total > 0 && verdict.novel_count == 0;
    verdict
}

fn middle(mut sizes: Vec<u64>) -> Option<f64> {
    if sizes.is_empty() {
        return None;
    }
    sizes.sort();
    let n = sizes.len();
    if n % 2 == 0 {
        Some((sizes[n / 2 - 1] + sizes[n / 2]) as f64 / 2.0)
    } else {
        Some(sizes[n / 2] as f64)
    }
}

/// Classifies `commits` by literal rescans of all earlier additions.
pub fn oracle_classify<I>(commits: I, config: &AnalysisConfig) -> Result<OracleResult>
where
    I: IntoIterator<Item = Result<CommitRecord>>,
{
    let mut builder = ChangeSetBuilder::new(config);
    let mut changesets = Vec::new();
    for commit in commits {
        changesets.push(builder.build(commit?));
    }

    let mut classifications: Vec<CommitClassification> = changesets
        .iter()
        .map(|cs| CommitClassification {
            commit_id: cs.commit_id.clone(),
            order_index: cs.order_index,
            verdicts: Vec::new(),
        })
        .collect();
    let mut summaries = Vec::new();

    for &g in &config.granularities {
        let history: Vec<Vec<Added>> = changesets
            .iter()
            .map(|cs| {
                cs.deltas
                    .iter()
                    .filter(|d| d.granularity == g)
                    .map(|d| Added {
                        path: &d.path,
                        fragments: d.added.iter().map(|f| f.content()).collect(),
                    })
                    .collect()
            })
            .collect();

        let (mut acceptable, mut global_red, mut local_red) = (0u64, 0u64, 0u64);
        for (j, commit) in history.iter().enumerate() {
            let earlier = &history[..j];
            let seen_anywhere = |f: &str| earlier.iter().flatten().any(|a| a.fragments.contains(&f));
            let seen_in = |path: &str, f: &str| {
                earlier
                    .iter()
                    .flatten()
                    .any(|a| a.path == path && a.fragments.contains(&f))
            };
            let all = || commit.iter().flat_map(|a| a.fragments.iter().map(move |f| (a.path, *f)));
            let added_count = all().count();
            let global = scope_verdict(all().map(|(_, f)| (f, seen_anywhere(f))));
            let local = scope_verdict(all().map(|(p, f)| (f, seen_in(p, f))));
            acceptable += u64::from(added_count > 0);
            global_red += u64::from(global.redundant);
            local_red += u64::from(local.redundant);
            classifications[j].verdicts.push(GranularityVerdict {
                granularity: g,
                acceptable: added_count > 0,
                added_count,
                global,
                local,
            });
        }

        let mut distinct: Vec<&str> = history.iter().flatten().flat_map(|a| a.fragments.clone()).collect();
        distinct.sort();
        distinct.dedup();
        let mut pairs: Vec<(&str, &str)> = history
            .iter()
            .flatten()
            .flat_map(|a| a.fragments.iter().map(move |f| (a.path, *f)))
            .collect();
        pairs.sort();
        pairs.dedup();
        let mut per_path: Vec<(&str, u64)> = Vec::new();
        for (path, _) in pairs {
            match per_path.last_mut() {
                Some((p, n)) if *p == path => *n += 1,
                _ => per_path.push((path, 1)),
            }
        }
        let fraction = |n: u64| (acceptable > 0).then(|| n as f64 / acceptable as f64);
        summaries.push(GranularitySummary {
            granularity: g,
            acceptable_commits: acceptable,
            global: ScopeSummary {
                redundant_commits: global_red,
                temporal_redundancy: fraction(global_red),
            },
            local: ScopeSummary {
                redundant_commits: local_red,
                temporal_redundancy: fraction(local_red),
            },
            global_pool_size: distinct.len() as u64,
            local_pool_size_median: middle(per_path.into_iter().map(|(_, n)| n).collect()),
        });
    }

    Ok(OracleResult {
        classifications,
        summary: ProjectSummary {
            granularities: summaries,
        },
    })
}

pub fn oracle_classify_bundle(dir: impl AsRef<Path>, config: &AnalysisConfig) -> Result<OracleResult> {
    oracle_classify(load_history_bundle(dir)?, config)
}
