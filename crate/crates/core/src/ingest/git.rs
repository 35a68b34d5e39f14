//! First-parent history of a git branch, read through the `git` client.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use log::warn;
use serde::{Deserialize, Serialize};

use super::{CommitRecord, CommitStream, FileChange, FileFilterRules, IngestStats};
use crate::error::{Error, Result};

/// Inclusive commit-timestamp window (seconds since the epoch).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRange {
    pub since: Option<i64>,
    pub until: Option<i64>,
}

impl TimeRange {
    pub fn contains(&self, ts: i64) -> bool {
        self.since.map_or(true, |s| ts >= s) && self.until.map_or(true, |u| ts <= u)
    }
}

fn git(repo: &Path, args: &[&str]) -> Result<Vec<u8>> {
    let output = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .output()
        .map_err(|e| Error::Git {
            command: format!("git {}", args.join(" ")),
            stderr: e.to_string(),
        })?;
    if !output.status.success() {
        return Err(Error::Git {
            command: format!("git {}", args.join(" ")),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_owned(),
        });
    }
    Ok(output.stdout)
}

struct PlannedCommit {
    id: String,
    parent: Option<String>,
    timestamp: i64,
}

/// Streams the first-parent chain of a branch, oldest first. Merge commits
/// are skipped; every other commit is diffed against its first parent, and
/// the root commit against the empty tree.
pub struct GitHistory {
    repo: PathBuf,
    plan: std::vec::IntoIter<PlannedCommit>,
    next_index: u64,
    path_filter: Option<FileFilterRules>,
    blobs: Option<CatFile>,
    stats: IngestStats,
}

pub fn open_repository(path: impl AsRef<Path>, branch: &str, range: TimeRange) -> Result<GitHistory> {
    let repo = path.as_ref().to_path_buf();
    if !repo.is_dir() || git(&repo, &["rev-parse", "--git-dir"]).is_err() {
        return Err(Error::RepositoryNotFound(repo));
    }
    let spec = format!("{branch}^{{commit}}");
    if git(&repo, &["rev-parse", "--verify", "--quiet", &spec]).is_err() {
        return Err(Error::BranchNotFound {
            repo,
            branch: branch.to_owned(),
        });
    }

    let log = git(
        &repo,
        &[
            "log",
            "--first-parent",
            "--reverse",
            "--format=%H%x00%P%x00%ct",
            &spec,
            "--",
        ],
    )?;
    let log = String::from_utf8_lossy(&log);

    let mut stats = IngestStats::default();
    let mut plan = Vec::new();
    let mut last_ts = i64::MIN;
    for line in log.lines().filter(|l| !l.is_empty()) {
        let mut fields = line.split('\0');
        let (Some(id), Some(parents), Some(ts)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Git {
                command: "git log".into(),
                stderr: format!("unexpected log line {line:?}"),
            });
        };
        let parents: Vec<&str> = parents.split_whitespace().collect();
        if parents.len() >= 2 {
            stats.merges_skipped += 1;
            continue;
        }
        let timestamp: i64 = ts.trim().parse().map_err(|_| Error::Git {
            command: "git log".into(),
            stderr: format!("bad timestamp in {line:?}"),
        })?;
        if !range.contains(timestamp) {
            continue;
        }
        if timestamp < last_ts {
            stats.out_of_order_timestamps += 1;
        }
        last_ts = timestamp;
        plan.push(PlannedCommit {
            id: id.to_owned(),
            parent: parents.first().map(|p| (*p).to_owned()),
            timestamp,
        });
    }

    Ok(GitHistory {
        repo,
        plan: plan.into_iter(),
        next_index: 0,
        path_filter: None,
        blobs: None,
        stats,
    })
}

/// `git cat-file --batch` kept alive for the whole traversal.
struct CatFile {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl CatFile {
    fn spawn(repo: &Path) -> Result<Self> {
        let mut child = Command::new("git")
            .arg("-C")
            .arg(repo)
            .args(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Git {
                command: "git cat-file --batch".into(),
                stderr: e.to_string(),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(CatFile {
            child,
            stdin,
            stdout,
        })
    }

    fn read(&mut self, sha: &str) -> Result<Vec<u8>> {
        let fail = |msg: String| Error::Git {
            command: format!("git cat-file --batch ({sha})"),
            stderr: msg,
        };
        writeln!(self.stdin, "{sha}").map_err(|e| fail(e.to_string()))?;
        self.stdin.flush().map_err(|e| fail(e.to_string()))?;
        let mut header = String::new();
        self.stdout
            .read_line(&mut header)
            .map_err(|e| fail(e.to_string()))?;
        let mut parts = header.split_whitespace();
        let (Some(_), Some(kind), Some(size)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(fail(format!("unexpected header {header:?}")));
        };
        if kind != "blob" {
            return Err(fail(format!("object is a {kind}")));
        }
        let size: usize = size.parse().map_err(|_| fail(format!("bad size in {header:?}")))?;
        let mut buf = vec![0; size + 1];
        self.stdout
            .read_exact(&mut buf)
            .map_err(|e| fail(e.to_string()))?;
        buf.truncate(size);
        Ok(buf)
    }
}

impl Drop for CatFile {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct RawEntry {
    path: String,
    old_blob: Option<String>,
    new_blob: Option<String>,
}

fn is_regular_file(mode: &str) -> bool {
    mode.starts_with("100")
}

fn parse_diff_tree(out: &[u8]) -> Vec<RawEntry> {
    let mut entries = Vec::new();
    let mut fields = out.split(|&b| b == 0).filter(|f| !f.is_empty());
    while let (Some(meta), Some(path)) = (fields.next(), fields.next()) {
        let meta = String::from_utf8_lossy(meta);
        let parts: Vec<&str> = meta.trim_start_matches(':').split(' ').collect();
        if parts.len() < 5 {
            continue;
        }
        let side = |mode: &str, sha: &str| is_regular_file(mode).then(|| sha.to_owned());
        let entry = RawEntry {
            path: String::from_utf8_lossy(path).into_owned(),
            old_blob: side(parts[0], parts[2]),
            new_blob: side(parts[1], parts[3]),
        };
        if entry.old_blob.is_some() || entry.new_blob.is_some() {
            entries.push(entry);
        }
    }
    entries
}

fn looks_binary(bytes: &[u8]) -> bool {
    bytes[..bytes.len().min(8000)].contains(&0)
}

impl GitHistory {
    /// Only files whose path passes `rules` are read from the object store.
    pub fn with_path_filter(mut self, rules: FileFilterRules) -> Self {
        self.path_filter = Some(rules);
        self
    }

    pub fn len(&self) -> usize {
        self.plan.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plan.len() == 0
    }

    fn decode(&mut self, bytes: Vec<u8>) -> String {
        match String::from_utf8(bytes) {
            Ok(s) => s,
            Err(e) => {
                self.stats.lossy_decodes += 1;
                String::from_utf8_lossy(e.as_bytes()).into_owned()
            }
        }
    }

    fn blob(&mut self, sha: Option<&str>) -> Result<Option<Vec<u8>>> {
        let Some(sha) = sha else { return Ok(None) };
        if self.blobs.is_none() {
            self.blobs = Some(CatFile::spawn(&self.repo)?);
        }
        self.blobs.as_mut().expect("spawned").read(sha).map(Some)
    }

    fn load(&mut self, planned: PlannedCommit) -> Result<CommitRecord> {
        let mut args = vec!["diff-tree", "-r", "-z", "--no-renames", "--no-commit-id", "--raw"];
        match &planned.parent {
            Some(parent) => args.push(parent),
            None => args.push("--root"),
        }
        args.push(&planned.id);
        let raw = git(&self.repo, &args)?;

        let mut file_changes = Vec::new();
        for entry in parse_diff_tree(&raw) {
            if let Some(rules) = &self.path_filter {
                if !rules.matches(&entry.path) {
                    self.stats.files_filtered_out += 1;
                    continue;
                }
            }
            let before = self.blob(entry.old_blob.as_deref())?;
            let after = self.blob(entry.new_blob.as_deref())?;
            if before.iter().chain(after.iter()).any(|b| looks_binary(b)) {
                warn!("{}: skipping binary file {}", planned.id, entry.path);
                self.stats.binary_files_skipped += 1;
                continue;
            }
            let before = before.map(|b| self.decode(b));
            let after = after.map(|b| self.decode(b));
            file_changes.extend(FileChange::new(entry.path, before, after));
        }

        let record = CommitRecord {
            commit_id: planned.id,
            order_index: self.next_index,
            timestamp: planned.timestamp,
            file_changes,
        };
        self.next_index += 1;
        Ok(record)
    }
}

impl Iterator for GitHistory {
    type Item = Result<CommitRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let planned = self.plan.next()?;
        Some(self.load(planned))
    }
}

impl CommitStream for GitHistory {
    fn ingest_stats(&self) -> IngestStats {
        self.stats.clone()
    }
}
