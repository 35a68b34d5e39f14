//! Portable history bundles: a `manifest.json` listing commits in traversal
//! order, with file contents inline or stored content-addressed under
//! `blobs/`.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CommitRecord, CommitStream, FileChange, IngestStats};
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";
const BLOB_PREFIX: &str = "@blobs/";

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    commits: Vec<ManifestCommit>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestCommit {
    id: String,
    timestamp: i64,
    files: Vec<ManifestFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    path: String,
    before: Option<String>,
    after: Option<String>,
}

pub struct BundleHistory {
    dir: PathBuf,
    commits: std::vec::IntoIter<ManifestCommit>,
    next_index: u64,
    stats: IngestStats,
}

pub fn load_history_bundle(dir: impl AsRef<Path>) -> Result<BundleHistory> {
    let dir = dir.as_ref().to_path_buf();
    let manifest_path = dir.join(MANIFEST);
    let raw = fs::read(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_slice(&raw).map_err(|e| Error::MalformedManifest {
            path: manifest_path.clone(),
            reason: e.to_string(),
        })?;

    let mut stats = IngestStats::default();
    for (i, commit) in manifest.commits.iter().enumerate() {
        if let Some(file) = commit
            .files
            .iter()
            .find(|f| f.before.is_none() && f.after.is_none())
        {
            return Err(Error::MalformedManifest {
                path: manifest_path,
                reason: format!(
                    "commit {} file {}: before and after are both null",
                    commit.id, file.path
                ),
            });
        }
        for blob in commit
            .files
            .iter()
            .flat_map(|f| [&f.before, &f.after])
            .flatten()
            .filter_map(|s| s.strip_prefix(BLOB_PREFIX))
        {
            if blob.len() != 64 || !blob.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(Error::MalformedManifest {
                    path: manifest_path,
                    reason: format!("commit {}: bad blob reference `{blob}`", commit.id),
                });
            }
        }
        if i > 0 && commit.timestamp < manifest.commits[i - 1].timestamp {
            warn!(
                "bundle {}: commit {} has an earlier timestamp than its predecessor",
                dir.display(),
                commit.id
            );
            stats.out_of_order_timestamps += 1;
        }
    }

    Ok(BundleHistory {
        dir,
        commits: manifest.commits.into_iter(),
        next_index: 0,
        stats,
    })
}

impl BundleHistory {
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn resolve(&mut self, value: Option<String>) -> Result<Option<String>> {
        let Some(value) = value else { return Ok(None) };
        let Some(sha) = value.strip_prefix(BLOB_PREFIX) else {
            return Ok(Some(value));
        };
        let path = self.dir.join("blobs").join(sha);
        let bytes = fs::read(&path).map_err(|_| Error::MissingBlob(path.clone()))?;
        if hex::encode(Sha256::digest(&bytes)) != sha.to_ascii_lowercase() {
            return Err(Error::MissingBlob(path));
        }
        Ok(Some(match String::from_utf8(bytes) {
            Ok(s) => s,
            Err(e) => {
                self.stats.lossy_decodes += 1;
                String::from_utf8_lossy(e.as_bytes()).into_owned()
            }
        }))
    }

    fn convert(&mut self, commit: ManifestCommit) -> Result<CommitRecord> {
        let mut file_changes = Vec::with_capacity(commit.files.len());
        for file in commit.files {
            let before = self.resolve(file.before)?;
            let after = self.resolve(file.after)?;
            file_changes.extend(FileChange::new(file.path, before, after));
        }
        let record = CommitRecord {
            commit_id: commit.id,
            order_index: self.next_index,
            timestamp: commit.timestamp,
            file_changes,
        };
        self.next_index += 1;
        Ok(record)
    }
}

impl Iterator for BundleHistory {
    type Item = Result<CommitRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let commit = self.commits.next()?;
        Some(self.convert(commit))
    }
}

impl CommitStream for BundleHistory {
    fn ingest_stats(&self) -> IngestStats {
        self.stats.clone()
    }
}

fn store_blob(blob_dir: &Path, content: &str) -> Result<String> {
    let sha = hex::encode(Sha256::digest(content.as_bytes()));
    let path = blob_dir.join(&sha);
    if !path.exists() {
        fs::create_dir_all(blob_dir).map_err(|e| Error::io(blob_dir, e))?;
        fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    }
    Ok(format!("{BLOB_PREFIX}{sha}"))
}

/// Writes `commits` as a bundle under `out_dir`. Contents shorter than
/// `inline_limit` bytes are stored inline in the manifest; everything else
/// goes to `blobs/`.
pub fn write_bundle<I>(commits: I, out_dir: impl AsRef<Path>, inline_limit: Option<usize>) -> Result<usize>
where
    I: IntoIterator<Item = Result<CommitRecord>>,
{
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let blob_dir = out_dir.join("blobs");
    let encode = |content: Option<String>| -> Result<Option<String>> {
        match content {
            None => Ok(None),
            Some(c) if inline_limit.is_some_and(|l| c.len() < l) && !c.starts_with(BLOB_PREFIX) => {
                Ok(Some(c))
            }
            Some(c) => store_blob(&blob_dir, &c).map(Some),
        }
    };

    let mut manifest = Manifest::default();
    for commit in commits {
        let commit = commit?;
        let mut files = Vec::with_capacity(commit.file_changes.len());
        for change in commit.file_changes {
            files.push(ManifestFile {
                path: change.path,
                before: encode(change.before)?,
                after: encode(change.after)?,
            });
        }
        manifest.commits.push(ManifestCommit {
            id: commit.commit_id,
            timestamp: commit.timestamp,
            files,
        });
    }

    let path = out_dir.join(MANIFEST);
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest.commits.len())
}

/// Exports a commit stream as a bundle with every content stored as a blob.
pub fn export_bundle<I>(commits: I, out_dir: impl AsRef<Path>) -> Result<usize>
where
    I: IntoIterator<Item = Result<CommitRecord>>,
{
    write_bundle(commits, out_dir, None)
}
