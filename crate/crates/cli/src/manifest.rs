//! Dataset manifest: one tab-separated line per word image.
//!
//! Format: tab-separated `path`, `transcription`, `page`, `split`
//! fields, where split is `train` or `test`. Blank lines and lines
//! starting with `#` are skipped. Paths are relative to the manifest
//! file and double as entry ids, so they must be unique. An empty
//! transcription field marks an unlabeled word (indexable and
//! queryable, but not evaluable).

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("duplicate path {path:?} on lines {first} and {second}")]
    DuplicatePath {
        path: String,
        first: usize,
        second: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}, expected train or test")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    /// Image path relative to the manifest file; also the entry id.
    pub path: String,
    /// May be empty (unlabeled word).
    pub transcription: String,
    pub page: String,
    pub split: Split,
}

impl ManifestRecord {
    /// Transcription as an optional label: empty means unlabeled.
    pub fn label(&self) -> Option<&str> {
        if self.transcription.is_empty() {
            None
        } else {
            Some(&self.transcription)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    records: Vec<ManifestRecord>,
    base_dir: PathBuf,
}

impl Manifest {
    /// Parse manifest text; `base_dir` anchors the relative image paths.
    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self, ManifestError> {
        let mut records = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(ManifestError::MalformedLine {
                    line: line_no,
                    reason: format!(
                        "expected 4 tab-separated fields (path, transcription, page, split), got {}",
                        fields.len()
                    ),
                });
            }
            let (path, transcription, page, split) =
                (fields[0], fields[1], fields[2], fields[3]);
            if path.is_empty() {
                return Err(ManifestError::MalformedLine {
                    line: line_no,
                    reason: "empty image path".into(),
                });
            }
            if page.is_empty() {
                return Err(ManifestError::MalformedLine {
                    line: line_no,
                    reason: "empty page id".into(),
                });
            }
            let split = Split::from_str(split).map_err(|reason| ManifestError::MalformedLine {
                line: line_no,
                reason,
            })?;
            if let Some(&first) = seen.get(path) {
                return Err(ManifestError::DuplicatePath {
                    path: path.to_string(),
                    first,
                    second: line_no,
                });
            }
            seen.insert(path.to_string(), line_no);
            records.push(ManifestRecord {
                path: path.to_string(),
                transcription: transcription.to_string(),
                page: page.to_string(),
                split,
            });
        }
        Ok(Self { records, base_dir })
    }

    /// Read and parse a manifest file.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, base_dir)
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    /// Records of one split, or all of them when `split` is `None`.
    pub fn select(&self, split: Option<Split>) -> Vec<&ManifestRecord> {
        self.records
            .iter()
            .filter(|r| split.is_none_or(|s| r.split == s))
            .collect()
    }

    /// Absolute (or manifest-relative) path of a record's image file.
    pub fn resolve(&self, record: &ManifestRecord) -> PathBuf {
        self.base_dir.join(&record.path)
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
