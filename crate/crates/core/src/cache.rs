//! Append-only metric cache.
//!
//! A cache directory holds `metrics.jsonl` (one [`ComplexityRecord`] per
//! line) and `skipped.jsonl` (one [`SkipEntry`] per line). Opening a cache
//! compacts both files: unreadable lines, such as a record cut short by an
//! interrupted scan, are dropped, the last record per key wins, and the
//! survivors are rewritten sorted by key.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const SKIPPED_FILE: &str = "skipped.jsonl";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("serializing cache record: {0}")]
    Serialize(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CacheError + '_ {
    move |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// SHA-256 of `bytes` as lowercase hex.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRecord {
    pub image_hash: String,
    pub h: f64,
    pub c: f64,
    pub zipc: f64,
    pub mdlc_bits: Option<f64>,
    pub object_count: Option<usize>,
    pub tool_version: String,
    pub config_fingerprint: String,
}

impl ComplexityRecord {
    pub fn key(&self) -> (String, String) {
        (self.image_hash.clone(), self.config_fingerprint.clone())
    }
}

/// A file the scan could not turn into metrics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipEntry {
    /// Absent when the file could not be read at all.
    pub image_hash: Option<String>,
    pub path: String,
    pub error: String,
}

impl SkipEntry {
    fn key(&self) -> (String, String) {
        (
            self.image_hash.clone().unwrap_or_default(),
            self.path.clone(),
        )
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CacheError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.push(v),
            Err(e) => log::warn!(
                "{}:{}: dropping unreadable line: {e}",
                path.display(),
                i + 1
            ),
        }
    }
    Ok(out)
}

fn write_jsonl_atomic<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<(), CacheError> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
        for item in items {
            serde_json::to_writer(&mut w, item)?;
            w.write_all(b"\n").map_err(io_err(&tmp))?;
        }
        w.flush().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub struct MetricCache {
    dir: PathBuf,
    records: BTreeMap<(String, String), ComplexityRecord>,
    skipped: BTreeMap<(String, String), SkipEntry>,
}

impl MetricCache {
    /// Opens (creating if needed) and compacts the cache in `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CacheError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut cache = Self {
            records: BTreeMap::new(),
            skipped: BTreeMap::new(),
            dir,
        };
        for r in read_jsonl::<ComplexityRecord>(&cache.metrics_path())? {
            cache.records.insert(r.key(), r);
        }
        for s in read_jsonl::<SkipEntry>(&cache.skipped_path())? {
            cache.skipped.insert(s.key(), s);
        }
        cache.compact()?;
        Ok(cache)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.dir.join(METRICS_FILE)
    }

    pub fn skipped_path(&self) -> PathBuf {
        self.dir.join(SKIPPED_FILE)
    }

    /// Rewrites both files from the in-memory state, sorted by key.
    pub fn compact(&self) -> Result<(), CacheError> {
        write_jsonl_atomic(&self.metrics_path(), self.records.values())?;
        write_jsonl_atomic(&self.skipped_path(), self.skipped.values())
    }

    pub fn get(&self, image_hash: &str, fingerprint: &str) -> Option<&ComplexityRecord> {
        self.records
            .get(&(image_hash.to_string(), fingerprint.to_string()))
    }

    pub fn contains(&self, image_hash: &str, fingerprint: &str) -> bool {
        self.get(image_hash, fingerprint).is_some()
    }

    pub fn is_known_bad(&self, image_hash: &str) -> bool {
        !image_hash.is_empty()
            && self
                .skipped
                .range((image_hash.to_string(), String::new())..)
                .next()
                .is_some_and(|((hash, _), _)| hash == image_hash)
    }

    pub fn records(&self) -> impl Iterator<Item = &ComplexityRecord> {
        self.records.values()
    }

    pub fn skipped(&self) -> impl Iterator<Item = &SkipEntry> {
        self.skipped.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends records durably and updates the in-memory view.
    pub fn append_records(&mut self, records: &[ComplexityRecord]) -> Result<(), CacheError> {
        let mut sink = CacheSink::open(&self.dir)?;
        for r in records {
            sink.push_record(r)?;
            self.records.insert(r.key(), r.clone());
        }
        Ok(())
    }

    pub(crate) fn insert_in_memory(&mut self, record: ComplexityRecord) {
        self.records.insert(record.key(), record);
    }

    pub(crate) fn insert_skip_in_memory(&mut self, entry: SkipEntry) {
        self.skipped.insert(entry.key(), entry);
    }
}

/// Line-at-a-time appender; every record is flushed before the call returns.
pub struct CacheSink {
    metrics: File,
    skipped: File,
    metrics_path: PathBuf,
    skipped_path: PathBuf,
}

impl CacheSink {
    pub fn open(dir: &Path) -> Result<Self, CacheError> {
        let metrics_path = dir.join(METRICS_FILE);
        let skipped_path = dir.join(SKIPPED_FILE);
        let open = |p: &Path| {
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(io_err(p))
        };
        Ok(Self {
            metrics: open(&metrics_path)?,
            skipped: open(&skipped_path)?,
            metrics_path,
            skipped_path,
        })
    }

    pub fn push_record(&mut self, record: &ComplexityRecord) -> Result<(), CacheError> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        self.metrics
            .write_all(&line)
            .and_then(|_| self.metrics.flush())
            .map_err(io_err(&self.metrics_path))
    }

    pub fn push_skip(&mut self, entry: &SkipEntry) -> Result<(), CacheError> {
        let mut line = serde_json::to_vec(entry)?;
        line.push(b'\n');
        self.skipped
            .write_all(&line)
            .and_then(|_| self.skipped.flush())
            .map_err(io_err(&self.skipped_path))
    }
}
