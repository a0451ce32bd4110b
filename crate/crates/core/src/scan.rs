//! Parallel metric scan over a manifest of image files.
//!
//! Workers read, hash and score images independently; a single writer
//! thread appends results to the cache as they arrive, so an interrupted
//! scan loses at most the images in flight. The cache is compacted (sorted
//! by key) once the batch finishes, which makes its bytes independent of
//! worker count and completion order.

use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use thiserror::Error;

use crate::cache::{
    content_hash, CacheError, CacheSink, ComplexityRecord, MetricCache, SkipEntry, TOOL_VERSION,
};
use crate::config::{ResizePolicy, RunConfig};
use crate::imaging::{decode_image, resize, to_grayscale, ImagingError, RgbImage};
use crate::mdl::{mdlc, MdlError, MdlcScore};
use crate::ordinal::{ec_point_with_stride, EcPoint, OrdinalError};
use crate::zipc::zipc_with_level;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Ordinal(#[from] OrdinalError),
    #[error(transparent)]
    Mdl(#[from] MdlError),
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageMetrics {
    pub ec: EcPoint,
    pub zipc: f64,
    pub mdlc: Option<MdlcScore>,
}

fn apply_resize(img: &RgbImage, policy: ResizePolicy) -> Result<RgbImage, ImagingError> {
    match policy {
        ResizePolicy::Original => Ok(img.clone()),
        ResizePolicy::Fixed { width, height } => resize(img, width, height),
    }
}

/// All image metrics enabled by `cfg`.
pub fn compute_metrics(img: &RgbImage, cfg: &RunConfig) -> Result<ImageMetrics, MetricError> {
    let gray = match cfg.ec_resize {
        ResizePolicy::Original => to_grayscale(img),
        policy => to_grayscale(&apply_resize(img, policy)?),
    };
    let ec = ec_point_with_stride(&gray, cfg.stride)?;
    let zipc = match cfg.zipc_resize {
        ResizePolicy::Original => zipc_with_level(img, cfg.zip_level),
        policy => zipc_with_level(&apply_resize(img, policy)?, cfg.zip_level),
    }
    .ratio();
    let mdlc = if cfg.mdl {
        Some(mdlc(img, &cfg.mdl_config())?)
    } else {
        None
    };
    Ok(ImageMetrics { ec, zipc, mdlc })
}

/// Decodes and scores one encoded image, producing its cache record.
pub fn score_bytes(bytes: &[u8], cfg: &RunConfig) -> Result<ComplexityRecord, MetricError> {
    let img = decode_image(bytes)?;
    let metrics = compute_metrics(&img, cfg)?;
    Ok(ComplexityRecord {
        image_hash: content_hash(bytes),
        h: metrics.ec.h,
        c: metrics.ec.c,
        zipc: metrics.zipc,
        mdlc_bits: metrics.mdlc.map(|m| m.bits),
        object_count: None,
        tool_version: TOOL_VERSION.to_string(),
        config_fingerprint: cfg.fingerprint(),
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScanSummary {
    pub computed: usize,
    pub cached: usize,
    /// Files whose content was already recorded as unprocessable.
    pub known_bad: usize,
    /// New per-file failures from this run.
    pub skipped: Vec<SkipEntry>,
}

enum Outcome {
    Cached,
    KnownBad,
    Computed(ComplexityRecord),
    Skipped(SkipEntry),
}

fn process(path: &Path, cfg: &RunConfig, fingerprint: &str, cache: &MetricCache) -> Outcome {
    let shown = path.display().to_string();
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => {
            return Outcome::Skipped(SkipEntry {
                image_hash: None,
                path: shown,
                error: e.to_string(),
            })
        }
    };
    let hash = content_hash(&bytes);
    if cache.contains(&hash, fingerprint) {
        return Outcome::Cached;
    }
    if cache.is_known_bad(&hash) {
        return Outcome::KnownBad;
    }
    match score_bytes(&bytes, cfg) {
        Ok(record) => Outcome::Computed(record),
        Err(e) => Outcome::Skipped(SkipEntry {
            image_hash: Some(hash),
            path: shown,
            error: e.to_string(),
        }),
    }
}

/// Scores every manifest entry missing from the cache under the current
/// fingerprint. Per-file failures are recorded and never abort the batch.
pub fn scan(
    paths: &[PathBuf],
    cfg: &RunConfig,
    cache: &mut MetricCache,
) -> Result<ScanSummary, ScanError> {
    let fingerprint = cfg.fingerprint();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()?;
    let mut sink = CacheSink::open(cache.dir())?;
    let (tx, rx) = mpsc::channel::<Outcome>();

    let shared: &MetricCache = cache;
    let (summary, fresh, failures) = std::thread::scope(|scope| {
        let writer = scope.spawn(move || -> Result<_, CacheError> {
            let mut summary = ScanSummary::default();
            let mut fresh = Vec::new();
            let mut failures = Vec::new();
            for outcome in rx {
                match outcome {
                    Outcome::Cached => summary.cached += 1,
                    Outcome::KnownBad => summary.known_bad += 1,
                    Outcome::Computed(record) => {
                        sink.push_record(&record)?;
                        summary.computed += 1;
                        fresh.push(record);
                    }
                    Outcome::Skipped(entry) => {
                        log::warn!("skipping {}: {}", entry.path, entry.error);
                        sink.push_skip(&entry)?;
                        failures.push(entry);
                    }
                }
            }
            Ok((summary, fresh, failures))
        });
        pool.install(|| {
            paths.par_iter().for_each_with(tx, |tx, path| {
                // a closed channel means the writer failed; its error surfaces on join
                let _ = tx.send(process(path, cfg, &fingerprint, shared));
            });
        });
        writer.join().expect("cache writer panicked")
    })?;

    for record in fresh {
        cache.insert_in_memory(record);
    }
    let mut summary = summary;
    for entry in failures {
        cache.insert_skip_in_memory(entry.clone());
        summary.skipped.push(entry);
    }
    summary.skipped.sort_by(|a, b| a.path.cmp(&b.path));
    cache.compact()?;
    Ok(summary)
}

/// Reads a manifest: one image path per line, `#` comments and blank lines
/// ignored, relative paths resolved against the manifest's directory.
pub fn read_manifest(path: &Path) -> std::io::Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let p = PathBuf::from(l);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        })
        .collect())
}
