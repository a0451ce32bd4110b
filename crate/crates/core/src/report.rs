//! Joins album metadata with cached metrics and writes the report CSVs.
//!
//! | file | one row per | columns |
//! |------|-------------|---------|
//! | `ec_by_genre.csv` | genre | `genre,n,mean_h,se_h,mean_c,se_c` |
//! | `ec_trajectory.csv` | period | `period_start,period_end,n,mean_h,se_h,mean_c,se_c` |
//! | `metric_over_time.csv` | period x genre | `period_start,period_end,genre,n` then `<m>_mean,<m>_se` for m in h, c, zipc, mdlc |
//! | `boxplot_stats.csv` | period x (ALL or genre) | `period_start,period_end,genre,n` then `<m>_mean,<m>_se,<m>_median,<m>_q1,<m>_q3,<m>_iqr` |
//! | `object_distribution.csv` | (ALL or genre) x class | `genre,class,count,proportion` |
//! | `objects_over_time.csv` | period x (ALL or genre) | `period_start,period_end,genre,n,mean_objects,se_objects,median_objects` |
//!
//! Genre groups below `min_genre_count` albums are left out of the per-period
//! files. Rows are sorted by group key. The object files are only written
//! when detections are supplied.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::cache::{content_hash, ComplexityRecord, MetricCache};
use crate::config::RunConfig;
use crate::corpus::{
    aggregate, apply_imputation, bin_periods, dedupe, ingest_metadata, map_genres, trajectory,
    AggregateStats, AlbumRecord, CleaningReport, CorpusError, EcObservation, GenreMap, GenreReport,
    Imputation, Observation, Period, SourcePriority, Summary, Supergenre,
};
use crate::detection::{class_distribution, summarize, DetectionRecord, SemanticSummary};

pub const EC_BY_GENRE: &str = "ec_by_genre.csv";
pub const EC_TRAJECTORY: &str = "ec_trajectory.csv";
pub const METRIC_OVER_TIME: &str = "metric_over_time.csv";
pub const BOXPLOT_STATS: &str = "boxplot_stats.csv";
pub const OBJECT_DISTRIBUTION: &str = "object_distribution.csv";
pub const OBJECTS_OVER_TIME: &str = "objects_over_time.csv";

/// Label of the all-genres group.
pub const ALL_GENRES: &str = "ALL";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{count} albums reference unscanned images (first: {})", .first.join(", "))]
    MissingMetrics { count: usize, first: Vec<String> },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Cached metrics a report can be computed over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    H,
    C,
    Zipc,
    Mdlc,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::H, Metric::C, Metric::Zipc, Metric::Mdlc];

    pub fn name(self) -> &'static str {
        match self {
            Metric::H => "h",
            Metric::C => "c",
            Metric::Zipc => "zipc",
            Metric::Mdlc => "mdlc",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
    }

    pub fn value(self, r: &ComplexityRecord) -> Option<f64> {
        match self {
            Metric::H => Some(r.h),
            Metric::C => Some(r.c),
            Metric::Zipc => Some(r.zipc),
            Metric::Mdlc => r.mdlc_bits,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JoinedAlbum {
    pub album: AlbumRecord,
    pub image_hash: String,
    pub metrics: ComplexityRecord,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub cleaning: CleaningReport,
    pub albums_after_dedupe: usize,
    pub genres: GenreReport,
    pub imputed: usize,
    /// Covers whose file could not be read when resolving the content hash.
    pub unreadable_images: Vec<String>,
    /// Covers the scan recorded as undecodable.
    pub corrupt_images: Vec<String>,
    pub joined: usize,
    pub periods: Vec<Period>,
}

/// Metadata joined to metrics and binned into periods.
#[derive(Clone, Debug, Default)]
pub struct JoinedCorpus {
    pub albums: Vec<JoinedAlbum>,
    pub periods: Vec<Period>,
    pub summary: CorpusSummary,
}

fn resolve(base: &Path, image_ref: &str) -> PathBuf {
    let p = PathBuf::from(image_ref);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl JoinedCorpus {
    /// Ingests, deduplicates and labels the metadata, then joins every album
    /// to its cached record under the current fingerprint. Relative image
    /// references resolve against `base_dir`.
    pub fn build(
        metadata_csv: &[u8],
        base_dir: &Path,
        genre_map: &GenreMap,
        imputation: &[Imputation],
        cache: &MetricCache,
        cfg: &RunConfig,
    ) -> Result<JoinedCorpus, ReportError> {
        let (records, cleaning) = ingest_metadata(metadata_csv)?;
        let mut records = dedupe(records, &SourcePriority::default());
        let mut summary = CorpusSummary {
            cleaning,
            albums_after_dedupe: records.len(),
            ..CorpusSummary::default()
        };
        summary.genres = map_genres(&mut records, genre_map);
        summary.imputed = apply_imputation(&mut records, imputation);

        let fingerprint = cfg.fingerprint();
        let mut albums = Vec::with_capacity(records.len());
        let mut missing = Vec::new();
        for album in records {
            let hash = match &album.image_hash {
                Some(h) => h.clone(),
                None => match fs::read(resolve(base_dir, &album.image_ref)) {
                    Ok(bytes) => content_hash(&bytes),
                    Err(e) => {
                        log::warn!("{}: cannot read {}: {e}", album.album_id, album.image_ref);
                        summary.unreadable_images.push(album.album_id);
                        continue;
                    }
                },
            };
            match cache.get(&hash, &fingerprint) {
                Some(metrics) => albums.push(JoinedAlbum {
                    album,
                    image_hash: hash,
                    metrics: metrics.clone(),
                }),
                None if cache.is_known_bad(&hash) => summary.corrupt_images.push(album.album_id),
                None => missing.push(album.album_id),
            }
        }
        if !missing.is_empty() {
            return Err(ReportError::MissingMetrics {
                count: missing.len(),
                first: missing.into_iter().take(5).collect(),
            });
        }
        let periods = if albums.is_empty() {
            Vec::new()
        } else {
            let records: Vec<AlbumRecord> = albums.iter().map(|a| a.album.clone()).collect();
            bin_periods(&records, cfg.period_threshold)?
        };
        summary.joined = albums.len();
        summary.periods = periods.clone();
        Ok(JoinedCorpus {
            albums,
            periods,
            summary,
        })
    }

    pub fn observations(&self, metric: Metric) -> Vec<Observation> {
        self.albums
            .iter()
            .filter_map(|a| {
                metric.value(&a.metrics).map(|value| Observation {
                    year: a.album.year,
                    genres: a.album.supergenres.clone(),
                    value,
                })
            })
            .collect()
    }

    pub fn ec_observations(&self) -> Vec<EcObservation> {
        self.albums
            .iter()
            .map(|a| EcObservation {
                year: a.album.year,
                h: a.metrics.h,
                c: a.metrics.c,
            })
            .collect()
    }

    /// Summaries of one metric per period, or per period and genre.
    pub fn aggregate(
        &self,
        metric: Metric,
        by_genre: bool,
        cfg: &RunConfig,
    ) -> Vec<AggregateStats> {
        aggregate(
            &self.observations(metric),
            &self.periods,
            by_genre,
            cfg.min_genre_count,
        )
    }
}

type GroupKey = (i32, i32, String);

fn group_key(s: &AggregateStats) -> GroupKey {
    (
        s.period.start_year,
        s.period.end_year,
        s.genre_label().to_string(),
    )
}

fn fmt_f(v: f64) -> String {
    format!("{v}")
}

struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvOut {
    fn create(dir: &Path, name: &str, header: &[String]) -> Result<Self, ReportError> {
        let path = dir.join(name);
        let mut writer = csv::Writer::from_path(&path)?;
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    fn row(&mut self, fields: Vec<String>) -> Result<(), ReportError> {
        self.writer.write_record(&fields)?;
        Ok(())
    }

    fn finish(mut self) -> Result<PathBuf, ReportError> {
        self.writer.flush().map_err(|source| ReportError::Io {
            path: self.path.clone(),
            source,
        })?;
        Ok(self.path)
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Every metric's summary for each group, keyed and sorted by group.
fn metric_table(
    corpus: &JoinedCorpus,
    by_genre: bool,
    cfg: &RunConfig,
) -> BTreeMap<GroupKey, (usize, Vec<Option<Summary>>)> {
    let mut table: BTreeMap<GroupKey, (usize, Vec<Option<Summary>>)> = BTreeMap::new();
    for (mi, metric) in Metric::ALL.into_iter().enumerate() {
        for stats in corpus.aggregate(metric, by_genre, cfg) {
            let entry = table
                .entry(group_key(&stats))
                .or_insert_with(|| (0, vec![None; Metric::ALL.len()]));
            entry.0 = entry.0.max(stats.summary.n);
            entry.1[mi] = Some(stats.summary);
        }
    }
    table
}

fn optional(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReportSummary {
    pub corpus: CorpusSummary,
    /// Joined albums without a detection record.
    pub albums_without_detections: usize,
    pub files: Vec<PathBuf>,
}

/// Writes the report CSVs for `corpus` into `out_dir`.
pub fn write_reports(
    corpus: &JoinedCorpus,
    detections: Option<&[DetectionRecord]>,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<ReportSummary, ReportError> {
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();

    // entropy-complexity plane per genre, all periods pooled
    let mut out = CsvOut::create(
        out_dir,
        EC_BY_GENRE,
        &strings(&["genre", "n", "mean_h", "se_h", "mean_c", "se_c"]),
    )?;
    let mut by_genre: BTreeMap<&'static str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for a in &corpus.albums {
        for g in &a.album.supergenres {
            let entry = by_genre.entry(g.name()).or_default();
            entry.0.push(a.metrics.h);
            entry.1.push(a.metrics.c);
        }
    }
    for (genre, (hs, cs)) in &by_genre {
        let (h, c) = (
            Summary::from_values(hs).expect("non-empty"),
            Summary::from_values(cs).expect("non-empty"),
        );
        out.row(vec![
            genre.to_string(),
            h.n.to_string(),
            fmt_f(h.mean),
            fmt_f(h.standard_error),
            fmt_f(c.mean),
            fmt_f(c.standard_error),
        ])?;
    }
    files.push(out.finish()?);

    let mut out = CsvOut::create(
        out_dir,
        EC_TRAJECTORY,
        &strings(&[
            "period_start",
            "period_end",
            "n",
            "mean_h",
            "se_h",
            "mean_c",
            "se_c",
        ]),
    )?;
    for p in trajectory(&corpus.ec_observations(), &corpus.periods) {
        out.row(vec![
            p.period.start_year.to_string(),
            p.period.end_year.to_string(),
            p.n.to_string(),
            fmt_f(p.mean_h),
            fmt_f(p.se_h),
            fmt_f(p.mean_c),
            fmt_f(p.se_c),
        ])?;
    }
    files.push(out.finish()?);

    let mut header = strings(&["period_start", "period_end", "genre", "n"]);
    for m in Metric::ALL {
        header.push(format!("{}_mean", m.name()));
        header.push(format!("{}_se", m.name()));
    }
    let mut out = CsvOut::create(out_dir, METRIC_OVER_TIME, &header)?;
    for ((start, end, genre), (n, summaries)) in metric_table(corpus, true, cfg) {
        let mut row = vec![start.to_string(), end.to_string(), genre, n.to_string()];
        for s in &summaries {
            row.push(optional(s.map(|s| s.mean)));
            row.push(optional(s.map(|s| s.standard_error)));
        }
        out.row(row)?;
    }
    files.push(out.finish()?);

    let mut header = strings(&["period_start", "period_end", "genre", "n"]);
    for m in Metric::ALL {
        for stat in ["mean", "se", "median", "q1", "q3", "iqr"] {
            header.push(format!("{}_{stat}", m.name()));
        }
    }
    let mut out = CsvOut::create(out_dir, BOXPLOT_STATS, &header)?;
    let mut table = metric_table(corpus, false, cfg);
    table.extend(metric_table(corpus, true, cfg));
    for ((start, end, genre), (n, summaries)) in table {
        let mut row = vec![start.to_string(), end.to_string(), genre, n.to_string()];
        for s in &summaries {
            row.push(optional(s.map(|s| s.mean)));
            row.push(optional(s.map(|s| s.standard_error)));
            row.push(optional(s.map(|s| s.median)));
            row.push(optional(s.map(|s| s.q1)));
            row.push(optional(s.map(|s| s.q3)));
            row.push(optional(s.map(|s| s.iqr)));
        }
        out.row(row)?;
    }
    files.push(out.finish()?);

    let mut albums_without_detections = 0;
    if let Some(detections) = detections {
        let by_image: HashMap<&str, &DetectionRecord> = detections
            .iter()
            .map(|d| (d.image_id.as_str(), d))
            .collect();
        let mut semantic: Vec<(&JoinedAlbum, SemanticSummary)> = Vec::new();
        for a in &corpus.albums {
            match by_image.get(a.image_hash.as_str()) {
                Some(rec) => semantic.push((a, summarize(rec, cfg.tau))),
                None => albums_without_detections += 1,
            }
        }
        files.extend(write_object_reports(corpus, &semantic, cfg, out_dir)?);
    }

    Ok(ReportSummary {
        corpus: corpus.summary.clone(),
        albums_without_detections,
        files,
    })
}

fn write_object_reports(
    corpus: &JoinedCorpus,
    semantic: &[(&JoinedAlbum, SemanticSummary)],
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    let mut files = Vec::new();
    let mut out = CsvOut::create(
        out_dir,
        OBJECT_DISTRIBUTION,
        &strings(&["genre", "class", "count", "proportion"]),
    )?;
    let mut groups: BTreeMap<String, Vec<&SemanticSummary>> = BTreeMap::new();
    for (album, s) in semantic {
        groups.entry(ALL_GENRES.to_string()).or_default().push(s);
        for g in &album.album.supergenres {
            groups.entry(g.name().to_string()).or_default().push(s);
        }
    }
    for (genre, summaries) in &groups {
        for (class, (count, share)) in
            class_distribution(summaries.iter().copied(), cfg.class_counting)
        {
            out.row(vec![genre.clone(), class, count.to_string(), fmt_f(share)])?;
        }
    }
    files.push(out.finish()?);

    let observations: Vec<Observation> = semantic
        .iter()
        .map(|(a, s)| Observation {
            year: a.album.year,
            genres: a.album.supergenres.clone(),
            value: s.object_count as f64,
        })
        .collect();
    let mut out = CsvOut::create(
        out_dir,
        OBJECTS_OVER_TIME,
        &strings(&[
            "period_start",
            "period_end",
            "genre",
            "n",
            "mean_objects",
            "se_objects",
            "median_objects",
        ]),
    )?;
    let mut rows = aggregate(&observations, &corpus.periods, false, cfg.min_genre_count);
    rows.extend(aggregate(
        &observations,
        &corpus.periods,
        true,
        cfg.min_genre_count,
    ));
    rows.sort_by_key(group_key);
    for r in rows {
        out.row(vec![
            r.period.start_year.to_string(),
            r.period.end_year.to_string(),
            r.genre_label().to_string(),
            r.summary.n.to_string(),
            fmt_f(r.summary.mean),
            fmt_f(r.summary.standard_error),
            fmt_f(r.summary.median),
        ])?;
    }
    files.push(out.finish()?);
    Ok(files)
}

/// Writes one metric's aggregate table (the `aggregate` subcommand).
pub fn write_aggregate_csv<W: std::io::Write>(
    rows: &[AggregateStats],
    writer: W,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "period_start",
        "period_end",
        "genre",
        "n",
        "mean",
        "se",
        "median",
        "q1",
        "q3",
        "iqr",
    ])?;
    for r in rows {
        let s = &r.summary;
        w.write_record([
            r.period.start_year.to_string(),
            r.period.end_year.to_string(),
            r.genre_label().to_string(),
            s.n.to_string(),
            fmt_f(s.mean),
            fmt_f(s.standard_error),
            fmt_f(s.median),
            fmt_f(s.q1),
            fmt_f(s.q3),
            fmt_f(s.iqr),
        ])?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: PathBuf::from("<aggregate output>"),
        source,
    })
}

/// Inputs of a full report run, already loaded.
pub struct ReportInputs<'a> {
    pub metadata_csv: &'a [u8],
    pub base_dir: &'a Path,
    pub genre_map: &'a GenreMap,
    pub imputation: &'a [Imputation],
    pub detections: Option<&'a [DetectionRecord]>,
}

/// Builds the joined corpus and writes every report file, plus
/// `report_summary.json` with cleaning and join counts.
pub fn report(
    inputs: &ReportInputs<'_>,
    cache: &MetricCache,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<ReportSummary, ReportError> {
    let corpus = JoinedCorpus::build(
        inputs.metadata_csv,
        inputs.base_dir,
        inputs.genre_map,
        inputs.imputation,
        cache,
        cfg,
    )?;
    let summary = write_reports(&corpus, inputs.detections, cfg, out_dir)?;
    let path = out_dir.join("report_summary.json");
    fs::write(&path, serde_json::to_vec_pretty(&summary)?)
        .map_err(|source| ReportError::Io { path, source })?;
    Ok(summary)
}

/// Genres present in a corpus, in name order.
pub fn genres_present(corpus: &JoinedCorpus) -> BTreeSet<Supergenre> {
    corpus
        .albums
        .iter()
        .flat_map(|a| a.album.supergenres.iter().copied())
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DetectionIngest {
    pub updated: usize,
    /// Detection records whose image has no metrics under the current fingerprint.
    pub unmatched: Vec<String>,
}

/// Stores post-threshold object counts on the cached records they match.
pub fn ingest_detections(
    cache: &mut MetricCache,
    detections: &[DetectionRecord],
    cfg: &RunConfig,
) -> Result<DetectionIngest, crate::cache::CacheError> {
    let fingerprint = cfg.fingerprint();
    let mut out = DetectionIngest::default();
    let mut updates = Vec::new();
    for rec in detections {
        match cache.get(&rec.image_id, &fingerprint) {
            Some(existing) => {
                let mut record = existing.clone();
                record.object_count = Some(summarize(rec, cfg.tau).object_count);
                updates.push(record);
            }
            None => out.unmatched.push(rec.image_id.clone()),
        }
    }
    cache.append_records(&updates)?;
    cache.compact()?;
    out.updated = updates.len();
    Ok(out)
}
