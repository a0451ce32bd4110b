//! Scan and report over real files on disk.

use std::fs;
use std::path::{Path, PathBuf};

use covercx_core::cache::{content_hash, MetricCache, METRICS_FILE};
use covercx_core::config::RunConfig;
use covercx_core::corpus::{load_genre_map, GenreMap};
use covercx_core::imaging::{encode_png, RgbImage};
use covercx_core::report::{report, ReportInputs, BOXPLOT_STATS, EC_BY_GENRE};
use covercx_core::scan::scan;

fn config(workers: usize) -> RunConfig {
    RunConfig {
        workers,
        period_threshold: 4,
        min_genre_count: 2,
        mdl_patch_sizes: vec![16],
        mdl_restarts: 2,
        ..RunConfig::default()
    }
}

fn write_covers(dir: &Path, n: usize) -> Vec<PathBuf> {
    (0..n)
        .map(|i| {
            let img = RgbImage::from_fn(32 + (i as u32 % 5) * 7, 30, |x, y| {
                let v = (x * (i as u32 + 3) + y * y) % 256;
                [v as u8, (v / 2) as u8, ((x ^ y) * 11 % 256) as u8]
            })
            .unwrap();
            let path = dir.join(format!("cover{i:02}.png"));
            fs::write(&path, encode_png(&img).unwrap()).unwrap();
            path
        })
        .collect()
}

fn metadata(n: usize) -> String {
    let mut text = String::from("album_id,artist,title,year,raw_genres,image_ref,source\n");
    for i in 0..n {
        let genre = if i % 3 == 0 {
            "pop|rock"
        } else if i % 3 == 1 {
            "rock"
        } else {
            "jazz"
        };
        text.push_str(&format!(
            "id{i},Artist {i},Title {i},{},{genre},covers/cover{i:02}.png,MuMu\n",
            1990 + i as i32 / 2
        ));
    }
    text
}

fn genre_map() -> GenreMap {
    load_genre_map("raw_label,supergenres\npop,Pop\nrock,Rock\njazz,Jazz & Blues\n".as_bytes())
        .unwrap()
}

fn run(root: &Path, workers: usize) -> (Vec<u8>, Vec<(String, Vec<u8>)>) {
    let covers = root.join("covers");
    let cache_dir = root.join(format!("cache{workers}"));
    let out = root.join(format!("out{workers}"));
    let paths: Vec<PathBuf> = (0..12)
        .map(|i| covers.join(format!("cover{i:02}.png")))
        .collect();
    let cfg = config(workers);
    let mut cache = MetricCache::open(&cache_dir).unwrap();
    let summary = scan(&paths, &cfg, &mut cache).unwrap();
    assert!(summary.skipped.is_empty());
    let meta = metadata(12);
    let gm = genre_map();
    let inputs = ReportInputs {
        metadata_csv: meta.as_bytes(),
        base_dir: root,
        genre_map: &gm,
        imputation: &[],
        detections: None,
    };
    let result = report(&inputs, &cache, &cfg, &out).unwrap();
    assert_eq!(result.corpus.joined, 12);
    let files = result
        .files
        .iter()
        .map(|f| {
            (
                f.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(f).unwrap(),
            )
        })
        .collect();
    (fs::read(cache_dir.join(METRICS_FILE)).unwrap(), files)
}

#[test]
fn worker_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("covers")).unwrap();
    write_covers(&dir.path().join("covers"), 12);
    let (cache1, files1) = run(dir.path(), 1);
    let (cache8, files8) = run(dir.path(), 8);
    assert_eq!(cache1, cache8);
    assert_eq!(files1, files8);
    let names: Vec<&str> = files1.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&BOXPLOT_STATS) && names.contains(&EC_BY_GENRE));
}

#[test]
fn cached_hashes_match_files() {
    let dir = tempfile::tempdir().unwrap();
    let paths = write_covers(dir.path(), 6);
    let cfg = config(3);
    let mut cache = MetricCache::open(dir.path().join("cache")).unwrap();
    scan(&paths, &cfg, &mut cache).unwrap();
    let mut expected: Vec<String> = paths
        .iter()
        .map(|p| content_hash(&fs::read(p).unwrap()))
        .collect();
    expected.sort();
    let mut cached: Vec<String> = cache.records().map(|r| r.image_hash.clone()).collect();
    cached.sort();
    assert_eq!(cached, expected);
    assert!(cache.records().all(|r| r.mdlc_bits.is_some()));
}

#[test]
fn changing_metric_config_rescans() {
    let dir = tempfile::tempdir().unwrap();
    let paths = write_covers(dir.path(), 3);
    let mut cache = MetricCache::open(dir.path().join("cache")).unwrap();
    let mut cfg = config(2);
    cfg.mdl = false;
    assert_eq!(scan(&paths, &cfg, &mut cache).unwrap().computed, 3);
    assert_eq!(scan(&paths, &cfg, &mut cache).unwrap().computed, 0);
    cfg.stride = 2;
    assert_eq!(scan(&paths, &cfg, &mut cache).unwrap().computed, 3);
    assert_eq!(cache.len(), 6);
}
