use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use covercx_core::cache::MetricCache;
use covercx_core::config::RunConfig;
use covercx_core::imaging::{encode_png, RgbImage};

fn covercx(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covercx"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn fixture(dir: &Path) {
    for i in 0..4u32 {
        let img = RgbImage::from_fn(20 + i, 18, |x, y| {
            [(x * 13 + i) as u8, (y * 7) as u8, (x ^ y) as u8]
        })
        .unwrap();
        fs::write(dir.join(format!("c{i}.png")), encode_png(&img).unwrap()).unwrap();
    }
    fs::write(dir.join("bad.png"), b"not an image").unwrap();
    fs::write(dir.join("good.txt"), "c0.png\nc1.png\nc2.png\nc3.png\n").unwrap();
    fs::write(
        dir.join("all.txt"),
        "c0.png\nc1.png\nc2.png\nc3.png\nbad.png\n",
    )
    .unwrap();
    let mut meta = String::from("album_id,artist,title,year,raw_genres,image_ref,source\n");
    for i in 0..4 {
        meta.push_str(&format!(
            "a{i},Artist {i},Title {i},{},pop,c{i}.png,MuMu\n",
            2000 + i
        ));
    }
    fs::write(dir.join("meta.csv"), meta).unwrap();
    fs::write(dir.join("genres.csv"), "raw_label,supergenres\npop,Pop\n").unwrap();
    fs::write(
        dir.join("fast.conf"),
        "# quick runs\nmdl = false\nperiod-threshold = 2\nmin_genre_count = 1\n",
    )
    .unwrap();
}

#[test]
fn per_file_errors_are_fatal_only_when_strict() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let relaxed = covercx(
        &[
            "--config",
            "fast.conf",
            "scan",
            "all.txt",
            "--cache",
            "cache",
        ],
        dir.path(),
    );
    assert!(relaxed.status.success());
    assert!(stdout(&relaxed).contains("4 computed"));
    assert!(stdout(&relaxed).contains("1 skipped"));

    let strict = covercx(
        &[
            "--config",
            "fast.conf",
            "scan",
            "all.txt",
            "--cache",
            "cache2",
            "--strict",
        ],
        dir.path(),
    );
    assert_eq!(strict.status.code(), Some(1));
    // the batch still completes before the failure is reported
    assert_eq!(
        MetricCache::open(dir.path().join("cache2")).unwrap().len(),
        4
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    let out = covercx(
        &[
            "--config",
            "fast.conf",
            "--stride",
            "2",
            "scan",
            "good.txt",
            "--cache",
            "cache",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let mut cfg = RunConfig::default();
    cfg.apply_file("mdl = false\nperiod-threshold = 2\nmin_genre_count = 1\nstride = 2\n")
        .unwrap();
    let cache = MetricCache::open(dir.path().join("cache")).unwrap();
    assert!(cache
        .records()
        .all(|r| r.config_fingerprint == cfg.fingerprint()));
}

#[test]
fn bad_config_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    fs::write(dir.path().join("bad.conf"), "colour = blue\n").unwrap();
    let out = covercx(&["--config", "bad.conf", "selftest"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key"));
    let out = covercx(&["--tau", "1.5", "selftest"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn report_needs_every_image_scanned() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    fs::write(dir.path().join("some.txt"), "c0.png\nc1.png\n").unwrap();
    assert!(covercx(
        &[
            "--config",
            "fast.conf",
            "scan",
            "some.txt",
            "--cache",
            "cache"
        ],
        dir.path()
    )
    .status
    .success());
    let report = [
        "--config",
        "fast.conf",
        "report",
        "--metadata",
        "meta.csv",
        "--genre-map",
        "genres.csv",
        "--cache",
        "cache",
        "--out",
        "out",
    ];
    let out = covercx(&report, dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unscanned"));

    assert!(covercx(
        &[
            "--config",
            "fast.conf",
            "scan",
            "good.txt",
            "--cache",
            "cache"
        ],
        dir.path()
    )
    .status
    .success());
    let out = covercx(&report, dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "ec_by_genre.csv",
        "ec_trajectory.csv",
        "metric_over_time.csv",
        "boxplot_stats.csv",
    ] {
        assert!(dir.path().join("out").join(name).exists(), "{name}");
    }
    assert!(!dir.path().join("out/object_distribution.csv").exists());
    let trajectory = fs::read_to_string(dir.path().join("out/ec_trajectory.csv")).unwrap();
    assert_eq!(trajectory.lines().count(), 3);
}

#[test]
fn aggregate_writes_csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path());
    assert!(covercx(
        &[
            "--config",
            "fast.conf",
            "scan",
            "good.txt",
            "--cache",
            "cache"
        ],
        dir.path()
    )
    .status
    .success());
    let out = covercx(
        &[
            "--config",
            "fast.conf",
            "aggregate",
            "--metadata",
            "meta.csv",
            "--genre-map",
            "genres.csv",
            "--cache",
            "cache",
            "--metric",
            "zipc",
            "--by-genre",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("period_start,period_end,genre,n,mean,se,median,q1,q3,iqr")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.contains(",Pop,2,")));

    let bad = covercx(
        &[
            "aggregate",
            "--metadata",
            "meta.csv",
            "--genre-map",
            "genres.csv",
            "--cache",
            "cache",
            "--metric",
            "size",
        ],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = covercx(&["selftest"], dir.path());
    assert!(out.status.success());
    assert!(!stdout(&out).contains("FAIL"));
}
