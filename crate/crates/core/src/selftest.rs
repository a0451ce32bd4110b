//! Quick built-in checks of each metric and of the corpus arithmetic, run by
//! the `selftest` subcommand.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{bin_year_counts, Summary};
use crate::detection::{summarize, Detection, DetectionRecord, DEFAULT_TAU};
use crate::imaging::{to_grayscale, GrayImage, RgbImage};
use crate::mdl::{mdlc, MdlConfig};
use crate::ordinal::{ec_point, ordinal_pattern};
use crate::zipc::zipc;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

fn noise(side: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::from_fn(side, side, |_, _| rng.gen()).expect("positive size")
}

fn pattern_anchors() -> CheckResult {
    let got = [
        ordinal_pattern([1, 2, 3, 4]),
        ordinal_pattern([7, 7, 7, 7]),
        ordinal_pattern([4, 3, 2, 1]),
    ];
    check(
        "ordinal pattern anchors",
        got == [0, 0, 23],
        format!("{got:?}"),
    )
}

fn ec_constant() -> CheckResult {
    let img = GrayImage::new(32, 32, vec![128; 32 * 32]).expect("valid");
    let p = ec_point(&img).expect("large enough");
    check(
        "constant image at the origin",
        p.h.abs() <= 1e-12 && p.c.abs() <= 1e-12,
        format!("H={} C={}", p.h, p.c),
    )
}

fn ec_noise() -> CheckResult {
    let p = ec_point(&to_grayscale(&noise(256, 1))).expect("large enough");
    check(
        "noise has high entropy and low complexity",
        p.h >= 0.99 && p.c <= 0.05,
        format!("H={} C={}", p.h, p.c),
    )
}

fn zipc_anchors() -> CheckResult {
    let constant = zipc(&RgbImage::filled(256, 256, [90, 20, 200]).expect("valid")).ratio();
    let random = zipc(&noise(256, 2)).ratio();
    let single = zipc(&RgbImage::filled(1, 1, [0, 0, 0]).expect("valid")).ratio();
    check(
        "compression ratio anchors",
        constant <= 0.05 && random >= 0.95 && single > 1.0,
        format!("constant={constant} noise={random} 1x1={single}"),
    )
}

fn mdl_checkerboard() -> CheckResult {
    let img = RgbImage::from_fn(224, 224, |x, y| {
        if (x / 16 + y / 16) % 2 == 0 {
            [230, 40, 40]
        } else {
            [20, 60, 200]
        }
    })
    .expect("valid");
    let cfg = MdlConfig {
        patch_sizes: vec![16],
        ..MdlConfig::default()
    };
    match mdlc(&img, &cfg) {
        Ok(score) => {
            let k = score.per_level[&16].k;
            check(
                "two-colour grid selects two clusters",
                k == 2,
                format!("K={k}"),
            )
        }
        Err(e) => check("two-colour grid selects two clusters", false, e.to_string()),
    }
}

fn binning_example() -> CheckResult {
    let counts = BTreeMap::from([(1950, 1000), (1951, 1500), (1952, 800), (1953, 2900)]);
    let got: Vec<(i32, i32, usize)> = bin_year_counts(&counts, 3000)
        .map(|ps| {
            ps.iter()
                .map(|p| (p.start_year, p.end_year, p.album_count))
                .collect()
        })
        .unwrap_or_default();
    check(
        "period binning example",
        got == [(1950, 1952, 3300), (1953, 1953, 2900)],
        format!("{got:?}"),
    )
}

fn summary_example() -> CheckResult {
    let s = Summary::from_values(&[1.0, 2.0, 3.0]).expect("non-empty");
    let ok = (s.mean - 2.0).abs() < 1e-12
        && (s.standard_error - 1.0 / 3f64.sqrt()).abs() < 1e-12
        && (s.q1 - 1.5).abs() < 1e-12
        && (s.q3 - 2.5).abs() < 1e-12
        && (s.iqr - 1.0).abs() < 1e-12;
    check(
        "summary statistics of [1, 2, 3]",
        ok,
        format!(
            "mean={} se={} q1={} q3={}",
            s.mean, s.standard_error, s.q1, s.q3
        ),
    )
}

fn detection_threshold() -> CheckResult {
    let det = |confidence| Detection {
        class_name: "person".into(),
        confidence,
        bbox: None,
    };
    let rec = DetectionRecord {
        image_id: "x".into(),
        detections: vec![det(0.9), det(0.25), det(0.2499)],
    };
    let n = summarize(&rec, DEFAULT_TAU).object_count;
    check(
        "detection threshold is inclusive",
        n == 2,
        format!("count={n}"),
    )
}

/// Runs every check in a fixed order.
pub fn run() -> Vec<CheckResult> {
    vec![
        pattern_anchors(),
        ec_constant(),
        ec_noise(),
        zipc_anchors(),
        mdl_checkerboard(),
        binning_example(),
        summary_example(),
        detection_threshold(),
    ]
}
