//! Library invariants checked against brute-force oracles.

use std::collections::{BTreeMap, BTreeSet};

use covercx_core::corpus::{
    aggregate, apply_imputation, bin_periods, AlbumRecord, Imputation, Observation, Source,
    Summary, Supergenre,
};
use covercx_core::detection::{
    class_distribution, summarize, ClassCounting, Detection, DetectionRecord, COCO_CLASSES,
};
use covercx_core::imaging::{resize, to_grayscale, to_raw_bitmap, GrayImage, RgbImage};
use covercx_core::mdl::{mdlc, model_cost, MdlConfig};
use covercx_core::ordinal::{ec_point, pattern_distribution, OrdinalDistribution, PATTERN_COUNT};
use covercx_core::zipc::zipc;
use proptest::prelude::*;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in permutations(n - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|r| if r >= first { r + 1 } else { r }));
            out.push(p);
        }
    }
    out
}

fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

/// (H, C) by listing windows, ranking each against every permutation and
/// evaluating Jensen-Shannon through entropies.
fn ec_oracle(width: usize, height: usize, px: &[u8]) -> (f64, f64) {
    let perms = permutations(4);
    let mut counts = vec![0usize; perms.len()];
    for y in 0..height - 1 {
        for x in 0..width - 1 {
            let w = [
                px[y * width + x],
                px[y * width + x + 1],
                px[(y + 1) * width + x],
                px[(y + 1) * width + x + 1],
            ];
            let ranks: Vec<usize> = (0..4)
                .map(|i| {
                    (0..4)
                        .filter(|&j| w[j] < w[i] || (w[j] == w[i] && j < i))
                        .count()
                })
                .collect();
            counts[perms.iter().position(|p| *p == ranks).unwrap()] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let n = perms.len() as f64;
    let u = vec![1.0 / n; perms.len()];
    let h = shannon(&p) / n.ln();
    let js = |a: &[f64]| {
        let mid: Vec<f64> = a.iter().zip(&u).map(|(x, y)| (x + y) / 2.0).collect();
        shannon(&mid) - shannon(a) / 2.0 - shannon(&u) / 2.0
    };
    let mut delta = vec![0.0; perms.len()];
    delta[0] = 1.0;
    (h, h * js(&p) / js(&delta))
}

fn arb_gray(max_side: u32, max_value: u8) -> impl Strategy<Value = GrayImage> {
    (2..=max_side, 2..=max_side).prop_flat_map(move |(w, h)| {
        proptest::collection::vec(0..=max_value, (w * h) as usize)
            .prop_map(move |px| GrayImage::new(w, h, px).unwrap())
    })
}

fn arb_rgb(max_side: u32) -> impl Strategy<Value = RgbImage> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<[u8; 3]>(), (w * h) as usize)
            .prop_map(move |px| RgbImage::new(w, h, px).unwrap())
    })
}

proptest! {
    #[test]
    fn ec_is_bounded(img in arb_gray(24, 255)) {
        let p = ec_point(&img).unwrap();
        prop_assert!((0.0..=1.0).contains(&p.h));
        prop_assert!((0.0..=1.0).contains(&p.c));
    }

    #[test]
    fn ec_matches_oracle_on_small_images(img in arb_gray(4, 2)) {
        let p = ec_point(&img).unwrap();
        let (h, c) = ec_oracle(img.width() as usize, img.height() as usize, img.pixels());
        prop_assert!((p.h - h).abs() <= 1e-12, "H {} vs {}", p.h, h);
        prop_assert!((p.c - c).abs() <= 1e-12, "C {} vs {}", p.c, c);
    }

    #[test]
    fn increasing_maps_keep_distribution(
        img in arb_gray(20, 127),
        offset in 0u8..=1,
        steps in proptest::collection::vec(1u8..=2, 127),
    ) {
        let mut lut = [0u8; 128];
        lut[0] = offset;
        for i in 1..128 {
            lut[i] = lut[i - 1] + steps[i - 1];
        }
        let mapped = img.map(|v| lut[v as usize]);
        prop_assert_eq!(pattern_distribution(&img).unwrap(), pattern_distribution(&mapped).unwrap());
    }

    #[test]
    fn degenerate_or_uniform_distribution_has_zero_complexity(k in 0usize..PATTERN_COUNT, n in 1u64..1000) {
        let mut counts = [0u64; PATTERN_COUNT];
        counts[k] = n;
        let single = OrdinalDistribution::from_counts(counts).unwrap();
        prop_assert_eq!(covercx_core::ordinal::statistical_complexity(&single), 0.0);
        let uniform = OrdinalDistribution::from_counts([n; PATTERN_COUNT]).unwrap();
        prop_assert!(covercx_core::ordinal::statistical_complexity(&uniform).abs() <= 1e-15);
    }

    #[test]
    fn raw_bitmap_length(img in arb_rgb(16)) {
        prop_assert_eq!(to_raw_bitmap(&img).len(), 3 * img.width() as usize * img.height() as usize);
    }

    #[test]
    fn resize_to_same_size_is_identity(img in arb_rgb(16)) {
        prop_assert_eq!(resize(&img, img.width(), img.height()).unwrap(), img);
    }

    #[test]
    fn zipc_is_deterministic(img in arb_rgb(16)) {
        prop_assert_eq!(zipc(&img).ratio().to_bits(), zipc(&img.clone()).ratio().to_bits());
    }

    #[test]
    fn class_shares_sum_to_one(recs in proptest::collection::vec(arb_detection_record(), 1..20), per_image in any::<bool>()) {
        let summaries: Vec<_> = recs.iter().map(|r| summarize(r, 0.25)).collect();
        let counting = if per_image { ClassCounting::PerImage } else { ClassCounting::PerDetection };
        let total: f64 = class_distribution(&summaries, counting).values().map(|(_, s)| s).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn summary_matches_sorting_oracle(values in proptest::collection::vec(-100.0f64..100.0, 1..=8)) {
        let s = Summary::from_values(&values).unwrap();
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| {
            let pos = 1.0 + (sorted.len() as f64 - 1.0) * p;
            let lo = pos.floor();
            let lower = sorted[lo as usize - 1];
            let upper = sorted[(lo as usize).min(sorted.len()) - 1 + usize::from(pos > lo)];
            lower + (pos - lo) * (upper - lower)
        };
        prop_assert!((s.median - q(0.5)).abs() <= 1e-9);
        prop_assert!((s.q1 - q(0.25)).abs() <= 1e-9);
        prop_assert!((s.q3 - q(0.75)).abs() <= 1e-9);
    }

    #[test]
    fn group_sizes_sum_to_period_counts(years in proptest::collection::vec(1990i32..2000, 1..200), threshold in 1usize..60) {
        let records: Vec<AlbumRecord> = years.iter().enumerate().map(|(i, &y)| album(i, y, BTreeSet::new())).collect();
        let periods = bin_periods(&records, threshold).unwrap();
        let obs: Vec<Observation> = years.iter().map(|&year| Observation { year, genres: BTreeSet::new(), value: 1.0 }).collect();
        let stats = aggregate(&obs, &periods, false, 50);
        prop_assert_eq!(stats.len(), periods.len());
        for (s, p) in stats.iter().zip(&periods) {
            prop_assert_eq!(s.summary.n, p.album_count);
        }
    }

    #[test]
    fn imputation_never_touches_labelled_records(
        labelled in proptest::collection::vec(any::<bool>(), 1..30),
        sure in proptest::collection::vec(any::<bool>(), 30),
    ) {
        let mut records: Vec<AlbumRecord> = labelled
            .iter()
            .enumerate()
            .map(|(i, &l)| album(i, 2000, if l { [Supergenre::Rock].into() } else { BTreeSet::new() }))
            .collect();
        let before = records.clone();
        let imputed: Vec<Imputation> = (0..records.len())
            .map(|i| Imputation { album_id: format!("a{i}"), genre: Supergenre::Pop, sure: sure[i] })
            .collect();
        apply_imputation(&mut records, &imputed);
        for (i, (after, before)) in records.iter().zip(&before).enumerate() {
            if !before.supergenres.is_empty() {
                prop_assert_eq!(after, before);
            } else if sure[i] {
                prop_assert_eq!(&after.supergenres, &BTreeSet::from([Supergenre::Pop]));
            } else {
                prop_assert!(after.supergenres.is_empty());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn mdlc_bits_are_floored_and_deterministic(img in arb_rgb(40), seed in any::<u64>()) {
        let cfg = MdlConfig { seed, ..MdlConfig::default() };
        let a = mdlc(&img, &cfg).unwrap();
        prop_assert!(a.bits >= 0.0);
        for (&p, choice) in &a.per_level {
            let rows = (224 / p as usize).pow(2);
            prop_assert!(choice.bits >= model_cost(1, 6, rows) - 1e-9);
        }
        prop_assert_eq!(a, mdlc(&img, &cfg).unwrap());
    }
}

fn arb_detection_record() -> impl Strategy<Value = DetectionRecord> {
    proptest::collection::vec((0..COCO_CLASSES.len(), 0.0f64..=1.0), 0..6).prop_map(|dets| {
        DetectionRecord {
            image_id: "x".into(),
            detections: dets
                .into_iter()
                .map(|(c, confidence)| Detection {
                    class_name: COCO_CLASSES[c].into(),
                    confidence,
                    bbox: None,
                })
                .collect(),
        }
    })
}

fn album(i: usize, year: i32, supergenres: BTreeSet<Supergenre>) -> AlbumRecord {
    AlbumRecord {
        album_id: format!("a{i}"),
        artist: format!("artist {i}"),
        title: format!("title {i}"),
        year,
        raw_genres: Vec::new(),
        supergenres,
        image_ref: format!("{i}.png"),
        image_hash: None,
        source: Source::MuMu,
    }
}

#[test]
fn gray_rgb_round_trip_is_stable() {
    let img = GrayImage::new(3, 2, vec![0, 17, 128, 200, 254, 255]).unwrap();
    assert_eq!(to_grayscale(&img.to_rgb()), img);
}

#[test]
fn genre_groups_below_minimum_are_absent() {
    let records: Vec<AlbumRecord> = (0..99).map(|i| album(i, 2000, BTreeSet::new())).collect();
    let periods = bin_periods(&records, 3000).unwrap();
    let obs: Vec<Observation> = (0..99)
        .map(|i| Observation {
            year: 2000,
            genres: if i < 49 {
                [Supergenre::Pop].into()
            } else {
                [Supergenre::Rock].into()
            },
            value: i as f64,
        })
        .collect();
    let stats = aggregate(&obs, &periods, true, 50);
    let genres: BTreeMap<_, _> = stats.iter().map(|s| (s.genre, s.summary.n)).collect();
    assert_eq!(genres, BTreeMap::from([(Some(Supergenre::Rock), 50)]));
}
