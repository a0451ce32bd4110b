//! Ingest of externally produced object detections (COCO vocabulary) and
//! per-image semantic summaries.
//!
//! Wire format, one JSON object per line:
//!
//! ```text
//! {"image_id": "<sha256>", "detections": [{"class": "person", "conf": 0.91, "bbox": [x, y, w, h]}]}
//! ```

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TAU: f64 = 0.25;

/// Label used for images without any surviving detection.
pub const NO_OBJECTS: &str = "no_objects";

pub const COCO_CLASSES: [&str; 80] = [
    "person",
    "bicycle",
    "car",
    "motorcycle",
    "airplane",
    "bus",
    "train",
    "truck",
    "boat",
    "traffic light",
    "fire hydrant",
    "stop sign",
    "parking meter",
    "bench",
    "bird",
    "cat",
    "dog",
    "horse",
    "sheep",
    "cow",
    "elephant",
    "bear",
    "zebra",
    "giraffe",
    "backpack",
    "umbrella",
    "handbag",
    "tie",
    "suitcase",
    "frisbee",
    "skis",
    "snowboard",
    "sports ball",
    "kite",
    "baseball bat",
    "baseball glove",
    "skateboard",
    "surfboard",
    "tennis racket",
    "bottle",
    "wine glass",
    "cup",
    "fork",
    "knife",
    "spoon",
    "bowl",
    "banana",
    "apple",
    "sandwich",
    "orange",
    "broccoli",
    "carrot",
    "hot dog",
    "pizza",
    "donut",
    "cake",
    "chair",
    "couch",
    "potted plant",
    "bed",
    "dining table",
    "toilet",
    "tv",
    "laptop",
    "mouse",
    "remote",
    "keyboard",
    "cell phone",
    "microwave",
    "oven",
    "toaster",
    "sink",
    "refrigerator",
    "book",
    "clock",
    "vase",
    "scissors",
    "teddy bear",
    "hair drier",
    "toothbrush",
];

pub fn is_coco_class(name: &str) -> bool {
    COCO_CLASSES.contains(&name)
}

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: unknown class {class:?}")]
    UnknownClass { line: usize, class: String },
    #[error("line {line}: duplicate image_id {image_id}")]
    DuplicateImage { line: usize, image_id: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "class")]
    pub class_name: String,
    #[serde(rename = "conf")]
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[f64; 4]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: String,
    #[serde(default)]
    pub detections: Vec<Detection>,
}

/// Parses newline-delimited detection records, validating vocabulary,
/// confidence range and image-id uniqueness. Blank lines are skipped.
pub fn load_detections<R: BufRead>(reader: R) -> Result<Vec<DetectionRecord>, DetectionError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DetectionRecord =
            serde_json::from_str(&line).map_err(|e| DetectionError::ParseError {
                line: line_no,
                message: e.to_string(),
            })?;
        for det in &record.detections {
            if !is_coco_class(&det.class_name) {
                return Err(DetectionError::UnknownClass {
                    line: line_no,
                    class: det.class_name.clone(),
                });
            }
            if !(0.0..=1.0).contains(&det.confidence) {
                return Err(DetectionError::ParseError {
                    line: line_no,
                    message: format!("confidence {} outside [0, 1]", det.confidence),
                });
            }
        }
        if !seen.insert(record.image_id.clone()) {
            return Err(DetectionError::DuplicateImage {
                line: line_no,
                image_id: record.image_id,
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn write_detections<W: Write>(
    records: &[DetectionRecord],
    mut writer: W,
) -> Result<(), DetectionError> {
    for record in records {
        serde_json::to_writer(&mut writer, record).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticSummary {
    pub image_id: String,
    pub object_count: usize,
    /// Class multiset: class name to number of surviving detections.
    pub classes: BTreeMap<String, usize>,
}

/// Keeps detections with `confidence >= tau`.
pub fn summarize(record: &DetectionRecord, tau: f64) -> SemanticSummary {
    let mut classes = BTreeMap::new();
    let mut object_count = 0;
    for det in record.detections.iter().filter(|d| d.confidence >= tau) {
        *classes.entry(det.class_name.clone()).or_insert(0) += 1;
        object_count += 1;
    }
    SemanticSummary {
        image_id: record.image_id.clone(),
        object_count,
        classes,
    }
}

/// How repeated detections of one class on one image enter class distributions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassCounting {
    /// Every detection counts.
    #[default]
    PerDetection,
    /// A class counts at most once per image.
    PerImage,
}

/// Class shares over a group of images, including the share of images with
/// no detections under [`NO_OBJECTS`].
pub fn class_distribution<'a>(
    summaries: impl IntoIterator<Item = &'a SemanticSummary>,
    counting: ClassCounting,
) -> BTreeMap<String, (usize, f64)> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in summaries {
        if s.object_count == 0 {
            *counts.entry(NO_OBJECTS.to_string()).or_insert(0) += 1;
            continue;
        }
        for (class, &n) in &s.classes {
            let n = match counting {
                ClassCounting::PerDetection => n,
                ClassCounting::PerImage => 1,
            };
            *counts.entry(class.clone()).or_insert(0) += n;
        }
    }
    let total: usize = counts.values().sum();
    counts
        .into_iter()
        .map(|(class, n)| (class, (n, n as f64 / total as f64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(class: &str, confidence: f64) -> Detection {
        Detection {
            class_name: class.into(),
            confidence,
            bbox: None,
        }
    }

    #[test]
    fn vocabulary_has_eighty_unique_classes() {
        let unique: HashSet<_> = COCO_CLASSES.iter().collect();
        assert_eq!(unique.len(), 80);
    }

    #[test]
    fn empty_stream_is_empty() {
        assert!(load_detections(&b""[..]).unwrap().is_empty());
    }

    #[test]
    fn parses_record_with_two_detections() {
        let line = r#"{"image_id":"ab","detections":[{"class":"person","conf":0.9,"bbox":[1,2,3,4]},{"class":"dog","conf":0.2}]}"#;
        let recs = load_detections(line.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].detections.len(), 2);
        assert_eq!(recs[0].detections[0].bbox, Some([1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn rejects_bad_input() {
        let dragon = r#"{"image_id":"a","detections":[{"class":"dragon","conf":0.9}]}"#;
        assert!(matches!(
            load_detections(dragon.as_bytes()),
            Err(DetectionError::UnknownClass { line: 1, .. })
        ));
        let dup =
            "{\"image_id\":\"a\",\"detections\":[]}\n{\"image_id\":\"a\",\"detections\":[]}\n";
        assert!(matches!(
            load_detections(dup.as_bytes()),
            Err(DetectionError::DuplicateImage { line: 2, .. })
        ));
        let garbage = "{\"image_id\":\"a\",\"detections\":[]}\n\nnot json\n";
        assert!(matches!(
            load_detections(garbage.as_bytes()),
            Err(DetectionError::ParseError { line: 3, .. })
        ));
        let conf = r#"{"image_id":"a","detections":[{"class":"cat","conf":1.5}]}"#;
        assert!(matches!(
            load_detections(conf.as_bytes()),
            Err(DetectionError::ParseError { .. })
        ));
    }

    #[test]
    fn threshold_is_inclusive() {
        let rec = DetectionRecord {
            image_id: "x".into(),
            detections: vec![det("person", 0.9), det("dog", 0.2), det("cat", 0.25)],
        };
        let s = summarize(&rec, DEFAULT_TAU);
        assert_eq!(s.object_count, 2);
        assert_eq!(s.classes.keys().collect::<Vec<_>>(), vec!["cat", "person"]);
        assert_eq!(summarize(&rec, 0.0).object_count, 3);
        let empty = DetectionRecord {
            image_id: "y".into(),
            detections: vec![],
        };
        assert_eq!(summarize(&empty, 0.0).object_count, 0);
    }

    #[test]
    fn distribution_includes_no_object_share() {
        let recs = [
            DetectionRecord {
                image_id: "a".into(),
                detections: vec![det("person", 0.9), det("person", 0.8), det("dog", 0.5)],
            },
            DetectionRecord {
                image_id: "b".into(),
                detections: vec![det("dog", 0.1)],
            },
        ];
        let summaries: Vec<_> = recs.iter().map(|r| summarize(r, 0.25)).collect();
        let dist = class_distribution(&summaries, ClassCounting::PerDetection);
        assert_eq!(dist["person"].0, 2);
        assert_eq!(dist[NO_OBJECTS].0, 1);
        assert!((dist.values().map(|v| v.1).sum::<f64>() - 1.0).abs() < 1e-12);
        let per_image = class_distribution(&summaries, ClassCounting::PerImage);
        assert_eq!(per_image["person"].0, 1);
    }

    fn arb_record() -> impl Strategy<Value = DetectionRecord> {
        (
            "[a-f0-9]{8}",
            proptest::collection::vec(
                (
                    0usize..80,
                    0.0f64..=1.0,
                    proptest::option::of(any::<[i16; 4]>()),
                ),
                0..6,
            ),
        )
            .prop_map(|(id, dets)| DetectionRecord {
                image_id: id,
                detections: dets
                    .into_iter()
                    .map(|(c, conf, bbox)| Detection {
                        class_name: COCO_CLASSES[c].into(),
                        confidence: conf,
                        bbox: bbox.map(|b| b.map(f64::from)),
                    })
                    .collect(),
            })
    }

    proptest! {
        #[test]
        fn raising_tau_never_adds_objects(rec in arb_record(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(summarize(&rec, hi).object_count <= summarize(&rec, lo).object_count);
        }

        #[test]
        fn serialization_round_trips(mut recs in proptest::collection::vec(arb_record(), 0..5)) {
            recs.dedup_by(|a, b| a.image_id == b.image_id);
            let mut ids = HashSet::new();
            recs.retain(|r| ids.insert(r.image_id.clone()));
            let mut buf = Vec::new();
            write_detections(&recs, &mut buf).unwrap();
            prop_assert_eq!(load_detections(&buf[..]).unwrap(), recs);
        }
    }
}
