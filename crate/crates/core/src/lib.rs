//! Visual complexity metrics for image corpora and the corpus analytics that
//! turn per-image scores into period and genre statistics.
//!
//! Metrics:
//! * [`ordinal`]: permutation entropy and statistical complexity of 2x2 ordinal patterns,
//! * [`mdl`]: two-part-code description length of multi-scale patch clusterings,
//! * [`zipc`]: DEFLATE compression ratio of the raw RGB bitmap,
//! * [`detection`]: object counts from externally produced detections.

pub mod cache;
pub mod config;
pub mod corpus;
pub mod detection;
pub mod imaging;
pub mod mdl;
pub mod ordinal;
pub mod report;
pub mod scan;
pub mod selftest;
pub mod zipc;
