//! Run configuration, its key-value file format and the fingerprint that
//! keys cached metrics.
//!
//! The file format is one `key = value` pair per line; `#` starts a comment.
//! Keys accept either `-` or `_` as separator, so `k-max` and `k_max` are the
//! same field. Command-line flags override file values through the same
//! [`RunConfig::set`] path.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{DEFAULT_MIN_GENRE_COUNT, DEFAULT_PERIOD_THRESHOLD};
use crate::detection::{ClassCounting, DEFAULT_TAU};
use crate::mdl::{FeatureMode, MdlConfig, DEFAULT_K_MAX, DEFAULT_PATCH_SIZES, DEFAULT_RESTARTS};
use crate::zipc;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
}

/// Resolution a metric sees before it is computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum ResizePolicy {
    #[default]
    Original,
    Fixed {
        width: u32,
        height: u32,
    },
}

impl fmt::Display for ResizePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResizePolicy::Original => f.write_str("original"),
            ResizePolicy::Fixed { width, height } => write!(f, "{width}x{height}"),
        }
    }
}

impl FromStr for ResizePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("original") {
            return Ok(ResizePolicy::Original);
        }
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| "expected `original` or `WIDTHxHEIGHT`".to_string())?;
        let width: u32 = w.trim().parse().map_err(|_| format!("bad width {w:?}"))?;
        let height: u32 = h.trim().parse().map_err(|_| format!("bad height {h:?}"))?;
        if width == 0 || height == 0 {
            return Err("dimensions must be positive".into());
        }
        Ok(ResizePolicy::Fixed { width, height })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Step between 2x2 ordinal windows.
    pub stride: usize,
    pub ec_resize: ResizePolicy,
    pub zipc_resize: ResizePolicy,
    pub zip_level: u32,
    /// Compute MDLc during scans. Scans without it are much faster.
    pub mdl: bool,
    pub k_max: usize,
    pub mdl_patch_sizes: Vec<u32>,
    pub mdl_restarts: usize,
    pub mdl_features: FeatureMode,
    pub seed: u64,
    pub tau: f64,
    pub class_counting: ClassCounting,
    pub period_threshold: usize,
    pub min_genre_count: usize,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            stride: 1,
            ec_resize: ResizePolicy::Original,
            zipc_resize: ResizePolicy::Original,
            zip_level: zipc::DEFAULT_LEVEL,
            mdl: true,
            k_max: DEFAULT_K_MAX,
            mdl_patch_sizes: DEFAULT_PATCH_SIZES.to_vec(),
            mdl_restarts: DEFAULT_RESTARTS,
            mdl_features: FeatureMode::Rgb,
            seed: 0,
            tau: DEFAULT_TAU,
            class_counting: ClassCounting::PerDetection,
            period_threshold: DEFAULT_PERIOD_THRESHOLD,
            min_genre_count: DEFAULT_MIN_GENRE_COUNT,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: e.to_string(),
        })
}

fn invalid(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

impl RunConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let canonical = key.trim().replace('-', "_");
        let v = value.trim();
        match canonical.as_str() {
            "stride" => {
                self.stride = parse(key, v)?;
                if self.stride == 0 {
                    return Err(invalid(key, v, "must be at least 1"));
                }
            }
            "ec_resize" => self.ec_resize = parse(key, v)?,
            "zipc_resize" => self.zipc_resize = parse(key, v)?,
            "zip_level" => {
                self.zip_level = parse(key, v)?;
                if self.zip_level > 9 {
                    return Err(invalid(key, v, "must be in 0..=9"));
                }
            }
            "mdl" => self.mdl = parse(key, v)?,
            "k_max" => {
                self.k_max = parse(key, v)?;
                if self.k_max == 0 {
                    return Err(invalid(key, v, "must be at least 1"));
                }
            }
            "mdl_patch_sizes" => {
                self.mdl_patch_sizes = v
                    .split(',')
                    .map(|p| parse::<u32>(key, p))
                    .collect::<Result<_, _>>()?;
                if self.mdl_patch_sizes.is_empty()
                    || self.mdl_patch_sizes.iter().any(|&p| p == 0 || 224 % p != 0)
                {
                    return Err(invalid(key, v, "patch sizes must divide 224"));
                }
            }
            "mdl_restarts" => self.mdl_restarts = parse(key, v)?,
            "mdl_features" => {
                self.mdl_features = match v.to_ascii_lowercase().as_str() {
                    "rgb" => FeatureMode::Rgb,
                    "gray" | "grey" => FeatureMode::Gray,
                    _ => return Err(invalid(key, v, "expected rgb or gray")),
                }
            }
            "seed" => self.seed = parse(key, v)?,
            "tau" => {
                self.tau = parse(key, v)?;
                if !(0.0..=1.0).contains(&self.tau) {
                    return Err(invalid(key, v, "must be in [0, 1]"));
                }
            }
            "class_counting" => {
                self.class_counting = match v.to_ascii_lowercase().as_str() {
                    "per-detection" | "per_detection" => ClassCounting::PerDetection,
                    "per-image" | "per_image" => ClassCounting::PerImage,
                    _ => return Err(invalid(key, v, "expected per-detection or per-image")),
                }
            }
            "period_threshold" => {
                self.period_threshold = parse(key, v)?;
                if self.period_threshold == 0 {
                    return Err(invalid(key, v, "must be at least 1"));
                }
            }
            "min_genre_count" => self.min_genre_count = parse(key, v)?,
            "workers" => {
                self.workers = parse(key, v)?;
                if self.workers == 0 {
                    return Err(invalid(key, v, "must be at least 1"));
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config file on top of `self`.
    pub fn apply_file(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_file_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_file(text)?;
        Ok(cfg)
    }

    pub fn mdl_config(&self) -> MdlConfig {
        MdlConfig {
            k_max: self.k_max,
            patch_sizes: self.mdl_patch_sizes.clone(),
            restarts: self.mdl_restarts,
            features: self.mdl_features,
            seed: self.seed,
        }
    }

    /// Canonical text of every field that changes a cached value.
    pub fn canonical_metric_fields(&self) -> String {
        let patches: Vec<String> = self.mdl_patch_sizes.iter().map(u32::to_string).collect();
        let mut fields = vec![
            format!("stride={}", self.stride),
            format!("ec_resize={}", self.ec_resize),
            format!("zipc_resize={}", self.zipc_resize),
            format!("zip_level={}", self.zip_level),
            format!("mdl={}", self.mdl),
            format!("tau={:?}", self.tau),
        ];
        if self.mdl {
            fields.extend([
                format!("k_max={}", self.k_max),
                format!("mdl_patch_sizes={}", patches.join(",")),
                format!("mdl_restarts={}", self.mdl_restarts),
                format!("mdl_features={:?}", self.mdl_features),
                format!("seed={}", self.seed),
            ]);
        }
        fields.sort();
        fields.join("\n")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical_metric_fields`].
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical_metric_fields().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}
