//! Meaningful complexity: the summed two-part description length of the best
//! patch-clustering model at each of several patch scales.
//!
//! For each patch size the image (resized to 224x224) is cut into
//! non-overlapping patches, each described by standardized per-channel mean
//! and standard deviation. A k-means model with `K` clusters is costed as
//!
//! * model: `(K*d + K - 1) / 2 * log2(N)` bits for centroids and mixing weights,
//! * assignments: `-log2(n_k / N)` bits per patch,
//! * residuals: `-log2(phi(x; mu, sigma) * delta)` bits per coordinate under a
//!   spherical Gaussian per cluster, floored at zero,
//!
//! and the cheapest `K` in `1..=K_max` is kept.

mod features;
mod kmeans;

use std::collections::BTreeMap;
use std::f64::consts::{LOG2_E, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{resize, ImagingError, RgbImage};

pub use features::{
    patch_features, patch_features_with_mode, FeatureMode, PatchFeatures, MDL_SIDE,
};
pub use kmeans::{kmeans, KMeansFit};

pub const DEFAULT_K_MAX: usize = 5;
pub const DEFAULT_PATCH_SIZES: [u32; 3] = [4, 8, 16];
pub const DEFAULT_RESTARTS: usize = 5;
pub const SIGMA_MIN: f64 = 1e-3;
pub const QUANTIZATION_STEP: f64 = 1.0 / 256.0;

#[derive(Debug, Error)]
pub enum MdlError {
    #[error("patch size {0} does not divide {MDL_SIDE}")]
    InvalidPatchSize(u32),
    #[error("patch features need a {MDL_SIDE}x{MDL_SIDE} image, got {width}x{height}")]
    InvalidImageSize { width: u32, height: u32 },
    #[error("cluster count {k} outside 1..={rows}")]
    InvalidClusterCount { k: usize, rows: usize },
    #[error("requested {requested} clusters but only {distinct} distinct feature rows")]
    DegenerateClustering { requested: usize, distinct: usize },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdlConfig {
    pub k_max: usize,
    pub patch_sizes: Vec<u32>,
    pub restarts: usize,
    pub features: FeatureMode,
    pub seed: u64,
}

impl Default for MdlConfig {
    fn default() -> Self {
        Self {
            k_max: DEFAULT_K_MAX,
            patch_sizes: DEFAULT_PATCH_SIZES.to_vec(),
            restarts: DEFAULT_RESTARTS,
            features: FeatureMode::Rgb,
            seed: 0,
        }
    }
}

/// Cost breakdown of one clustering model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescriptionLength {
    /// Clusters actually used after dropping empty ones.
    pub k: usize,
    pub model_bits: f64,
    pub assignment_bits: f64,
    pub residual_bits: f64,
}

impl DescriptionLength {
    pub fn total(&self) -> f64 {
        self.model_bits + self.assignment_bits + self.residual_bits
    }
}

/// `((K*d + K - 1) / 2) * log2(N)`.
pub fn model_cost(k: usize, dims: usize, rows: usize) -> f64 {
    (k * dims + k - 1) as f64 / 2.0 * (rows as f64).log2()
}

/// Bits for one coordinate under `N(mu, sigma^2)` quantized at `QUANTIZATION_STEP`, floored at 0.
pub fn residual_bits(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    let bits =
        -QUANTIZATION_STEP.log2() + (sigma * (2.0 * PI).sqrt()).log2() + 0.5 * z * z * LOG2_E;
    bits.max(0.0)
}

fn rng_for(seed: u64, patch: u32, k: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&patch.to_le_bytes());
    key[12..20].copy_from_slice(&(k as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Costs a labelled partition of `features`; empty labels are ignored.
pub fn cost_of_partition(features: &PatchFeatures, assignments: &[usize]) -> DescriptionLength {
    let n = features.rows();
    let d = features.dims();
    let labels = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; labels];
    let mut sums = vec![vec![0.0; d]; labels];
    for (i, &a) in assignments.iter().enumerate() {
        sizes[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(features.row(i)) {
            *s += v;
        }
    }
    let means: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&sizes)
        .map(|(s, &size)| s.into_iter().map(|v| v / size.max(1) as f64).collect())
        .collect();
    let mut sq = vec![0.0; labels];
    for (i, &a) in assignments.iter().enumerate() {
        sq[a] += features
            .row(i)
            .iter()
            .zip(&means[a])
            .map(|(x, m)| (x - m) * (x - m))
            .sum::<f64>();
    }
    let sigmas: Vec<f64> = sq
        .iter()
        .zip(&sizes)
        .map(|(&s, &size)| {
            if size == 0 {
                SIGMA_MIN
            } else {
                (s / (size * d) as f64).sqrt().max(SIGMA_MIN)
            }
        })
        .collect();

    let k = sizes.iter().filter(|&&s| s > 0).count();
    let assignment_bits = assignments
        .iter()
        .map(|&a| -(sizes[a] as f64 / n as f64).log2())
        .sum::<f64>()
        .max(0.0);
    let residual = assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            features
                .row(i)
                .iter()
                .zip(&means[a])
                .map(|(&x, &mu)| residual_bits(x, mu, sigmas[a]))
                .sum::<f64>()
        })
        .sum();
    DescriptionLength {
        k,
        model_bits: model_cost(k, d, n),
        assignment_bits,
        residual_bits: residual,
    }
}

/// Fits `k` clusters (seeded k-means++, best of `restarts`) and returns the
/// two-part description length in bits.
pub fn description_length(
    features: &PatchFeatures,
    k: usize,
    cfg: &MdlConfig,
) -> Result<DescriptionLength, MdlError> {
    description_length_with_distinct(features, k, cfg, features.distinct_rows())
}

fn description_length_with_distinct(
    features: &PatchFeatures,
    k: usize,
    cfg: &MdlConfig,
    distinct: usize,
) -> Result<DescriptionLength, MdlError> {
    let rows = features.rows();
    if k == 0 || k > rows {
        return Err(MdlError::InvalidClusterCount { k, rows });
    }
    if k > distinct {
        return Err(MdlError::DegenerateClustering {
            requested: k,
            distinct,
        });
    }
    if k == 1 {
        return Ok(cost_of_partition(features, &vec![0; rows]));
    }
    let mut rng = rng_for(cfg.seed, features.patch(), k);
    let fit = kmeans(features.data(), features.dims(), k, cfg.restarts, &mut rng);
    Ok(cost_of_partition(features, &fit.assignments))
}

/// Winning model at one patch size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelChoice {
    pub k: usize,
    pub bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdlcScore {
    pub bits: f64,
    pub per_level: BTreeMap<u32, LevelChoice>,
}

/// Cheapest model over `K = 1..=K_max` for one feature matrix. Candidates
/// above the number of distinct rows fall back to that count; ties keep the
/// smaller `K`.
pub fn best_level_model(features: &PatchFeatures, cfg: &MdlConfig) -> LevelChoice {
    let distinct = features.distinct_rows();
    let k_top = cfg.k_max.max(1).min(distinct);
    let mut best: Option<LevelChoice> = None;
    for k in 1..=k_top {
        let dl = description_length_with_distinct(features, k, cfg, distinct)
            .expect("k within 1..=distinct");
        let bits = dl.total();
        if best.is_none_or(|b| bits < b.bits) {
            best = Some(LevelChoice { k: dl.k, bits });
        }
    }
    best.expect("k_top >= 1")
}

/// MDLc of an image at any resolution.
pub fn mdlc(img: &RgbImage, cfg: &MdlConfig) -> Result<MdlcScore, MdlError> {
    let resized = resize(img, MDL_SIDE, MDL_SIDE)?;
    let mut per_level = BTreeMap::new();
    for &p in &cfg.patch_sizes {
        let features = patch_features_with_mode(&resized, p, cfg.features)?;
        per_level.insert(p, best_level_model(&features, cfg));
    }
    let bits = per_level.values().map(|c| c.bits).sum();
    Ok(MdlcScore { bits, per_level })
}
