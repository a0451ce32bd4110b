//! Entropy-complexity plane coordinates from 2x2 ordinal patterns.
//!
//! Every 2x2 window `(a, b, c, d)` (read row-major) is symbolised by the rank
//! vector of its values, ties broken by position. The 24 possible rank vectors
//! are indexed in lexicographic order, so the identity pattern is 0 and the
//! full reversal is 23. Normalized permutation entropy `H` and the
//! Jensen-Shannon statistical complexity `C` are both computed with natural
//! logarithms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::GrayImage;

/// Number of ordinal patterns of a 2x2 window (4!).
pub const PATTERN_COUNT: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrdinalError {
    #[error("image {width}x{height} is too small for 2x2 windows")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("stride must be at least 1")]
    InvalidStride,
}

/// Pattern index of a 2x2 window read row-major.
///
/// The Lehmer code of the rank vector only needs, for each position, the number
/// of later positions holding a strictly smaller value; equal later values rank
/// above it under the positional tie-break.
#[inline]
pub fn ordinal_pattern(window: [u8; 4]) -> usize {
    let [a, b, c, d] = window;
    let c0 = (b < a) as usize + (c < a) as usize + (d < a) as usize;
    let c1 = (c < b) as usize + (d < b) as usize;
    let c2 = (d < c) as usize;
    6 * c0 + 2 * c1 + c2
}

/// Histogram of ordinal patterns over one image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrdinalDistribution {
    counts: [u64; PATTERN_COUNT],
    total: u64,
}

impl OrdinalDistribution {
    /// Builds a distribution from raw counts. Returns `None` if all counts are zero.
    pub fn from_counts(counts: [u64; PATTERN_COUNT]) -> Option<Self> {
        let total = counts.iter().sum();
        (total > 0).then_some(Self { counts, total })
    }

    pub fn counts(&self) -> &[u64; PATTERN_COUNT] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Adds the counts of `other`; the merge is associative and commutative.
    pub fn merge(&mut self, other: &OrdinalDistribution) {
        for (mine, theirs) in self.counts.iter_mut().zip(other.counts.iter()) {
            *mine += theirs;
        }
        self.total += other.total;
    }

    pub fn probabilities(&self) -> [f64; PATTERN_COUNT] {
        let total = self.total as f64;
        let mut p = [0.0; PATTERN_COUNT];
        for (slot, &count) in p.iter_mut().zip(self.counts.iter()) {
            *slot = count as f64 / total;
        }
        p
    }
}

/// Pattern histogram over all overlapping 2x2 windows (stride 1).
pub fn pattern_distribution(img: &GrayImage) -> Result<OrdinalDistribution, OrdinalError> {
    pattern_distribution_with_stride(img, 1)
}

/// Pattern histogram over 2x2 windows whose top-left corners lie on a `stride` grid.
pub fn pattern_distribution_with_stride(
    img: &GrayImage,
    stride: usize,
) -> Result<OrdinalDistribution, OrdinalError> {
    let (width, height) = (img.width(), img.height());
    if width < 2 || height < 2 {
        return Err(OrdinalError::ImageTooSmall { width, height });
    }
    if stride == 0 {
        return Err(OrdinalError::InvalidStride);
    }
    let w = width as usize;
    let px = img.pixels();
    let mut counts = [0u64; PATTERN_COUNT];
    for y in (0..height as usize - 1).step_by(stride) {
        let top = &px[y * w..(y + 1) * w];
        let bottom = &px[(y + 1) * w..(y + 2) * w];
        for x in (0..w - 1).step_by(stride) {
            counts[ordinal_pattern([top[x], top[x + 1], bottom[x], bottom[x + 1]])] += 1;
        }
    }
    Ok(OrdinalDistribution::from_counts(counts).expect("at least one window"))
}

/// Normalized Shannon entropy of the pattern distribution, in `[0, 1]`.
pub fn permutation_entropy(dist: &OrdinalDistribution) -> f64 {
    let shannon: f64 = dist
        .probabilities()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.recip().ln())
        .sum();
    (shannon / (PATTERN_COUNT as f64).ln()).clamp(0.0, 1.0)
}

/// Jensen-Shannon divergence between `p` and the uniform distribution.
fn js_divergence_from_uniform(p: &[f64; PATTERN_COUNT]) -> f64 {
    let u = 1.0 / PATTERN_COUNT as f64;
    let mut d = 0.0;
    for &pi in p {
        let mid = pi + u;
        if pi > 0.0 {
            d += pi * (2.0 * pi / mid).ln();
        }
        d += u * (2.0 * u / mid).ln();
    }
    0.5 * d
}

/// Largest Jensen-Shannon divergence from uniform over 24 symbols, reached by a
/// single-symbol distribution.
pub fn max_js_divergence() -> f64 {
    let n = PATTERN_COUNT as f64;
    -0.5 * ((n + 1.0) / n * (n + 1.0).ln() - 2.0 * (2.0 * n).ln() + n.ln())
}

/// `H * D_JS(P, U) / D*`, in `[0, 1]`.
pub fn statistical_complexity(dist: &OrdinalDistribution) -> f64 {
    let h = permutation_entropy(dist);
    if h == 0.0 {
        return 0.0;
    }
    let disequilibrium = js_divergence_from_uniform(&dist.probabilities()) / max_js_divergence();
    (h * disequilibrium).clamp(0.0, 1.0)
}

/// A point of the entropy-complexity plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcPoint {
    pub h: f64,
    pub c: f64,
}

impl EcPoint {
    pub fn from_distribution(dist: &OrdinalDistribution) -> Self {
        Self {
            h: permutation_entropy(dist),
            c: statistical_complexity(dist),
        }
    }
}

pub fn ec_point(img: &GrayImage) -> Result<EcPoint, OrdinalError> {
    ec_point_with_stride(img, 1)
}

pub fn ec_point_with_stride(img: &GrayImage, stride: usize) -> Result<EcPoint, OrdinalError> {
    pattern_distribution_with_stride(img, stride).map(|d| EcPoint::from_distribution(&d))
}
