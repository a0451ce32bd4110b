use serde::{Deserialize, Serialize};

use super::MdlError;
use crate::imaging::{luminance, RgbImage};

/// Side length every image is resized to before patch extraction.
pub const MDL_SIDE: u32 = 224;

/// Which pixel values patch statistics are taken over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    /// Mean and standard deviation of each RGB channel (6 features).
    #[default]
    Rgb,
    /// Mean and standard deviation of BT.601 luminance (2 features).
    Gray,
}

impl FeatureMode {
    pub fn dims(self) -> usize {
        match self {
            FeatureMode::Rgb => 6,
            FeatureMode::Gray => 2,
        }
    }
}

/// Standardized per-patch statistics for one patch size.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchFeatures {
    patch: u32,
    rows: usize,
    dims: usize,
    data: Vec<f64>,
}

impl PatchFeatures {
    /// Wraps an already standardized row-major matrix.
    pub fn from_rows(patch: u32, dims: usize, data: Vec<f64>) -> Self {
        assert!(dims > 0 && data.len().is_multiple_of(dims));
        Self {
            patch,
            rows: data.len() / dims,
            dims,
            data,
        }
    }

    pub fn patch(&self) -> u32 {
        self.patch
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    /// Number of bitwise-distinct rows.
    pub fn distinct_rows(&self) -> usize {
        let mut keys: Vec<Vec<u64>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.len()
    }
}

pub fn patch_features(img: &RgbImage, patch: u32) -> Result<PatchFeatures, MdlError> {
    patch_features_with_mode(img, patch, FeatureMode::Rgb)
}

pub fn patch_features_with_mode(
    img: &RgbImage,
    patch: u32,
    mode: FeatureMode,
) -> Result<PatchFeatures, MdlError> {
    if img.width() != MDL_SIDE || img.height() != MDL_SIDE {
        return Err(MdlError::InvalidImageSize {
            width: img.width(),
            height: img.height(),
        });
    }
    if patch == 0 || !MDL_SIDE.is_multiple_of(patch) {
        return Err(MdlError::InvalidPatchSize(patch));
    }
    let per_side = (MDL_SIDE / patch) as usize;
    let channels = mode.dims() / 2;
    let dims = mode.dims();
    let p = patch as usize;
    let area = (p * p) as f64;
    let mut data = Vec::with_capacity(per_side * per_side * dims);
    let mut values = vec![0.0f64; p * p];
    for py in 0..per_side {
        for px in 0..per_side {
            let mut stats = [0.0f64; 6];
            for ch in 0..channels {
                for dy in 0..p {
                    for dx in 0..p {
                        let pixel = img.pixel((px * p + dx) as u32, (py * p + dy) as u32);
                        values[dy * p + dx] = match mode {
                            FeatureMode::Rgb => pixel[ch] as f64,
                            FeatureMode::Gray => luminance(pixel) as f64,
                        };
                    }
                }
                let mean = values.iter().sum::<f64>() / area;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / area;
                stats[ch] = mean;
                stats[channels + ch] = var.sqrt();
            }
            data.extend_from_slice(&stats[..dims]);
        }
    }
    standardize(&mut data, dims);
    Ok(PatchFeatures::from_rows(patch, dims, data))
}

/// Zero mean, unit variance per column; constant columns become all zeros.
fn standardize(data: &mut [f64], dims: usize) {
    let rows = data.len() / dims;
    for col in 0..dims {
        let mean = (0..rows).map(|r| data[r * dims + col]).sum::<f64>() / rows as f64;
        let var = (0..rows)
            .map(|r| (data[r * dims + col] - mean).powi(2))
            .sum::<f64>()
            / rows as f64;
        let sd = var.sqrt();
        for r in 0..rows {
            let v = &mut data[r * dims + col];
            *v = if sd > 1e-9 { (*v - mean) / sd } else { 0.0 };
        }
    }
}
