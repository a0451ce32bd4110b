//! Canonical raster forms shared by every metric: decoding, grayscale
//! conversion, bilinear resizing and the header-less RGB24 bitmap.

use std::io::Cursor;

use image::{DynamicImage, ImageFormat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },
    #[error("png encoding failed: {0}")]
    Encode(String),
}

/// 8-bit RGB raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || pixels.len() != width as usize * height as usize {
            return Err(ImagingError::InvalidDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> [u8; 3],
    ) -> Result<Self, ImagingError> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, ImagingError> {
        Self::new(width, height, vec![rgb; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn into_pixels(self) -> Vec<[u8; 3]> {
        self.pixels
    }
}

/// 8-bit luminance raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || pixels.len() != width as usize * height as usize {
            return Err(ImagingError::InvalidDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Replicates luminance into all three channels.
    pub fn to_rgb(&self) -> RgbImage {
        RgbImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&g| [g, g, g]).collect(),
        }
    }

    /// Applies `f` to every pixel value.
    pub fn map(&self, f: impl Fn(u8) -> u8) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Decodes a JPEG or PNG file. Transparent pixels are composited over white.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage, ImagingError> {
    let format =
        image::guess_format(bytes).map_err(|e| ImagingError::CorruptImage(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(ImagingError::CorruptImage(format!(
            "unsupported format {format:?}"
        )));
    }
    let dynamic = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| ImagingError::CorruptImage(e.to_string()))?;
    from_dynamic(dynamic)
}

fn from_dynamic(dynamic: DynamicImage) -> Result<RgbImage, ImagingError> {
    let (width, height) = (dynamic.width(), dynamic.height());
    let pixels = if dynamic.color().has_alpha() {
        dynamic
            .to_rgba8()
            .pixels()
            .map(|p| {
                let a = p.0[3] as u32;
                let over_white = |c: u8| ((c as u32 * a + 255 * (255 - a) + 127) / 255) as u8;
                [over_white(p.0[0]), over_white(p.0[1]), over_white(p.0[2])]
            })
            .collect()
    } else {
        dynamic.to_rgb8().pixels().map(|p| p.0).collect()
    };
    RgbImage::new(width, height, pixels)
}

/// BT.601 luminance, rounded half up.
#[inline]
pub fn luminance([r, g, b]: [u8; 3]) -> u8 {
    // Integer form of round(0.299 r + 0.587 g + 0.114 b); the maximum is exactly 255.
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&p| luminance(p)).collect(),
    }
}

/// Precomputed bilinear taps along one axis: (low index, high index, weight of high).
fn axis_taps(src: u32, dst: u32) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = pos.floor();
            let hi = (lo as usize + 1).min(src as usize - 1);
            (lo as usize, hi, pos - lo)
        })
        .collect()
}

/// Bilinear resize with pixel-centre alignment and edge-clamped sampling.
pub fn resize(img: &RgbImage, width: u32, height: u32) -> Result<RgbImage, ImagingError> {
    if width == 0 || height == 0 {
        return Err(ImagingError::InvalidDimensions { width, height });
    }
    if width == img.width && height == img.height {
        return Ok(img.clone());
    }
    let xs = axis_taps(img.width, width);
    let ys = axis_taps(img.height, height);
    let stride = img.width as usize;
    let mut pixels = Vec::with_capacity(width as usize * height as usize);
    for &(y0, y1, wy) in &ys {
        let row0 = &img.pixels[y0 * stride..(y0 + 1) * stride];
        let row1 = &img.pixels[y1 * stride..(y1 + 1) * stride];
        for &(x0, x1, wx) in &xs {
            let mut out = [0u8; 3];
            for (c, slot) in out.iter_mut().enumerate() {
                let top = row0[x0][c] as f64 * (1.0 - wx) + row0[x1][c] as f64 * wx;
                let bottom = row1[x0][c] as f64 * (1.0 - wx) + row1[x1][c] as f64 * wx;
                let v = top * (1.0 - wy) + bottom * wy;
                *slot = v.round().clamp(0.0, 255.0) as u8;
            }
            pixels.push(out);
        }
    }
    RgbImage::new(width, height, pixels)
}

/// Header-less row-major RGB24 bytes, `3 * width * height` long.
pub fn to_raw_bitmap(img: &RgbImage) -> Vec<u8> {
    img.pixels.iter().flatten().copied().collect()
}

/// Lossless PNG encoding, used for fixtures and round-trip checks.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, ImagingError> {
    let buffer = image::RgbImage::from_raw(img.width, img.height, to_raw_bitmap(img)).ok_or(
        ImagingError::InvalidDimensions {
            width: img.width,
            height: img.height,
        },
    )?;
    let mut out = Cursor::new(Vec::new());
    buffer
        .write_to(&mut out, ImageFormat::Png)
        .map_err(|e| ImagingError::Encode(e.to_string()))?;
    Ok(out.into_inner())
}
