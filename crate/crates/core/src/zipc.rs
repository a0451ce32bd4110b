//! Compression-ratio complexity: size of a ZIP archive holding the
//! DEFLATE-compressed RGB24 bitmap, divided by the raw bitmap size.

use std::io::Write;

use flate2::write::DeflateEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::imaging::{to_raw_bitmap, RgbImage};

pub const DEFAULT_LEVEL: u32 = 9;

/// Entry name stored in the archive.
const ENTRY_NAME: &[u8] = b"image.rgb";
/// DOS time/date written into both headers; 1980-01-01 00:00, the DOS epoch.
const DOS_TIME: u16 = 0;
const DOS_DATE: u16 = (1 << 5) | 1;

/// Compressed-to-raw size ratio. Can exceed 1 for tiny or incompressible images.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ZipcScore(pub f64);

impl ZipcScore {
    pub fn ratio(self) -> f64 {
        self.0
    }
}

pub fn deflate(data: &[u8], level: u32) -> Vec<u8> {
    let mut encoder = DeflateEncoder::new(
        Vec::with_capacity(data.len() / 2 + 64),
        Compression::new(level.min(9)),
    );
    encoder
        .write_all(data)
        .expect("writing to a Vec cannot fail");
    encoder.finish().expect("writing to a Vec cannot fail")
}

/// Single-entry ZIP archive with DEFLATE payload and constant metadata.
///
/// Sizes are stored in 32-bit fields; payloads above 4 GiB are not supported.
pub fn zip_archive(data: &[u8], level: u32) -> Vec<u8> {
    let payload = deflate(data, level);
    let crc = crc32fast::hash(data);
    let compressed = u32::try_from(payload.len()).unwrap_or(u32::MAX);
    let raw = u32::try_from(data.len()).unwrap_or(u32::MAX);
    let name_len = ENTRY_NAME.len() as u16;

    let mut out = Vec::with_capacity(payload.len() + 98 + 2 * ENTRY_NAME.len());
    let put16 = |out: &mut Vec<u8>, v: u16| out.extend_from_slice(&v.to_le_bytes());
    let put32 = |out: &mut Vec<u8>, v: u32| out.extend_from_slice(&v.to_le_bytes());

    // local file header
    put32(&mut out, 0x0403_4b50);
    put16(&mut out, 20); // version needed
    put16(&mut out, 0); // flags
    put16(&mut out, 8); // deflate
    put16(&mut out, DOS_TIME);
    put16(&mut out, DOS_DATE);
    put32(&mut out, crc);
    put32(&mut out, compressed);
    put32(&mut out, raw);
    put16(&mut out, name_len);
    put16(&mut out, 0); // extra length
    out.extend_from_slice(ENTRY_NAME);
    out.extend_from_slice(&payload);

    // central directory
    let cd_offset = out.len() as u32;
    put32(&mut out, 0x0201_4b50);
    put16(&mut out, 20); // version made by
    put16(&mut out, 20); // version needed
    put16(&mut out, 0);
    put16(&mut out, 8);
    put16(&mut out, DOS_TIME);
    put16(&mut out, DOS_DATE);
    put32(&mut out, crc);
    put32(&mut out, compressed);
    put32(&mut out, raw);
    put16(&mut out, name_len);
    put16(&mut out, 0); // extra length
    put16(&mut out, 0); // comment length
    put16(&mut out, 0); // disk number
    put16(&mut out, 0); // internal attributes
    put32(&mut out, 0); // external attributes
    put32(&mut out, 0); // local header offset
    out.extend_from_slice(ENTRY_NAME);
    let cd_size = out.len() as u32 - cd_offset;

    // end of central directory
    put32(&mut out, 0x0605_4b50);
    put16(&mut out, 0);
    put16(&mut out, 0);
    put16(&mut out, 1);
    put16(&mut out, 1);
    put32(&mut out, cd_size);
    put32(&mut out, cd_offset);
    put16(&mut out, 0);
    out
}

pub fn zipc(img: &RgbImage) -> ZipcScore {
    zipc_with_level(img, DEFAULT_LEVEL)
}

pub fn zipc_with_level(img: &RgbImage, level: u32) -> ZipcScore {
    let raw = to_raw_bitmap(img);
    let archive = zip_archive(&raw, level);
    ZipcScore(archive.len() as f64 / raw.len() as f64)
}
