//! Binary PGM (P5, 8-bit) encoding and decoding.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;

/// Encodes the quantized image as `P5\n<w> <h>\n255\n` followed by raw samples.
pub fn encode(img: &Image) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.samples().len());
    out.extend_from_slice(header.as_bytes());
    out.extend(img.to_u8());
    out
}

pub fn is_pgm(bytes: &[u8]) -> bool {
    bytes.starts_with(b"P5")
}

pub fn decode(bytes: &[u8]) -> Result<Image> {
    if !is_pgm(bytes) {
        return Err(Error::Pgm("missing P5 magic"));
    }
    let mut pos = 2;
    let width = header_field(bytes, &mut pos)?;
    let height = header_field(bytes, &mut pos)?;
    let maxval = header_field(bytes, &mut pos)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Pgm("only 8-bit maxval (1..=255) is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Pgm("missing whitespace after header")),
    }
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage);
    }
    let n = width
        .checked_mul(height)
        .ok_or(Error::Pgm("dimensions overflow"))?;
    let raster = bytes
        .get(pos..pos + n)
        .ok_or(Error::Pgm("truncated raster"))?;
    if maxval == 255 {
        return Image::from_u8(width, height, raster);
    }
    let scale = 255.0 / maxval as f64;
    let samples = raster
        .iter()
        .map(|&b| libm::round(f64::from(b.min(maxval as u8)) * scale))
        .collect();
    Image::new(width, height, samples)
}

fn header_field(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::Pgm("truncated header")),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Pgm("expected a decimal header field"));
    }
    core::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or(Error::Pgm("header field out of range"))
}
