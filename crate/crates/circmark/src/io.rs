//! Image files: binary PGM (P5) and 8-bit PNG.
//!
//! Loading sniffs the content; saving picks the format from the extension.
//! Color inputs are converted with luma weights 0.299 R + 0.587 G + 0.114 B,
//! rounded to the nearest level.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use circmark_core::{pgm, Image};
use image::{DynamicImage, GrayImage, ImageFormat};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Pgm,
    Png,
}

impl Format {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "pgm" => Some(Format::Pgm),
            "png" => Some(Format::Png),
            _ => None,
        }
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format { message, .. } => Error::Format {
            path: path.to_owned(),
            message,
        },
        other => other,
    })
}

pub fn decode(bytes: &[u8]) -> Result<Image> {
    if pgm::is_pgm(bytes) {
        return Ok(pgm::decode(bytes)?);
    }
    let dynamic = image::load_from_memory(bytes).map_err(|e| Error::Format {
        path: "<memory>".into(),
        message: e.to_string(),
    })?;
    Ok(to_gray(dynamic)?)
}

fn to_gray(img: DynamicImage) -> circmark_core::Result<Image> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if let DynamicImage::ImageLuma8(g) = img {
        return Image::from_u8(w, h, g.as_raw());
    }
    let rgb = img.to_rgb8();
    let samples = rgb.pixels().map(|p| luma(p.0)).collect();
    Image::new(w, h, samples)
}

/// Rounded 8-bit luma; `(255, 0, 0)` maps to 76.
pub fn luma([r, g, b]: [u8; 3]) -> f64 {
    (0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)).round()
}

/// Writes the quantized image; the format follows the file extension.
pub fn save_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let format = Format::from_path(path).ok_or_else(|| Error::Format {
        path: path.to_owned(),
        message: "unsupported output format, use .pgm or .png".into(),
    })?;
    let bytes = encode(img, format)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode(img: &Image, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Pgm => Ok(pgm::encode(img)),
        Format::Png => {
            let gray = gray_image(img);
            let mut out = Vec::new();
            gray.write_to(&mut Cursor::new(&mut out), ImageFormat::Png)
                .map_err(|e| Error::Format {
                    path: "<memory>".into(),
                    message: e.to_string(),
                })?;
            Ok(out)
        }
    }
}

pub(crate) fn gray_image(img: &Image) -> GrayImage {
    GrayImage::from_raw(img.width() as u32, img.height() as u32, img.to_u8())
        .expect("sample count matches dimensions")
}
