//! Baseline JPEG round trip for the `jpeg` attack.

use circmark_core::{Error as CoreError, Image, JpegCodec};
use image::codecs::jpeg::JpegEncoder;
use image::{ExtendedColorType, ImageFormat};

#[derive(Debug, Clone, Copy, Default)]
pub struct ImageJpeg;

impl JpegCodec for ImageJpeg {
    fn round_trip(&self, img: &Image, quality: u8) -> circmark_core::Result<Image> {
        let codec_err = |e: image::ImageError| CoreError::Codec(e.to_string());
        let mut buf = Vec::new();
        JpegEncoder::new_with_quality(&mut buf, quality)
            .encode(
                &img.to_u8(),
                img.width() as u32,
                img.height() as u32,
                ExtendedColorType::L8,
            )
            .map_err(codec_err)?;
        let decoded =
            image::load_from_memory_with_format(&buf, ImageFormat::Jpeg).map_err(codec_err)?;
        let gray = decoded.to_luma8();
        Image::from_u8(gray.width() as usize, gray.height() as usize, gray.as_raw())
    }
}
