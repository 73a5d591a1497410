//! Blind watermarking of grayscale images through circulant-block singular
//! values.
//!
//! The watermark is a block-diagonal matrix of 4×4 circulant blocks. Its
//! singular values are added, scaled by `alpha`, to the leading singular
//! values of the host. Detection only needs the host's leading singular
//! values and `alpha`, because every circulant block shares the constant
//! eigenbasis [`linalg::u0`].
//!
//! This crate has no IO. It builds without `std` (with `alloc`); see the
//! `circmark` crate for file formats and the command line tool.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod attacks;
pub mod codec;
pub mod error;
pub mod image;
pub mod linalg;
pub mod metrics;
pub mod pgm;
pub mod watermark;

pub use attacks::{Attack, AttackSpec, JpegCodec, TranslateFill};
pub use codec::{
    detect, detect_and_extract, embed, extract, DetectionKey, DetectionReport, Embedder, Embedding,
    WatermarkKey, DEFAULT_ALPHA, DEFAULT_TOLERANCE,
};
pub use error::{Error, Result};
pub use image::Image;
pub use linalg::CoefficientBlock;
pub use metrics::{nc, psnr, SimilarityScore};
pub use watermark::WatermarkSpec;
