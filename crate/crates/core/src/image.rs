//! Grayscale raster with real-valued samples.
//!
//! Samples live on the 8-bit scale (`0.0..=255.0` once quantized) but are kept
//! as `f64` so the embedding path stays exact until an image is written out or
//! attacked.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let expected = width * height;
        if samples.len() != expected {
            return Err(Error::SampleCount {
                width,
                height,
                expected,
                actual: samples.len(),
            });
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, alloc::vec![value; width * height])
    }

    /// Builds an image from `f(row, col)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                samples.push(f(r, c));
            }
        }
        Self::new(width, height, samples)
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| f64::from(b)).collect())
    }

    /// Copies a matrix into an image, one matrix row per image row.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        Self::from_fn(m.ncols(), m.nrows(), |r, c| m[(r, c)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.samples[row * self.width + col]
    }

    /// Side length when the image is square with a side divisible by 4.
    pub fn side(&self) -> Option<usize> {
        (self.width == self.height && self.width.is_multiple_of(4)).then_some(self.width)
    }

    pub fn require_normalized(&self) -> Result<usize> {
        self.side().ok_or(Error::NotNormalized {
            width: self.width,
            height: self.height,
        })
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.height, self.width, &self.samples)
    }

    /// Applies `f` to every sample.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.samples.iter().map(|&s| f(s)).collect(),
        )
    }

    /// Rounds half away from zero, then clamps to `[0, 255]`.
    pub fn quantize(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(|&s| quantize_sample(s)).collect(),
        }
    }

    pub fn is_quantized(&self) -> bool {
        self.samples.iter().all(|&s| quantize_sample(s) == s)
    }

    /// Quantized samples as bytes.
    pub fn to_u8(&self) -> Vec<u8> {
        self.samples
            .iter()
            .map(|&s| quantize_sample(s) as u8)
            .collect()
    }

    /// Returns the image unchanged when it is already square with a side
    /// divisible by 4; otherwise center-crops to the largest such square.
    pub fn normalize_geometry(&self) -> Result<Self> {
        let side = self.width.min(self.height) / 4 * 4;
        if side == 0 {
            return Err(Error::TooSmall {
                width: self.width,
                height: self.height,
            });
        }
        if self.width == side && self.height == side {
            return Ok(self.clone());
        }
        let x0 = (self.width - side) / 2;
        let y0 = (self.height - side) / 2;
        Self::from_fn(side, side, |r, c| self.get(y0 + r, x0 + c))
    }
}

#[inline]
pub fn quantize_sample(s: f64) -> f64 {
    libm::round(s).clamp(0.0, 255.0)
}
