//! Fidelity (MSE/PSNR) and watermark similarity (NC).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::image::Image;

const PEAK: f64 = 255.0;

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.samples().len() as f64)
}

/// `10·log10(255² / MSE)` in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * libm::log10(PEAK * PEAK / m))
}

/// Both correlation variants between an embedded and an extracted watermark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScore {
    /// `(1 / (h·w)) · Σ W·W′`, without energy normalization.
    pub nc_raw: f64,
    /// `Σ W·W′ / sqrt(Σ W² · Σ W′²)`, in `[−1, 1]`.
    pub nc_norm: f64,
}

/// Normalized correlation. Fails with [`Error::ZeroEnergy`] (carrying the raw
/// value) when either input is all zeros.
pub fn nc(w: &DMatrix<f64>, wp: &DMatrix<f64>) -> Result<SimilarityScore> {
    if w.shape() != wp.shape() {
        return Err(Error::DimensionMismatch {
            left: w.shape(),
            right: wp.shape(),
        });
    }
    let (mut cross, mut ew, mut ewp) = (0.0, 0.0, 0.0);
    for (a, b) in w.iter().zip(wp.iter()) {
        cross += a * b;
        ew += a * a;
        ewp += b * b;
    }
    let nc_raw = cross / w.len() as f64;
    if ew == 0.0 || ewp == 0.0 {
        return Err(Error::ZeroEnergy { nc_raw });
    }
    let nc_norm = (cross / libm::sqrt(ew * ewp)).clamp(-1.0, 1.0);
    Ok(SimilarityScore { nc_raw, nc_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn psnr_examples() {
        let black = Image::filled(4, 4, 0.0).unwrap();
        let white = Image::filled(4, 4, 255.0).unwrap();
        assert_eq!(psnr(&black, &black).unwrap(), f64::INFINITY);
        assert!(psnr(&black, &white).unwrap().abs() < 1e-12);
        let mut s = vec![0.0; 16];
        s[5] = 16.0;
        let one = Image::new(4, 4, s).unwrap();
        // MSE = 16² / 16
        let expected = 10.0 * (255.0f64 * 255.0 / 16.0).log10();
        assert!((psnr(&black, &one).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 36.09).abs() < 0.01);
    }

    #[test]
    fn psnr_dimension_mismatch() {
        let a = Image::filled(4, 4, 0.0).unwrap();
        let b = Image::filled(4, 8, 0.0).unwrap();
        assert!(matches!(psnr(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn nc_examples() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, -3.0]);
        assert!((nc(&w, &w).unwrap().nc_norm - 1.0).abs() < 1e-15);
        let ones = DMatrix::repeat(2, 2, 1.0);
        assert_eq!(nc(&ones, &ones).unwrap().nc_raw, 1.0);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 5.0]);
        assert_eq!(nc(&a, &b).unwrap().nc_norm, 0.0);
        assert_eq!(nc(&w, &(-&w)).unwrap().nc_norm, -1.0);
    }

    #[test]
    fn nc_zero_energy_keeps_raw() {
        let z = DMatrix::zeros(2, 2);
        let w = DMatrix::repeat(2, 2, 1.0);
        assert_eq!(nc(&w, &z), Err(Error::ZeroEnergy { nc_raw: 0.0 }));
        assert!(matches!(
            nc(&w, &DMatrix::zeros(3, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
