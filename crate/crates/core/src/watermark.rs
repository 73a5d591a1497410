//! Coefficient-block generation and the block-diagonal watermark matrix.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{circulant_spectrum, gram, CoefficientBlock};

/// Candidate coefficients are drawn uniformly from `COEFF_RANGE`.
pub const COEFF_RANGE: core::ops::RangeInclusive<i32> = -9..=9;

/// Number of distinct integer candidates in `COEFF_RANGE⁴` that pass
/// [`is_admissible`]; a key can hold at most this many blocks.
pub const ADMISSIBLE_CANDIDATES: usize = 32_024;

/// RMS amplitude of the whole signature over the image, `‖W‖_F / side`.
///
/// The float-path distortion of an embedding is `alpha · rms`, so the default
/// gives 20·log10(255 / (0.06 · 6.2)) ≈ 56.7 dB at the default `alpha`.
pub const DEFAULT_SIGNATURE_RMS: f64 = 6.2;

const ORDERING_SLACK: f64 = 1e-12;

/// `δ4 ≥ δ3 ≥ δ2 ≥ δ1`, with a relative slack that absorbs rounding after scaling.
pub fn satisfies_ordering(delta: [f64; 4]) -> bool {
    let slack = ORDERING_SLACK * delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    delta.windows(2).all(|w| w[1] >= w[0] - slack)
}

/// Ordering constraint plus a nonzero detection signature (`δ3 > 0`).
pub fn is_admissible(c: &CoefficientBlock) -> bool {
    let d = circulant_spectrum(c);
    satisfies_ordering(d) && d[2] > 0.0
}

/// Draws `k` distinct admissible integer blocks by rejection sampling.
///
/// The stream is `ChaCha8Rng::seed_from_u64(seed)`; each candidate takes four
/// consecutive `random_range(COEFF_RANGE)` draws in coefficient order. About a
/// quarter of candidates are admissible.
pub fn generate_blocks(seed: u64, k: usize) -> Result<Vec<CoefficientBlock>> {
    if k == 0 {
        return Err(Error::NoBlocks);
    }
    if k > ADMISSIBLE_CANDIDATES {
        return Err(Error::TooManyBlocks {
            k,
            side: 4 * ADMISSIBLE_CANDIDATES,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks: Vec<CoefficientBlock> = Vec::with_capacity(k);
    while blocks.len() < k {
        let c: [f64; 4] = core::array::from_fn(|_| f64::from(rng.random_range(COEFF_RANGE)));
        let candidate = CoefficientBlock::new(c)?;
        if is_admissible(&candidate) && !blocks.contains(&candidate) {
            blocks.push(candidate);
        }
    }
    Ok(blocks)
}

/// Multiplies every block by one common factor so that the concatenated
/// spectrum has Euclidean norm `rms · side`.
pub fn scale_to_rms(
    blocks: &[CoefficientBlock],
    side: usize,
    rms: f64,
) -> Result<Vec<CoefficientBlock>> {
    if !(rms.is_finite() && rms > 0.0) {
        return Err(Error::InvalidStrength(rms));
    }
    let norm = spectrum_norm(blocks);
    if norm == 0.0 {
        return Err(Error::DegenerateBlock { index: 0 });
    }
    // the spectrum is quadratic in the coefficients
    let factor = libm::sqrt(rms * side as f64 / norm);
    Ok(blocks.iter().map(|b| b.scaled(factor)).collect())
}

fn spectrum_norm(blocks: &[CoefficientBlock]) -> f64 {
    libm::sqrt(
        blocks
            .iter()
            .flat_map(circulant_spectrum)
            .map(|d| d * d)
            .sum::<f64>(),
    )
}

/// The `k` coefficient blocks of a watermark and the side of the image it
/// is meant for.
#[derive(Debug, Clone, PartialEq)]
pub struct WatermarkSpec {
    blocks: Vec<CoefficientBlock>,
    image_side: usize,
}

impl WatermarkSpec {
    pub fn new(blocks: Vec<CoefficientBlock>, image_side: usize) -> Result<Self> {
        let k = blocks.len();
        if k == 0 {
            return Err(Error::NoBlocks);
        }
        if image_side == 0 || !image_side.is_multiple_of(4) {
            return Err(Error::NotNormalized {
                width: image_side,
                height: image_side,
            });
        }
        if 4 * k > image_side {
            return Err(Error::TooManyBlocks {
                k,
                side: image_side,
            });
        }
        for (index, b) in blocks.iter().enumerate() {
            let d = circulant_spectrum(b);
            if !satisfies_ordering(d) {
                return Err(Error::BlockOrdering { index });
            }
            if d[2] <= 0.0 {
                return Err(Error::DegenerateBlock { index });
            }
            if blocks[..index].contains(b) {
                return Err(Error::DuplicateBlock { index });
            }
        }
        Ok(Self { blocks, image_side })
    }

    /// Generated blocks, rescaled to the requested signature RMS.
    pub fn generate(seed: u64, k: usize, image_side: usize, signature_rms: f64) -> Result<Self> {
        if 4 * k > image_side {
            return Err(Error::TooManyBlocks {
                k,
                side: image_side,
            });
        }
        let blocks = generate_blocks(seed, k)?;
        Self::new(
            scale_to_rms(&blocks, image_side, signature_rms)?,
            image_side,
        )
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[CoefficientBlock] {
        &self.blocks
    }

    pub fn image_side(&self) -> usize {
        self.image_side
    }

    pub fn signature_rms(&self) -> f64 {
        spectrum_norm(&self.blocks) / self.image_side as f64
    }

    pub fn singulars(&self) -> Vec<f64> {
        watermark_singulars(&self.blocks, self.image_side)
            .expect("layout validated at construction")
    }

    pub fn assemble(&self) -> DMatrix<f64> {
        assemble_watermark(&self.blocks, self.image_side).expect("layout validated at construction")
    }
}

fn check_layout(blocks: &[CoefficientBlock], side: usize) -> Result<()> {
    if 4 * blocks.len() > side {
        return Err(Error::TooManyBlocks {
            k: blocks.len(),
            side,
        });
    }
    Ok(())
}

/// Square matrix of side `side`: `gram(c_i)` on the diagonal at offset
/// `4(i−1)`, zero elsewhere.
///
/// Only the layout is checked here; [`WatermarkSpec`] enforces admissibility.
pub fn assemble_watermark(blocks: &[CoefficientBlock], side: usize) -> Result<DMatrix<f64>> {
    check_layout(blocks, side)?;
    let mut w = DMatrix::zeros(side, side);
    for (i, b) in blocks.iter().enumerate() {
        w.fixed_view_mut::<4, 4>(4 * i, 4 * i).copy_from(&gram(b));
    }
    Ok(w)
}

/// Per-position watermark singular values: block spectra in label order,
/// concatenated, zero-padded to `side`.
pub fn watermark_singulars(blocks: &[CoefficientBlock], side: usize) -> Result<Vec<f64>> {
    check_layout(blocks, side)?;
    let mut out = alloc::vec![0.0; side];
    for (i, b) in blocks.iter().enumerate() {
        out[4 * i..4 * i + 4].copy_from_slice(&circulant_spectrum(b));
    }
    Ok(out)
}
