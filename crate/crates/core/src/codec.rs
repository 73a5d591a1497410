//! Embedding into host singular values, blind detection and extraction.
//!
//! Embedding adds `alpha · ∂′` to the host singular values `S` and rebuilds the
//! image from the host singular vectors. Detection only needs the watermarked
//! image, `alpha` and the leading `4k` host singular values: the recovered
//! sequence is `x_i = (S*_i − S_i) / alpha`, and every circulant block leaves
//! the signature `x_{4i−1} = x_{4i}`. Extraction conjugates `diag(x)` by the
//! constant basis [`u0`](crate::linalg::u0) block by block.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::linalg::{
    conjugate_by_u0, reconstruct, singular_values, svd, CoefficientBlock, SvdTriple,
};
use crate::watermark::WatermarkSpec;

pub const DEFAULT_ALPHA: f64 = 0.06;
/// Detection tolerance for attacked images.
pub const DEFAULT_TOLERANCE: f64 = 0.05;
/// Detection tolerance for unattacked float-path verification.
pub const CLEAN_TOLERANCE: f64 = 1e-6;
const TOLERANCE_FLOOR: f64 = 1e-9;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Everything detection and extraction read: `alpha` and the leading `4k`
/// host singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionKey {
    alpha: f64,
    image_side: usize,
    s_prefix: Vec<f64>,
}

impl DetectionKey {
    pub fn new(alpha: f64, image_side: usize, s_prefix: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        if s_prefix.is_empty() || !s_prefix.len().is_multiple_of(4) {
            return Err(Error::InvalidKey(
                "singular value prefix length must be a positive multiple of 4",
            ));
        }
        if s_prefix.len() > image_side {
            return Err(Error::TooManyBlocks {
                k: s_prefix.len() / 4,
                side: image_side,
            });
        }
        if s_prefix.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::InvalidKey(
                "singular values must be finite and nonnegative",
            ));
        }
        if s_prefix.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidKey(
                "singular value prefix must be non-increasing",
            ));
        }
        Ok(Self {
            alpha,
            image_side,
            s_prefix,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn image_side(&self) -> usize {
        self.image_side
    }

    pub fn k(&self) -> usize {
        self.s_prefix.len() / 4
    }

    pub fn s_prefix(&self) -> &[f64] {
        &self.s_prefix
    }
}

/// Full key: the detection part plus the embedded blocks, which are only
/// needed to score an extraction against the original signature.
#[derive(Debug, Clone, PartialEq)]
pub struct WatermarkKey {
    detection: DetectionKey,
    blocks: Vec<CoefficientBlock>,
    y_monotone_warning: bool,
}

impl WatermarkKey {
    pub fn new(
        detection: DetectionKey,
        blocks: Vec<CoefficientBlock>,
        y_monotone_warning: bool,
    ) -> Result<Self> {
        if blocks.len() != detection.k() {
            return Err(Error::InvalidKey(
                "block count does not match the singular value prefix",
            ));
        }
        // validates block admissibility and layout
        WatermarkSpec::new(blocks.clone(), detection.image_side)?;
        Ok(Self {
            detection,
            blocks,
            y_monotone_warning,
        })
    }

    pub fn detection(&self) -> &DetectionKey {
        &self.detection
    }

    pub fn alpha(&self) -> f64 {
        self.detection.alpha
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn image_side(&self) -> usize {
        self.detection.image_side
    }

    pub fn s_prefix(&self) -> &[f64] {
        &self.detection.s_prefix
    }

    pub fn blocks(&self) -> &[CoefficientBlock] {
        &self.blocks
    }

    /// Set when the perturbed singular values were not strictly decreasing,
    /// so re-decomposing the watermarked image permutes the key alignment.
    pub fn y_monotone_warning(&self) -> bool {
        self.y_monotone_warning
    }

    pub fn spec(&self) -> WatermarkSpec {
        WatermarkSpec::new(self.blocks.clone(), self.detection.image_side)
            .expect("validated at construction")
    }
}

/// Result of [`embed`]: the unquantized watermarked image and its key.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub image: Image,
    pub key: WatermarkKey,
}

/// Host decomposition, reusable across watermarks and scaling factors.
#[derive(Debug, Clone)]
pub struct Embedder {
    side: usize,
    svd: SvdTriple,
}

impl Embedder {
    pub fn new(host: &Image) -> Result<Self> {
        let side = host.require_normalized()?;
        Ok(Self {
            side,
            svd: svd(&host.to_matrix())?,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn host_singulars(&self) -> &[f64] {
        &self.svd.s
    }

    /// `Y_i = S_i + alpha · marks_i` for the leading entries of `marks`,
    /// `Y_i = S_i` beyond.
    pub fn perturbed(&self, marks: &[f64], alpha: f64) -> Result<Vec<f64>> {
        check_alpha(alpha)?;
        if marks.len() > self.side {
            return Err(Error::DimensionMismatch {
                left: (marks.len(), 1),
                right: (self.side, 1),
            });
        }
        let mut y = self.svd.s.clone();
        for (yi, m) in y.iter_mut().zip(marks) {
            *yi += alpha * m;
        }
        Ok(y)
    }

    /// `U · diag(Y) · Vᵗ` for an arbitrary mark vector.
    pub fn embed_singulars(&self, marks: &[f64], alpha: f64) -> Result<Image> {
        let y = self.perturbed(marks, alpha)?;
        Image::from_matrix(&reconstruct(&self.svd.u, &y, &self.svd.v))
    }

    pub fn embed(&self, spec: &WatermarkSpec, alpha: f64) -> Result<Embedding> {
        if spec.image_side() != self.side {
            return Err(Error::DimensionMismatch {
                left: (spec.image_side(), spec.image_side()),
                right: (self.side, self.side),
            });
        }
        let y = self.perturbed(&spec.singulars(), alpha)?;
        let warning = !strictly_decreasing_prefix(&y, 4 * spec.k() + 1);
        let image = Image::from_matrix(&reconstruct(&self.svd.u, &y, &self.svd.v))?;
        let detection = DetectionKey::new(alpha, self.side, self.svd.s[..4 * spec.k()].to_vec())?;
        let key = WatermarkKey::new(detection, spec.blocks().to_vec(), warning)?;
        Ok(Embedding { image, key })
    }
}

/// Whether `y[0] > y[1] > … ` holds over the first `len` entries.
pub fn strictly_decreasing_prefix(y: &[f64], len: usize) -> bool {
    y[..len.min(y.len())].windows(2).all(|w| w[0] > w[1])
}

/// Embeds `spec` into `host` with scaling factor `alpha`.
pub fn embed(host: &Image, spec: &WatermarkSpec, alpha: f64) -> Result<Embedding> {
    Embedder::new(host)?.embed(spec, alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    /// `x_i = (S*_i − S_i) / alpha`, length `4k`.
    pub x: Vec<f64>,
    pub block_pass: Vec<bool>,
    pub detected: bool,
    pub extracted: Option<DMatrix<f64>>,
}

/// Relative closeness test on the pair `(x_{4i−1}, x_{4i})`. A pair that is
/// zero to within the floor carries no signature and fails, so the unmarked
/// host never matches its own key.
pub fn block_passes(x3: f64, x4: f64, tol: f64) -> bool {
    let scale = x3.abs().max(x4.abs());
    scale > TOLERANCE_FLOOR && (x3 - x4).abs() <= tol * scale
}

/// The recovered sequence `x` for `astar` under `key`.
pub fn recover(astar: &Image, key: &DetectionKey) -> Result<Vec<f64>> {
    check_alpha(key.alpha)?;
    let side = key.image_side;
    if astar.dims() != (side, side) {
        return Err(Error::DimensionMismatch {
            left: astar.dims(),
            right: (side, side),
        });
    }
    let s_star = singular_values(&astar.to_matrix())?;
    Ok(key
        .s_prefix
        .iter()
        .zip(&s_star)
        .map(|(s, s_star)| (s_star - s) / key.alpha)
        .collect())
}

fn report(x: Vec<f64>, tol: f64, extracted: Option<DMatrix<f64>>) -> Result<DetectionReport> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidKey(
            "tolerance must be finite and nonnegative",
        ));
    }
    let block_pass: Vec<bool> = x
        .chunks_exact(4)
        .map(|b| block_passes(b[2], b[3], tol))
        .collect();
    let detected = block_pass.iter().all(|&p| p);
    Ok(DetectionReport {
        x,
        block_pass,
        detected,
        extracted,
    })
}

pub fn detect(astar: &Image, key: &DetectionKey, tol: f64) -> Result<DetectionReport> {
    report(recover(astar, key)?, tol, None)
}

/// [`detect`] plus the extracted watermark, from one decomposition.
pub fn detect_and_extract(astar: &Image, key: &DetectionKey, tol: f64) -> Result<DetectionReport> {
    let x = recover(astar, key)?;
    let w = watermark_from_sequence(&x, key.image_side)?;
    report(x, tol, Some(w))
}

pub fn extract(astar: &Image, key: &DetectionKey) -> Result<DMatrix<f64>> {
    watermark_from_sequence(&recover(astar, key)?, key.image_side)
}

/// Block-diagonal `W*` with block `i` equal to `u0 · diag(x_{4i−3..4i}) · u0ᵗ`.
pub fn watermark_from_sequence(x: &[f64], side: usize) -> Result<DMatrix<f64>> {
    if !x.len().is_multiple_of(4) || x.len() > side {
        return Err(Error::DimensionMismatch {
            left: (x.len(), 1),
            right: (side, 1),
        });
    }
    let mut w = DMatrix::zeros(side, side);
    for (i, b) in x.chunks_exact(4).enumerate() {
        w.fixed_view_mut::<4, 4>(4 * i, 4 * i)
            .copy_from(&conjugate_by_u0([b[0], b[1], b[2], b[3]]));
    }
    Ok(w)
}
