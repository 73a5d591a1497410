//! Deterministic image attacks for robustness benchmarks.
//!
//! Every attack quantizes its input to 8 bits first and returns a quantized
//! image of the same size. Stochastic attacks draw from
//! `ChaCha8Rng::seed_from_u64(seed)`, so a given [`AttackSpec`] reproduces
//! bit-exactly. Noise parameters use normalized intensities (`[0, 1]`), the
//! convention of common image toolboxes. Neighborhood filters replicate the
//! border pixels.
//!
//! Specs have a textual form, `name[:key=value,...]`, e.g.
//! `jpeg:quality=50`, `salt_pepper:density=0.02,seed=7` or
//! `translate:dx=20,dy=35,fill=wrap`.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::image::{quantize_sample, Image};

/// Baseline JPEG encode + decode, supplied by the caller.
pub trait JpegCodec {
    fn round_trip(&self, img: &Image, quality: u8) -> Result<Image>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranslateFill {
    /// Uncovered pixels become 0.
    Zero,
    /// Cyclic shift; pixels leaving one edge re-enter at the opposite edge.
    Wrap,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Attack {
    /// Quantization only.
    None,
    Jpeg {
        quality: u8,
    },
    SaltPepper {
        density: f64,
    },
    /// `out = in · (1 + u)`, `u` uniform, zero mean, given variance.
    Speckle {
        variance: f64,
    },
    GaussianNoise {
        mean: f64,
        variance: f64,
    },
    GaussianFilter {
        size: usize,
        sigma: f64,
    },
    MedianFilter {
        size: usize,
    },
    AverageFilter {
        size: usize,
    },
    /// Adaptive local-statistics (Wiener) denoising.
    Wiener {
        size: usize,
    },
    /// Unsharp masking: `in + amount · (in − gaussian(in, radius))`.
    Sharpen {
        amount: f64,
        radius: f64,
    },
    /// Counter-clockwise about the center, bilinear, cropped to the frame,
    /// uncovered pixels 0.
    Rotate {
        degrees: f64,
    },
    Translate {
        dx: i64,
        dy: i64,
        fill: TranslateFill,
    },
    CropCenter {
        size: usize,
        fill: u8,
    },
    HistogramEqualization,
    Gamma {
        gamma: f64,
    },
    /// Bilinear resize by `out_factor`, then by `in_factor`, then back to
    /// the original size if needed.
    ScaleCycle {
        out_factor: f64,
        in_factor: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub attack: Attack,
    pub seed: u64,
}

impl AttackSpec {
    pub fn new(attack: Attack) -> Self {
        Self { attack, seed: 0 }
    }

    pub fn with_seed(attack: Attack, seed: u64) -> Self {
        Self { attack, seed }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(
            self.attack,
            Attack::SaltPepper { .. } | Attack::Speckle { .. } | Attack::GaussianNoise { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        use Attack::*;
        let bad = |msg: &str| {
            Err(Error::InvalidAttack(format!(
                "{}: {msg}",
                self.attack.name()
            )))
        };
        match self.attack {
            Jpeg { quality } if !(1..=100).contains(&quality) => bad("quality must be in 1..=100"),
            SaltPepper { density } if !(0.0..=1.0).contains(&density) => {
                bad("density must be in [0, 1]")
            }
            Speckle { variance } if !(variance >= 0.0 && variance.is_finite()) => {
                bad("variance must be >= 0")
            }
            GaussianNoise { mean, variance }
                if !(variance >= 0.0 && variance.is_finite() && mean.is_finite()) =>
            {
                bad("variance must be >= 0")
            }
            GaussianFilter { size, sigma }
                if size % 2 == 0 || !(sigma > 0.0 && sigma.is_finite()) =>
            {
                bad("size must be odd and sigma positive")
            }
            MedianFilter { size } | AverageFilter { size } | Wiener { size } if size % 2 == 0 => {
                bad("window size must be odd")
            }
            Sharpen { amount, radius }
                if !(amount >= 0.0 && radius > 0.0 && amount.is_finite() && radius.is_finite()) =>
            {
                bad("amount must be >= 0 and radius positive")
            }
            Rotate { degrees } if !degrees.is_finite() => bad("angle must be finite"),
            Gamma { gamma } if !(gamma > 0.0 && gamma.is_finite()) => bad("gamma must be positive"),
            ScaleCycle {
                out_factor,
                in_factor,
            } if !(out_factor > 0.0
                && in_factor > 0.0
                && out_factor.is_finite()
                && in_factor.is_finite()) =>
            {
                bad("factors must be positive")
            }
            _ => Ok(()),
        }
    }

    /// Applies the attack. `jpeg` is only consulted for [`Attack::Jpeg`].
    pub fn apply(&self, img: &Image, jpeg: Option<&dyn JpegCodec>) -> Result<Image> {
        self.validate()?;
        let src = img.quantize();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let out = match self.attack {
            Attack::None => return Ok(src),
            Attack::Jpeg { quality } => {
                let codec =
                    jpeg.ok_or_else(|| Error::Codec("no JPEG codec available".to_owned()))?;
                codec.round_trip(&src, quality)?
            }
            Attack::SaltPepper { density } => salt_pepper(&src, density, &mut rng)?,
            Attack::Speckle { variance } => speckle(&src, variance, &mut rng)?,
            Attack::GaussianNoise { mean, variance } => {
                gaussian_noise(&src, mean, variance, &mut rng)?
            }
            Attack::GaussianFilter { size, sigma } => gaussian_filter(&src, size, sigma)?,
            Attack::MedianFilter { size } => median_filter(&src, size)?,
            Attack::AverageFilter { size } => average_filter(&src, size)?,
            Attack::Wiener { size } => wiener(&src, size)?,
            Attack::Sharpen { amount, radius } => sharpen(&src, amount, radius)?,
            Attack::Rotate { degrees } => rotate(&src, degrees)?,
            Attack::Translate { dx, dy, fill } => translate(&src, dx, dy, fill)?,
            Attack::CropCenter { size, fill } => crop_center(&src, size, fill)?,
            Attack::HistogramEqualization => histogram_equalization(&src)?,
            Attack::Gamma { gamma } => src.map(|v| 255.0 * libm::pow(v / 255.0, gamma))?,
            Attack::ScaleCycle {
                out_factor,
                in_factor,
            } => scale_cycle(&src, out_factor, in_factor)?,
        };
        Ok(out.quantize())
    }
}

impl Attack {
    pub fn name(&self) -> &'static str {
        match self {
            Attack::None => "none",
            Attack::Jpeg { .. } => "jpeg",
            Attack::SaltPepper { .. } => "salt_pepper",
            Attack::Speckle { .. } => "speckle",
            Attack::GaussianNoise { .. } => "gaussian_noise",
            Attack::GaussianFilter { .. } => "gaussian_filter",
            Attack::MedianFilter { .. } => "median",
            Attack::AverageFilter { .. } => "average",
            Attack::Wiener { .. } => "wiener",
            Attack::Sharpen { .. } => "sharpen",
            Attack::Rotate { .. } => "rotate",
            Attack::Translate { .. } => "translate",
            Attack::CropCenter { .. } => "crop_center",
            Attack::HistogramEqualization => "histeq",
            Attack::Gamma { .. } => "gamma",
            Attack::ScaleCycle { .. } => "scale_cycle",
        }
    }
}

impl fmt::Display for TranslateFill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TranslateFill::Zero => "zero",
            TranslateFill::Wrap => "wrap",
        })
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Attack::*;
        f.write_str(self.attack.name())?;
        match &self.attack {
            None | HistogramEqualization => Ok(()),
            Jpeg { quality } => write!(f, ":quality={quality}"),
            SaltPepper { density } => write!(f, ":density={density},seed={}", self.seed),
            Speckle { variance } => write!(f, ":variance={variance},seed={}", self.seed),
            GaussianNoise { mean, variance } => {
                write!(f, ":mean={mean},variance={variance},seed={}", self.seed)
            }
            GaussianFilter { size, sigma } => write!(f, ":size={size},sigma={sigma}"),
            MedianFilter { size } | AverageFilter { size } | Wiener { size } => {
                write!(f, ":size={size}")
            }
            Sharpen { amount, radius } => write!(f, ":amount={amount},radius={radius}"),
            Rotate { degrees } => write!(f, ":angle={degrees}"),
            Translate { dx, dy, fill } => write!(f, ":dx={dx},dy={dy},fill={fill}"),
            CropCenter { size, fill } => write!(f, ":size={size},fill={fill}"),
            Gamma { gamma } => write!(f, ":gamma={gamma}"),
            ScaleCycle {
                out_factor,
                in_factor,
            } => write!(f, ":out={out_factor},in={in_factor}"),
        }
    }
}

struct Params<'a> {
    attack: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn parse(attack: &'a str, body: &'a str) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                Error::InvalidAttack(format!("{attack}: expected key=value, got '{item}'"))
            })?;
            pairs.push((k.trim(), v.trim()));
        }
        Ok(Self { attack, pairs })
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn get<T: FromStr>(&self, key: &str, default: Option<T>) -> Result<T> {
        match self.raw(key) {
            Some(v) => v.parse().map_err(|_| {
                Error::InvalidAttack(format!("{}: bad value '{v}' for {key}", self.attack))
            }),
            None => default.ok_or_else(|| {
                Error::InvalidAttack(format!("{}: missing parameter {key}", self.attack))
            }),
        }
    }

    fn check_known(&self, known: &[&str]) -> Result<()> {
        match self
            .pairs
            .iter()
            .find(|(k, _)| !known.contains(k) && *k != "seed")
        {
            Some((k, _)) => Err(Error::InvalidAttack(format!(
                "{}: unknown parameter {k}",
                self.attack
            ))),
            Option::None => Ok(()),
        }
    }
}

impl FromStr for AttackSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let name = name.trim();
        let p = Params::parse(name, body)?;
        let (attack, known): (Attack, &[&str]) = match name {
            "none" => (Attack::None, &[]),
            "jpeg" => (
                Attack::Jpeg {
                    quality: p.get("quality", Some(75))?,
                },
                &["quality"],
            ),
            "salt_pepper" => (
                Attack::SaltPepper {
                    density: p.get("density", Some(0.05))?,
                },
                &["density"],
            ),
            "speckle" => (
                Attack::Speckle {
                    variance: p.get("variance", Some(0.04))?,
                },
                &["variance"],
            ),
            "gaussian_noise" => (
                Attack::GaussianNoise {
                    mean: p.get("mean", Some(0.0))?,
                    variance: p.get("variance", Some(0.01))?,
                },
                &["mean", "variance"],
            ),
            "gaussian_filter" => (
                Attack::GaussianFilter {
                    size: p.get("size", Some(3))?,
                    sigma: p.get("sigma", Some(0.5))?,
                },
                &["size", "sigma"],
            ),
            "median" => (
                Attack::MedianFilter {
                    size: p.get("size", Some(3))?,
                },
                &["size"],
            ),
            "average" => (
                Attack::AverageFilter {
                    size: p.get("size", Some(3))?,
                },
                &["size"],
            ),
            "wiener" => (
                Attack::Wiener {
                    size: p.get("size", Some(3))?,
                },
                &["size"],
            ),
            "sharpen" => (
                Attack::Sharpen {
                    amount: p.get("amount", Some(0.8))?,
                    radius: p.get("radius", Some(1.0))?,
                },
                &["amount", "radius"],
            ),
            "rotate" => (
                Attack::Rotate {
                    degrees: p.get("angle", Option::None)?,
                },
                &["angle"],
            ),
            "translate" => {
                let fill = match p.raw("fill").unwrap_or("zero") {
                    "zero" => TranslateFill::Zero,
                    "wrap" => TranslateFill::Wrap,
                    other => {
                        return Err(Error::InvalidAttack(format!(
                            "translate: unknown fill '{other}'"
                        )))
                    }
                };
                (
                    Attack::Translate {
                        dx: p.get("dx", Option::None)?,
                        dy: p.get("dy", Option::None)?,
                        fill,
                    },
                    &["dx", "dy", "fill"],
                )
            }
            "crop_center" => (
                Attack::CropCenter {
                    size: p.get("size", Option::None)?,
                    fill: p.get("fill", Some(0))?,
                },
                &["size", "fill"],
            ),
            "histeq" => (Attack::HistogramEqualization, &[]),
            "gamma" => (
                Attack::Gamma {
                    gamma: p.get("gamma", Option::None)?,
                },
                &["gamma"],
            ),
            "scale_cycle" => (
                Attack::ScaleCycle {
                    out_factor: p.get("out", Some(0.5))?,
                    in_factor: p.get("in", Some(2.0))?,
                },
                &["out", "in"],
            ),
            other => return Err(Error::InvalidAttack(format!("unknown attack '{other}'"))),
        };
        p.check_known(known)?;
        let spec = AttackSpec {
            attack,
            seed: p.get("seed", Some(0))?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn salt_pepper(img: &Image, density: f64, rng: &mut ChaCha8Rng) -> Result<Image> {
    img.map(|v| {
        let r: f64 = rng.random();
        if r < density / 2.0 {
            0.0
        } else if r < density {
            255.0
        } else {
            v
        }
    })
}

fn speckle(img: &Image, variance: f64, rng: &mut ChaCha8Rng) -> Result<Image> {
    // U(−a, a) has variance a²/3
    let a = libm::sqrt(3.0 * variance);
    img.map(|v| {
        let u: f64 = rng.random_range(-1.0..1.0) * a;
        v * (1.0 + u)
    })
}

fn gaussian_noise(img: &Image, mean: f64, variance: f64, rng: &mut ChaCha8Rng) -> Result<Image> {
    let sd = libm::sqrt(variance);
    img.map(|v| {
        let z: f64 = rng.sample(StandardNormal);
        255.0 * (v / 255.0 + mean + sd * z)
    })
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Separable correlation with a symmetric 1-D kernel, replicated borders.
fn separable(img: &Image, kernel: &[f64]) -> Result<Image> {
    let (w, h) = img.dims();
    let half = (kernel.len() / 2) as isize;
    let src = img.samples();
    let mut tmp = alloc::vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            tmp[r * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * src[r * w + clamp_index(c as isize + i as isize - half, w)])
                .sum();
        }
    }
    let mut out = alloc::vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            out[r * w + c] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * tmp[clamp_index(r as isize + i as isize - half, h) * w + c])
                .sum();
        }
    }
    Image::new(w, h, out)
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let x = i as f64 - half;
            libm::exp(-x * x / (2.0 * sigma * sigma))
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

fn gaussian_filter(img: &Image, size: usize, sigma: f64) -> Result<Image> {
    separable(img, &gaussian_kernel(size, sigma))
}

fn average_filter(img: &Image, size: usize) -> Result<Image> {
    separable(img, &alloc::vec![1.0 / size as f64; size])
}

fn median_filter(img: &Image, size: usize) -> Result<Image> {
    let (w, h) = img.dims();
    let half = (size / 2) as isize;
    let mut window = Vec::with_capacity(size * size);
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h as isize {
        for c in 0..w as isize {
            window.clear();
            for dr in -half..=half {
                for dc in -half..=half {
                    window.push(img.get(clamp_index(r + dr, h), clamp_index(c + dc, w)));
                }
            }
            let mid = window.len() / 2;
            let (_, m, _) = window.select_nth_unstable_by(mid, f64::total_cmp);
            out.push(*m);
        }
    }
    Image::new(w, h, out)
}

fn wiener(img: &Image, size: usize) -> Result<Image> {
    let mean = average_filter(img, size)?;
    let sq = img.map(|v| v * v)?;
    let mean_sq = average_filter(&sq, size)?;
    let var: Vec<f64> = mean
        .samples()
        .iter()
        .zip(mean_sq.samples())
        .map(|(m, m2)| (m2 - m * m).max(0.0))
        .collect();
    let noise = var.iter().sum::<f64>() / var.len() as f64;
    let out = img
        .samples()
        .iter()
        .zip(mean.samples())
        .zip(&var)
        .map(|((v, m), s2)| {
            let denom = s2.max(noise);
            if denom == 0.0 {
                *m
            } else {
                m + (s2 - noise).max(0.0) / denom * (v - m)
            }
        })
        .collect();
    Image::new(img.width(), img.height(), out)
}

fn sharpen(img: &Image, amount: f64, radius: f64) -> Result<Image> {
    let size = 2 * libm::ceil(2.0 * radius) as usize + 1;
    let blurred = gaussian_filter(img, size, radius)?;
    let out = img
        .samples()
        .iter()
        .zip(blurred.samples())
        .map(|(v, b)| v + amount * (v - b))
        .collect();
    Image::new(img.width(), img.height(), out)
}

/// Bilinear sample where out-of-frame neighbors read as 0.
fn sample_zero(img: &Image, x: f64, y: f64) -> f64 {
    let (w, h) = img.dims();
    let x0 = libm::floor(x);
    let y0 = libm::floor(y);
    let fx = x - x0;
    let fy = y - y0;
    let px = |xi: f64, yi: f64| {
        if xi < 0.0 || yi < 0.0 || xi >= w as f64 || yi >= h as f64 {
            0.0
        } else {
            img.get(yi as usize, xi as usize)
        }
    };
    let top = px(x0, y0) * (1.0 - fx) + if fx > 0.0 { px(x0 + 1.0, y0) * fx } else { 0.0 };
    let bottom = if fy > 0.0 {
        (px(x0, y0 + 1.0) * (1.0 - fx)
            + if fx > 0.0 {
                px(x0 + 1.0, y0 + 1.0) * fx
            } else {
                0.0
            })
            * fy
    } else {
        0.0
    };
    top * (1.0 - fy) + bottom
}

fn rotate(img: &Image, degrees: f64) -> Result<Image> {
    let (w, h) = img.dims();
    let theta = degrees.to_radians();
    let (sin, cos) = (libm::sin(theta), libm::cos(theta));
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    Image::from_fn(w, h, |r, c| {
        let dx = c as f64 - cx;
        let dy = r as f64 - cy;
        // inverse map, y axis pointing down
        let sx = cx + dx * cos - dy * sin;
        let sy = cy + dx * sin + dy * cos;
        sample_zero(img, sx, sy)
    })
}

fn translate(img: &Image, dx: i64, dy: i64, fill: TranslateFill) -> Result<Image> {
    let (w, h) = img.dims();
    Image::from_fn(w, h, |r, c| {
        let sr = r as i64 - dy;
        let sc = c as i64 - dx;
        match fill {
            TranslateFill::Wrap => img.get(
                sr.rem_euclid(h as i64) as usize,
                sc.rem_euclid(w as i64) as usize,
            ),
            TranslateFill::Zero => {
                if (0..h as i64).contains(&sr) && (0..w as i64).contains(&sc) {
                    img.get(sr as usize, sc as usize)
                } else {
                    0.0
                }
            }
        }
    })
}

fn crop_center(img: &Image, size: usize, fill: u8) -> Result<Image> {
    let (w, h) = img.dims();
    let sw = size.min(w);
    let sh = size.min(h);
    let (x0, y0) = ((w - sw) / 2, (h - sh) / 2);
    Image::from_fn(w, h, |r, c| {
        if (y0..y0 + sh).contains(&r) && (x0..x0 + sw).contains(&c) {
            f64::from(fill)
        } else {
            img.get(r, c)
        }
    })
}

fn histogram_equalization(img: &Image) -> Result<Image> {
    let mut hist = [0usize; 256];
    for &v in img.samples() {
        hist[quantize_sample(v) as usize] += 1;
    }
    let n = img.samples().len();
    let mut cdf = [0usize; 256];
    let mut acc = 0;
    for (i, count) in hist.iter().enumerate() {
        acc += count;
        cdf[i] = acc;
    }
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if n == cdf_min {
        return Ok(img.clone());
    }
    let lut: Vec<f64> = cdf
        .iter()
        .map(|&c| libm::round(c.saturating_sub(cdf_min) as f64 / (n - cdf_min) as f64 * 255.0))
        .collect();
    img.map(|v| lut[quantize_sample(v) as usize])
}

/// Bilinear resize with pixel-center alignment and replicated borders.
fn resize(img: &Image, new_w: usize, new_h: usize) -> Result<Image> {
    let (w, h) = img.dims();
    if (w, h) == (new_w, new_h) {
        return Ok(img.clone());
    }
    let sx = w as f64 / new_w as f64;
    let sy = h as f64 / new_h as f64;
    Image::from_fn(new_w, new_h, |r, c| {
        let x = ((c as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
        let y = ((r as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let (x0, y0) = (libm::floor(x) as usize, libm::floor(y) as usize);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let top = img.get(y0, x0) * (1.0 - fx) + img.get(y0, x1) * fx;
        let bottom = img.get(y1, x0) * (1.0 - fx) + img.get(y1, x1) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

fn scaled_dim(n: usize, factor: f64) -> usize {
    (libm::round(n as f64 * factor) as usize).max(1)
}

fn scale_cycle(img: &Image, out_factor: f64, in_factor: f64) -> Result<Image> {
    let (w, h) = img.dims();
    let small = resize(img, scaled_dim(w, out_factor), scaled_dim(h, out_factor))?;
    let back = resize(
        &small,
        scaled_dim(small.width(), in_factor),
        scaled_dim(small.height(), in_factor),
    )?;
    resize(&back, w, h)
}

impl From<Attack> for AttackSpec {
    fn from(attack: Attack) -> Self {
        AttackSpec::new(attack)
    }
}

/// Parses a list of attack specs, one per entry.
pub fn parse_all<'a>(specs: impl IntoIterator<Item = &'a str>) -> Result<Vec<AttackSpec>> {
    specs.into_iter().map(str::parse).collect()
}
