//! Circulant blocks, their closed-form spectrum, and a general SVD.
//!
//! For `c = (c1, c2, c3, c4)` the Gram matrix `C·Cᵗ` of the circulant
//! `C = cir(c)` is diagonalized by the constant orthogonal matrix [`u0`], with
//! eigenvalues
//!
//! ```text
//! δ1 = (c1 + c2 + c3 + c4)²
//! δ2 = (c1 − c2 + c3 − c4)²
//! δ3 = δ4 = (c1 − c3)² + (c2 − c4)²
//! ```
//!
//! Because `C·Cᵗ` is symmetric PSD this eigendecomposition is also its SVD,
//! which is what makes detection blind: the singular vectors never depend on
//! the watermark.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix4};

use crate::error::{Error, Result};

/// Generating vector of one 4×4 circulant block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBlock([f64; 4]);

impl CoefficientBlock {
    pub fn new(c: [f64; 4]) -> Result<Self> {
        if c.iter().all(|v| v.is_finite()) {
            Ok(Self(c))
        } else {
            Err(Error::NonFiniteCoefficient)
        }
    }

    pub fn coeffs(&self) -> [f64; 4] {
        self.0
    }

    pub fn circulant(&self) -> Matrix4<f64> {
        circulant(self)
    }

    pub fn spectrum(&self) -> [f64; 4] {
        circulant_spectrum(self)
    }

    pub fn gram(&self) -> Matrix4<f64> {
        gram(self)
    }

    pub(crate) fn scaled(&self, factor: f64) -> Self {
        Self(self.0.map(|v| v * factor))
    }
}

/// Circulant matrix whose first row is `c` and whose every following row is
/// the previous one shifted right by one position.
pub fn circulant(c: &CoefficientBlock) -> Matrix4<f64> {
    let c = c.0;
    Matrix4::from_fn(|r, col| c[(col + 4 - r) % 4])
}

/// Eigenvalues of `C·Cᵗ` in label order `(δ1, δ2, δ3, δ4)`, not sorted.
pub fn circulant_spectrum(c: &CoefficientBlock) -> [f64; 4] {
    let [c1, c2, c3, c4] = c.0;
    let d1 = (c1 + c2 + c3 + c4) * (c1 + c2 + c3 + c4);
    let d2 = (c1 - c2 + c3 - c4) * (c1 - c2 + c3 - c4);
    let d3 = (c1 - c3) * (c1 - c3) + (c2 - c4) * (c2 - c4);
    [d1, d2, d3, d3]
}

/// The constant eigenvector basis of every 4×4 circulant Gram matrix; column
/// `j` pairs with `δ(j+1)`.
pub fn u0() -> Matrix4<f64> {
    let h = 0.5;
    let r = core::f64::consts::FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let m = Matrix4::new(
        h, -h, 0.0, -r,
        h,  h,  -r, 0.0,
        h, -h, 0.0,   r,
        h,  h,   r, 0.0,
    );
    m
}

pub fn gram(c: &CoefficientBlock) -> Matrix4<f64> {
    let m = circulant(c);
    m * m.transpose()
}

/// `u0() · diag(d) · u0()ᵗ`.
pub fn conjugate_by_u0(d: [f64; 4]) -> Matrix4<f64> {
    let u = u0();
    let scaled = Matrix4::from_fn(|r, c| u[(r, c)] * d[c]);
    scaled * u.transpose()
}

/// `A = U · diag(s) · Vᵗ` with `s` non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

impl SvdTriple {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        reconstruct(&self.u, &self.s, &self.v)
    }
}

/// `U · diag(s) · Vᵗ`.
pub fn reconstruct(u: &DMatrix<f64>, s: &[f64], v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut us = u.clone();
    for (j, mut col) in us.column_iter_mut().enumerate() {
        col *= s[j];
    }
    us * v.transpose()
}

fn check_finite(a: &DMatrix<f64>) -> Result<()> {
    if a.is_empty() {
        return Err(Error::EmptyImage);
    }
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteMatrix)
    }
}

/// Thin SVD with singular values sorted non-increasing.
///
/// Columns are sign-normalized so that the largest-magnitude entry of every
/// left singular vector is nonnegative (ties go to the lowest row index); the
/// matching right singular vector is flipped with it.
pub fn svd(a: &DMatrix<f64>) -> Result<SvdTriple> {
    check_finite(a)?;
    let dec = a
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or(Error::SvdFailed)?;
    let (u, v_t) = match (dec.u, dec.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::SvdFailed),
    };
    let s = dec.singular_values;
    let order = descending_order(&s);
    let mut out_u = DMatrix::zeros(u.nrows(), order.len());
    let mut out_v = DMatrix::zeros(v_t.ncols(), order.len());
    let mut out_s = Vec::with_capacity(order.len());
    for (dst, &src) in order.iter().enumerate() {
        let ucol = u.column(src);
        let sign = sign_of_dominant(ucol.iter().copied());
        out_u.set_column(dst, &(ucol * sign));
        out_v.set_column(dst, &(v_t.row(src).transpose() * sign));
        out_s.push(s[src].max(0.0));
    }
    Ok(SvdTriple {
        u: out_u,
        s: out_s,
        v: out_v,
    })
}

/// Singular values only, sorted non-increasing.
pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_finite(a)?;
    let s = a
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or(Error::SvdFailed)?
        .singular_values;
    Ok(descending_order(&s)
        .into_iter()
        .map(|i| s[i].max(0.0))
        .collect())
}

fn descending_order(s: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    order
}

fn sign_of_dominant(col: impl Iterator<Item = f64>) -> f64 {
    let mut best = 0.0f64;
    for v in col {
        if v.abs() > best.abs() {
            best = v;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}
