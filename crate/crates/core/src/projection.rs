//! The Fourier-space projections onto mean-zero gradient fields and their
//! complement, applied matrix-free as transform / multiply / inverse
//! transform.
//!
//! For each nonzero frequency k the gradient projection acts as
//! `Fhat(k) -> k (k . Fhat(k)) / |k|^2`; the k = 0 mode is annihilated
//! (uniform fields belong to the complement). Only the direction of k
//! matters, so the signed frequency convention of [`GridGeometry`] covers
//! Nyquist modes like any other.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{fft_forward, fft_inverse, Field, GridGeometry, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaKind {
    Gamma1,
    Gamma2,
}

/// One of the two complementary projections, bound to a grid shape.
#[derive(Debug, Clone)]
pub struct GammaOperator {
    geometry: GridGeometry,
    kind: GammaKind,
}

impl GammaOperator {
    pub fn new(geometry: GridGeometry, kind: GammaKind) -> Self {
        Self { geometry, kind }
    }

    pub fn kind(&self) -> GammaKind {
        self.kind
    }

    pub fn apply(&self, field: &Field) -> Result<Field> {
        if field.geometry() != &self.geometry {
            return Err(Error::ShapeMismatch(
                "projection geometry differs from field geometry".into(),
            ));
        }
        match self.kind {
            GammaKind::Gamma1 => apply_gamma1(field),
            GammaKind::Gamma2 => apply_gamma2(field),
        }
    }
}

fn check_components(field: &Field) -> Result<()> {
    let d = field.geometry().dim();
    if field.components() != d {
        return Err(Error::ShapeMismatch(format!(
            "projection needs {d} components on a {d}-dimensional grid, got {}",
            field.components()
        )));
    }
    Ok(())
}

/// Multiply the spectral coefficients in place by a per-mode map built from
/// the gradient projection: `out = keep * v + grad_scale * k (k.v)/|k|^2`,
/// with `zero_mode` applied at k = 0.
fn spectral_mix(spec: &mut SpectralField, keep: f64, grad_scale: f64, zero_mode: f64) {
    let geometry = spec.geometry().clone();
    let d = geometry.dim();
    let n_total = geometry.total_cells();
    let mut k = vec![0i64; d];
    for cell in 0..n_total {
        geometry.freq_vector(cell, &mut k);
        let k2: f64 = k.iter().map(|&x| (x * x) as f64).sum();
        let data = spec.values_mut();
        if k2 == 0.0 {
            for c in 0..d {
                data[c * n_total + cell] *= zero_mode;
            }
            continue;
        }
        let mut dot = Complex64::new(0.0, 0.0);
        for c in 0..d {
            dot += (k[c] as f64) * data[c * n_total + cell];
        }
        let coeff = dot * (grad_scale / k2);
        for c in 0..d {
            let v = data[c * n_total + cell];
            data[c * n_total + cell] = keep * v + (k[c] as f64) * coeff;
        }
    }
}

/// Projection onto mean-zero gradient fields.
pub fn apply_gamma1(field: &Field) -> Result<Field> {
    check_components(field)?;
    let mut spec = fft_forward(field);
    spectral_mix(&mut spec, 0.0, 1.0, 0.0);
    Ok(fft_inverse(&spec))
}

/// The complementary projection (keeps divergence-free and uniform parts).
pub fn apply_gamma2(field: &Field) -> Result<Field> {
    check_components(field)?;
    let mut spec = fft_forward(field);
    spectral_mix(&mut spec, 1.0, -1.0, 1.0);
    Ok(fft_inverse(&spec))
}

/// The reflection through the gradient subspace, an isometric involution.
pub fn reflect_gamma1(field: &Field) -> Result<Field> {
    check_components(field)?;
    let mut spec = fft_forward(field);
    spectral_mix(&mut spec, 1.0, -2.0, 1.0);
    Ok(fft_inverse(&spec))
}
