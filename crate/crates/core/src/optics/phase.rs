//! Phase modulation: SLM application, bit-depth quantisation, random diffusers
//! and low-order Zernike aberrations.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::field::{wrap_phase, ComplexField, PhaseMap};
use crate::error::{Error, Result, Shape};

/// Multiply the field by `exp(i·phase)` pixelwise.
pub fn apply_phase(field: &ComplexField, phase: &PhaseMap) -> Result<ComplexField> {
    Error::check_shape(field.shape(), phase.shape())?;
    let data = field
        .data()
        .iter()
        .zip(phase.data())
        .map(|(u, &p)| u * Complex64::cis(p))
        .collect();
    Ok(ComplexField::from_parts_unchecked(
        field.shape(),
        field.pitch_um(),
        field.wavelength_um(),
        data,
    ))
}

/// Snap every phase to the nearest of `2^bits` levels spanning `[0, 2π)`.
pub fn quantize_phase(phase: &PhaseMap, bits: u32) -> Result<PhaseMap> {
    if !(1..=16).contains(&bits) {
        return Err(Error::config(format!("SLM bit depth must be in 1..=16, got {bits}")));
    }
    let levels = 1u32 << bits;
    let step = TAU / levels as f64;
    let data = phase
        .data()
        .iter()
        .map(|&v| {
            let q = (wrap_phase(v) / step).round() as u32 % levels;
            q as f64 * step
        })
        .collect();
    Ok(PhaseMap::from_vec_unchecked(phase.shape(), data))
}

/// Random phase screen.
///
/// I.i.d. uniform phases on `[0, 2π)`; when `correlation_length > 0` they are
/// smoothed with a periodic Gaussian kernel of that standard deviation (pixels)
/// and rescaled to span `[0, 2π)` again.
pub fn make_diffuser(seed: u64, correlation_length: f64, shape: Shape) -> PhaseMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..shape.len()).map(|_| rng.random_range(0.0..TAU)).collect();
    if correlation_length <= 0.0 {
        return PhaseMap::from_vec_unchecked(shape, raw);
    }
    let rows = smooth_axis(&raw, shape.rows, shape.cols, correlation_length, false);
    let both = smooth_axis(&rows, shape.rows, shape.cols, correlation_length, true);
    let (lo, hi) = both
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let data = both.iter().map(|&v| wrap_phase((v - lo) / span * TAU)).collect();
    PhaseMap::from_vec_unchecked(shape, data)
}

fn smooth_axis(src: &[f64], rows: usize, cols: usize, sigma: f64, vertical: bool) -> Vec<f64> {
    let n = if vertical { rows } else { cols };
    let radius = ((3.0 * sigma).ceil() as usize).min(n / 2);
    let kernel: Vec<f64> = (0..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel[0] + 2.0 * kernel[1..].iter().sum::<f64>();
    let mut out = vec![0.0; src.len()];
    for r in 0..rows {
        for c in 0..cols {
            let pos = if vertical { r } else { c };
            let at = |p: usize| if vertical { p * cols + c } else { r * cols + p };
            let mut acc = kernel[0] * src[r * cols + c];
            for (k, w) in kernel.iter().enumerate().skip(1) {
                acc += w * (src[at((pos + k) % n)] + src[at((pos + n - k) % n)]);
            }
            out[r * cols + c] = acc / norm;
        }
    }
    out
}

/// Low-order aberration coefficients, radians RMS, Noll-normalised.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ZernikeCoeffs {
    /// Z4, `√3·(2ρ² − 1)`.
    pub defocus: f64,
    /// Z6, `√6·ρ²·cos 2θ`.
    pub astigmatism: f64,
    /// Z8, `√8·(3ρ³ − 2ρ)·cos θ`.
    pub coma: f64,
}

impl ZernikeCoeffs {
    pub fn norm(&self) -> f64 {
        (self.defocus.powi(2) + self.astigmatism.powi(2) + self.coma.powi(2)).sqrt()
    }
}

/// Weighted Zernike sum over the inscribed unit disk, zero outside.
///
/// The disk is centred on pixel `(rows/2, cols/2)` with radius `min(rows, cols)/2`.
pub fn zernike_phase(coeffs: &ZernikeCoeffs, shape: Shape) -> PhaseMap {
    let (cy, cx) = ((shape.rows / 2) as f64, (shape.cols / 2) as f64);
    let radius = shape.rows.min(shape.cols) as f64 / 2.0;
    let mut data = Vec::with_capacity(shape.len());
    for r in 0..shape.rows {
        for c in 0..shape.cols {
            let y = (r as f64 - cy) / radius;
            let x = (c as f64 - cx) / radius;
            let rho2 = x * x + y * y;
            if rho2 > 1.0 {
                data.push(0.0);
                continue;
            }
            // cos 2θ = (x² − y²)/ρ², ρ·cos θ = x
            let z4 = 3f64.sqrt() * (2.0 * rho2 - 1.0);
            let z6 = 6f64.sqrt() * (x * x - y * y);
            let z8 = 8f64.sqrt() * (3.0 * rho2 - 2.0) * x;
            data.push(coeffs.defocus * z4 + coeffs.astigmatism * z6 + coeffs.coma * z8);
        }
    }
    PhaseMap::from_vec_unchecked(shape, data)
}
