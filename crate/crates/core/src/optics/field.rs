use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result, Shape};

/// Scalar complex wavefront sampled on a uniform grid.
///
/// `pitch_um` is the pixel spacing and `wavelength_um` the vacuum wavelength,
/// both in micrometres. Grid sides are powers of two so every propagation can
/// run on radix-2 FFTs.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    shape: Shape,
    pitch_um: f64,
    wavelength_um: f64,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(shape: Shape, pitch_um: f64, wavelength_um: f64, data: Vec<Complex64>) -> Result<Self> {
        if !shape.is_pow2() {
            return Err(Error::config(format!("field grid {shape} must have power-of-two sides")));
        }
        if !(pitch_um > 0.0 && pitch_um.is_finite()) {
            return Err(Error::config(format!("pitch must be positive, got {pitch_um}")));
        }
        if !(wavelength_um > 0.0 && wavelength_um.is_finite()) {
            return Err(Error::config(format!("wavelength must be positive, got {wavelength_um}")));
        }
        if data.len() != shape.len() {
            return Err(Error::Data(format!(
                "field of shape {shape} needs {} samples, got {}",
                shape.len(),
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Data("field contains non-finite values".into()));
        }
        Ok(ComplexField {
            shape,
            pitch_um,
            wavelength_um,
            data,
        })
    }

    /// Unit-amplitude, on-axis plane wave.
    pub fn plane_wave(shape: Shape, pitch_um: f64, wavelength_um: f64) -> Result<Self> {
        Self::new(shape, pitch_um, wavelength_um, vec![Complex64::new(1.0, 0.0); shape.len()])
    }

    pub(crate) fn from_parts_unchecked(
        shape: Shape,
        pitch_um: f64,
        wavelength_um: f64,
        data: Vec<Complex64>,
    ) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        ComplexField {
            shape,
            pitch_um,
            wavelength_um,
            data,
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn pitch_um(&self) -> f64 {
        self.pitch_um
    }

    pub fn wavelength_um(&self) -> f64 {
        self.wavelength_um
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.shape.cols + col]
    }

    /// Sum of |u|² over the grid.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Inner product Σ conj(self)·other.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        Error::check_shape(self.shape, other.shape)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Noise-free intensity |u|².
    pub fn intensity(&self) -> IntensityImage {
        IntensityImage {
            shape: self.shape,
            data: self.data.iter().map(|z| z.norm_sqr()).collect(),
        }
    }
}

/// Real phase pattern in radians.
///
/// Values may be any finite real; [`PhaseMap::wrapped`] gives the canonical
/// representative in `[0, 2π)` that a modulator actually displays.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMap {
    shape: Shape,
    data: Vec<f64>,
}

impl PhaseMap {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Data(format!(
                "phase map of shape {shape} needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("phase map contains non-finite values".into()));
        }
        Ok(PhaseMap { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        Self::constant(shape, 0.0)
    }

    pub fn constant(shape: Shape, value: f64) -> Self {
        PhaseMap {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub(crate) fn from_vec_unchecked(shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        PhaseMap { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.shape.cols + col]
    }

    /// Canonical copy with every value in `[0, 2π)`.
    pub fn wrapped(&self) -> PhaseMap {
        PhaseMap {
            shape: self.shape,
            data: self.data.iter().map(|&v| wrap_phase(v)).collect(),
        }
    }

    /// Pixelwise sum of two phase maps (unwrapped).
    pub fn add(&self, other: &PhaseMap) -> Result<PhaseMap> {
        Error::check_shape(self.shape, other.shape)?;
        Ok(PhaseMap {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// Round-trips every value through `f32`, the precision used on the wire.
    pub fn to_f32_precision(&self) -> PhaseMap {
        PhaseMap {
            shape: self.shape,
            data: self.data.iter().map(|&v| v as f32 as f64).collect(),
        }
    }
}

/// Map a phase onto `[0, 2π)`.
pub fn wrap_phase(v: f64) -> f64 {
    let w = v.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Non-negative intensity image in arbitrary sensor units.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityImage {
    shape: Shape,
    data: Vec<f64>,
}

impl IntensityImage {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Data(format!(
                "image of shape {shape} needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Data("intensity values must be finite and non-negative".into()));
        }
        Ok(IntensityImage { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        IntensityImage {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub(crate) fn from_vec_unchecked(shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        IntensityImage { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.shape.cols + col]
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.shape.cols..(row + 1) * self.shape.cols]
    }

    /// Copy rescaled so the maximum is 1 (all-zero images stay zero).
    pub fn normalized(&self) -> IntensityImage {
        let max = self.max();
        IntensityImage {
            shape: self.shape,
            data: self.data.iter().map(|v| if max > 0.0 { v / max } else { 0.0 }).collect(),
        }
    }

    pub fn to_f32_precision(&self) -> IntensityImage {
        IntensityImage {
            shape: self.shape,
            data: self.data.iter().map(|&v| v as f32 as f64).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two_grid() {
        let shape = Shape::new(12, 16);
        let err = ComplexField::plane_wave(shape, 8.0, 0.52).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn rejects_non_finite_samples() {
        let shape = Shape::new(2, 2);
        let mut data = vec![Complex64::new(1.0, 0.0); 4];
        data[3] = Complex64::new(f64::NAN, 0.0);
        assert!(ComplexField::new(shape, 8.0, 0.52, data).is_err());
        assert!(PhaseMap::new(shape, vec![0.0, 1.0, f64::INFINITY, 0.0]).is_err());
        assert!(IntensityImage::new(shape, vec![0.0, -1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn wrap_lands_in_half_open_interval() {
        for v in [-1e-300, -TAU, TAU, 3.0 * TAU + 0.5, -0.5, 0.0] {
            let w = wrap_phase(v);
            assert!((0.0..TAU).contains(&w), "{v} -> {w}");
        }
    }
}
