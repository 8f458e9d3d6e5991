//! Angular-spectrum free-space propagation.
//!
//! The field is multiplied in the spatial-frequency domain by the free-space
//! transfer function `exp(i·2π·d·sqrt(1/λ² − fx² − fy²))`; evanescent
//! components are zeroed. By default the field is embedded in a grid twice
//! its size so the circular convolution performed by the FFT approximates a
//! linear one.

use std::f64::consts::TAU;
use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::field::ComplexField;
use crate::error::{Error, Result, Shape};

/// Boundary treatment of the computational window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Embed in a 2× zero-padded grid, crop the centre afterwards.
    #[default]
    ZeroPadded,
    /// Treat the grid as one period of a periodic field.
    Periodic,
}

impl Boundary {
    fn factor(self) -> usize {
        match self {
            Boundary::ZeroPadded => 2,
            Boundary::Periodic => 1,
        }
    }
}

/// Row-column 2-D FFT over a fixed grid.
#[derive(Clone)]
pub(crate) struct Fft2 {
    #[cfg(test)]
    shape: Shape,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(shape: Shape) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            #[cfg(test)]
            shape,
            row_fwd: planner.plan_fft_forward(shape.cols),
            row_inv: planner.plan_fft_inverse(shape.cols),
            col_fwd: planner.plan_fft_forward(shape.rows),
            col_inv: planner.plan_fft_inverse(shape.rows),
        }
    }
}

#[cfg(test)]
impl Fft2 {
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform, normalised so `inverse(forward(x)) == x`.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
        let scale = 1.0 / self.shape.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn run(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let Shape { rows: h, cols: w } = self.shape;
        WORKSPACE.with(|cell| {
            let (t, scratch) = &mut *cell.borrow_mut();
            t.resize(data.len(), Complex64::default());
            let need = rows.get_inplace_scratch_len().max(cols.get_inplace_scratch_len());
            scratch.resize(need, Complex64::default());
            rows.process_with_scratch(data, scratch);
            transpose(data, t, h, w);
            cols.process_with_scratch(t, scratch);
            transpose(t, data, w, h);
        });
    }
}

thread_local! {
    // Transpose buffer and FFT scratch, reused across calls on one thread.
    static WORKSPACE: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

#[cfg(test)]
/// Cache-blocked out-of-place transpose of a `rows`×`cols` matrix.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const TILE: usize = 16;
    for r0 in (0..rows).step_by(TILE) {
        for c0 in (0..cols).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                for c in c0..(c0 + TILE).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Signed FFT frequency index, `numpy.fft.fftfreq` order.
pub(crate) fn fft_index(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Precomputed propagation over one fixed distance.
#[derive(Clone)]
pub struct Propagator {
    shape: Shape,
    padded: Shape,
    pitch_um: f64,
    wavelength_um: f64,
    distance_mm: f64,
    transfer: Vec<Complex64>,
    fft: Fft2,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("shape", &self.shape)
            .field("padded", &self.padded)
            .field("pitch_um", &self.pitch_um)
            .field("wavelength_um", &self.wavelength_um)
            .field("distance_mm", &self.distance_mm)
            .finish()
    }
}

impl Propagator {
    pub fn new(
        shape: Shape,
        pitch_um: f64,
        wavelength_um: f64,
        distance_mm: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if !shape.is_pow2() {
            return Err(Error::config(format!("grid {shape} must have power-of-two sides")));
        }
        if !distance_mm.is_finite() {
            return Err(Error::config("propagation distance must be finite"));
        }
        if !(pitch_um > 0.0 && wavelength_um > 0.0) {
            return Err(Error::config("pitch and wavelength must be positive"));
        }
        let k = boundary.factor();
        let padded = Shape::new(shape.rows * k, shape.cols * k);
        let d_um = distance_mm * 1e3;
        let inv_lambda_sq = 1.0 / (wavelength_um * wavelength_um);
        let dfy = 1.0 / (padded.rows as f64 * pitch_um);
        let dfx = 1.0 / (padded.cols as f64 * pitch_um);
        // Column-major, matching the layout in which `transform` applies it.
        let mut transfer = Vec::with_capacity(padded.len());
        for c in 0..padded.cols {
            let fx = fft_index(c, padded.cols) * dfx;
            for r in 0..padded.rows {
                let fy = fft_index(r, padded.rows) * dfy;
                let arg = inv_lambda_sq - fx * fx - fy * fy;
                transfer.push(if arg > 0.0 {
                    Complex64::cis(TAU * d_um * arg.sqrt())
                } else {
                    Complex64::default()
                });
            }
        }
        Ok(Propagator {
            shape,
            padded,
            pitch_um,
            wavelength_um,
            distance_mm,
            transfer,
            fft: Fft2::new(padded),
        })
    }

    /// Propagator matching a field's own grid and optics.
    pub fn for_field(field: &ComplexField, distance_mm: f64, boundary: Boundary) -> Result<Self> {
        Self::new(
            field.shape(),
            field.pitch_um(),
            field.wavelength_um(),
            distance_mm,
            boundary,
        )
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn distance_mm(&self) -> f64 {
        self.distance_mm
    }

    fn check(&self, field: &ComplexField) -> Result<()> {
        Error::check_shape(self.shape, field.shape())?;
        if field.pitch_um() != self.pitch_um || field.wavelength_um() != self.wavelength_um {
            return Err(Error::config(
                "field pitch/wavelength differ from the propagator's",
            ));
        }
        Ok(())
    }

    fn origin(&self) -> (usize, usize) {
        (
            (self.padded.rows - self.shape.rows) / 2,
            (self.padded.cols - self.shape.cols) / 2,
        )
    }

    /// Embed `data` in the padded grid at `at_in`, apply the transfer
    /// function (or its conjugate), and read the window at `at_out`.
    ///
    /// Only the rows that carry input are transformed forward and only the
    /// rows that are read out are transformed back.
    fn transform(
        &self,
        data: &[Complex64],
        at_in: (isize, isize),
        at_out: (isize, isize),
        conjugate: bool,
    ) -> Vec<Complex64> {
        const TILE: usize = 16;
        let (ph, pw) = (self.padded.rows, self.padded.cols);
        let (h, w) = (self.shape.rows, self.shape.cols);
        let fft = &self.fft;
        WORKSPACE.with(|cell| {
            let (t, scratch) = &mut *cell.borrow_mut();
            let need = [&fft.row_fwd, &fft.row_inv, &fft.col_fwd, &fft.col_inv]
                .iter()
                .map(|p| p.get_inplace_scratch_len())
                .max()
                .unwrap_or(0);
            scratch.resize(need, Complex64::default());
            let mut rows = vec![Complex64::default(); h * pw];
            for r in 0..h {
                for c in 0..w {
                    rows[r * pw + wrap_index(at_in.1 + c as isize, pw)] = data[r * w + c];
                }
            }
            fft.row_fwd.process_with_scratch(&mut rows, scratch);

            t.clear();
            t.resize(ph * pw, Complex64::default());
            let in_rows: Vec<usize> = (0..h).map(|r| wrap_index(at_in.0 + r as isize, ph)).collect();
            for c0 in (0..pw).step_by(TILE) {
                for (r, &pr) in in_rows.iter().enumerate() {
                    for c in c0..(c0 + TILE).min(pw) {
                        t[c * ph + pr] = rows[r * pw + c];
                    }
                }
            }
            fft.col_fwd.process_with_scratch(t, scratch);
            if conjugate {
                t.iter_mut().zip(&self.transfer).for_each(|(z, k)| *z *= k.conj());
            } else {
                t.iter_mut().zip(&self.transfer).for_each(|(z, k)| *z *= k);
            }
            fft.col_inv.process_with_scratch(t, scratch);

            let out_rows: Vec<usize> = (0..h).map(|r| wrap_index(at_out.0 + r as isize, ph)).collect();
            for c0 in (0..pw).step_by(TILE) {
                for (r, &pr) in out_rows.iter().enumerate() {
                    for c in c0..(c0 + TILE).min(pw) {
                        rows[r * pw + c] = t[c * ph + pr];
                    }
                }
            }
            fft.row_inv.process_with_scratch(&mut rows, scratch);
            let scale = 1.0 / self.padded.len() as f64;
            let mut out = Vec::with_capacity(h * w);
            for r in 0..h {
                for c in 0..w {
                    out.push(rows[r * pw + wrap_index(at_out.1 + c as isize, pw)] * scale);
                }
            }
            out
        })
    }

    /// Propagate and return the window centred on the input grid.
    pub fn propagate(&self, field: &ComplexField) -> Result<ComplexField> {
        self.propagate_window(field, (0, 0))
    }

    /// Propagate and read out a window displaced by `offset` pixels (rows, cols)
    /// from the centred one. Models a laterally shifted sensor.
    pub fn propagate_window(&self, field: &ComplexField, offset: (isize, isize)) -> Result<ComplexField> {
        self.check(field)?;
        if self.distance_mm == 0.0 && offset == (0, 0) {
            return Ok(field.clone());
        }
        let (r0, c0) = self.origin();
        let origin = (r0 as isize, c0 as isize);
        let data = self.transform(field.data(), origin, (origin.0 + offset.0, origin.1 + offset.1), false);
        Ok(ComplexField::from_parts_unchecked(
            self.shape,
            self.pitch_um,
            self.wavelength_um,
            data,
        ))
    }

    /// Hermitian adjoint of [`Propagator::propagate`]; equals propagation over
    /// the negated distance.
    pub fn adjoint(&self, field: &ComplexField) -> Result<ComplexField> {
        self.adjoint_window(field, (0, 0))
    }

    /// Hermitian adjoint of [`Propagator::propagate_window`] for the same offset.
    pub fn adjoint_window(&self, field: &ComplexField, offset: (isize, isize)) -> Result<ComplexField> {
        self.check(field)?;
        if self.distance_mm == 0.0 && offset == (0, 0) {
            return Ok(field.clone());
        }
        let (r0, c0) = self.origin();
        let origin = (r0 as isize, c0 as isize);
        let data = self.transform(field.data(), (origin.0 + offset.0, origin.1 + offset.1), origin, true);
        Ok(ComplexField::from_parts_unchecked(
            self.shape,
            self.pitch_um,
            self.wavelength_um,
            data,
        ))
    }
}

fn wrap_index(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Propagate `field` by `distance_mm` (negative distances back-propagate)
/// using the default zero-padded boundary.
pub fn propagate(field: &ComplexField, distance_mm: f64) -> Result<ComplexField> {
    propagate_with(field, distance_mm, Boundary::ZeroPadded)
}

pub fn propagate_with(field: &ComplexField, distance_mm: f64, boundary: Boundary) -> Result<ComplexField> {
    if distance_mm == 0.0 {
        return Ok(field.clone());
    }
    Propagator::for_field(field, distance_mm, boundary)?.propagate(field)
}
