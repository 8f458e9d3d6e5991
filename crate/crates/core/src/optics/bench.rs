//! The simulated instrument: SLM, optional hidden aberration and diffuser,
//! free-space propagation, and a noisy camera.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::field::{ComplexField, IntensityImage, PhaseMap};
use super::phase::{make_diffuser, quantize_phase, zernike_phase, ZernikeCoeffs};
use super::propagation::{Boundary, Propagator};
use super::sensor::{add_noise, NoiseModel};
use crate::error::{Error, Result, Shape};

/// Random phase screen placed midway between SLM and sensor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffuserConfig {
    pub seed: u64,
    /// Gaussian smoothing length in pixels.
    pub correlation_length: f64,
}

impl Default for DiffuserConfig {
    fn default() -> Self {
        DiffuserConfig {
            seed: 0x0d1f_f05e,
            correlation_length: 4.0,
        }
    }
}

/// Hidden low-order aberration at the SLM plane plus a lateral sensor offset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AberrationConfig {
    pub defocus: f64,
    pub astigmatism: f64,
    pub coma: f64,
    pub shift_rows: i64,
    pub shift_cols: i64,
}

impl AberrationConfig {
    pub fn zernike(&self) -> ZernikeCoeffs {
        ZernikeCoeffs {
            defocus: self.defocus,
            astigmatism: self.astigmatism,
            coma: self.coma,
        }
    }
}

/// Full description of the simulated bench, including the imperfections an
/// optimizer never gets to see.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub rows: usize,
    pub cols: usize,
    pub pitch_um: f64,
    pub wavelength_um: f64,
    pub distance_mm: f64,
    pub boundary: Boundary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    pub slm_bits: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diffuser: Option<DiffuserConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aberration: Option<AberrationConfig>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            rows: 64,
            cols: 64,
            pitch_um: 8.0,
            wavelength_um: 0.52,
            distance_mm: 100.0,
            boundary: Boundary::ZeroPadded,
            noise: Some(NoiseModel::default()),
            slm_bits: 8,
            diffuser: None,
            aberration: None,
            seed: 1,
        }
    }
}

impl BenchConfig {
    pub fn shape(&self) -> Shape {
        Shape::new(self.rows, self.cols)
    }

    /// Same bench with the camera noise switched off.
    pub fn noise_free(&self) -> BenchConfig {
        BenchConfig {
            noise: None,
            ..self.clone()
        }
    }

    /// Same optics without diffuser or aberration.
    pub fn ideal(&self) -> BenchConfig {
        BenchConfig {
            diffuser: None,
            aberration: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.shape().is_pow2() {
            return Err(Error::config(format!(
                "bench grid {} must have power-of-two sides",
                self.shape()
            )));
        }
        if !(self.distance_mm >= 0.0 && self.distance_mm.is_finite()) {
            return Err(Error::config("distance_mm must be finite and non-negative"));
        }
        if !(self.pitch_um > 0.0 && self.wavelength_um > 0.0) {
            return Err(Error::config("pitch_um and wavelength_um must be positive"));
        }
        if !(1..=16).contains(&self.slm_bits) {
            return Err(Error::config(format!("slm_bits must be in 1..=16, got {}", self.slm_bits)));
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        if let Some(d) = &self.diffuser {
            if !(d.correlation_length >= 0.0) {
                return Err(Error::config("diffuser correlation_length must be >= 0"));
            }
        }
        Ok(())
    }
}

/// A constructed bench with propagators and hidden screens precomputed.
#[derive(Clone, Debug)]
pub struct Bench {
    config: BenchConfig,
    shape: Shape,
    first: Propagator,
    second: Option<(Vec<Complex64>, Propagator)>,
    aberration: Option<PhaseMap>,
    shift: (isize, isize),
}

impl Bench {
    pub fn new(config: BenchConfig) -> Result<Self> {
        config.validate()?;
        let shape = config.shape();
        let prop = |d: f64| {
            Propagator::new(shape, config.pitch_um, config.wavelength_um, d, config.boundary)
        };
        let (first, second) = match &config.diffuser {
            Some(d) => {
                let half = config.distance_mm / 2.0;
                let screen = make_diffuser(d.seed, d.correlation_length, shape)
                    .data()
                    .iter()
                    .map(|&p| Complex64::cis(p))
                    .collect();
                (prop(half)?, Some((screen, prop(config.distance_mm - half)?)))
            }
            None => (prop(config.distance_mm)?, None),
        };
        let aberration = config
            .aberration
            .map(|a| zernike_phase(&a.zernike(), shape));
        let shift = config
            .aberration
            .map_or((0, 0), |a| (a.shift_rows as isize, a.shift_cols as isize));
        Ok(Bench {
            config,
            shape,
            first,
            second,
            aberration,
            shift,
        })
    }

    pub fn config(&self) -> &BenchConfig {
        &self.config
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn phase_levels(&self) -> u32 {
        1 << self.config.slm_bits
    }

    fn slm_phase(&self, input: Option<&PhaseMap>, slm: &PhaseMap, quantize: bool) -> Result<Vec<f64>> {
        Error::check_shape(self.shape, slm.shape())?;
        let displayed = if quantize {
            quantize_phase(slm, self.config.slm_bits)?
        } else {
            slm.clone()
        };
        let mut total = displayed.into_data();
        if let Some(inp) = input {
            Error::check_shape(self.shape, inp.shape())?;
            total.iter_mut().zip(inp.data()).for_each(|(t, i)| *t += i);
        }
        if let Some(ab) = &self.aberration {
            total.iter_mut().zip(ab.data()).for_each(|(t, a)| *t += a);
        }
        Ok(total)
    }

    fn field_from_phase(&self, phase: &[f64]) -> ComplexField {
        let data = phase.iter().map(|&p| Complex64::cis(p)).collect();
        ComplexField::from_parts_unchecked(self.shape, self.config.pitch_um, self.config.wavelength_um, data)
    }

    fn forward(&self, slm_field: &ComplexField) -> Result<ComplexField> {
        match &self.second {
            None => self.first.propagate_window(slm_field, self.shift),
            Some((screen, prop)) => {
                let mid = self.first.propagate(slm_field)?;
                let data = mid.data().iter().zip(screen).map(|(u, s)| u * s).collect();
                let mid = ComplexField::from_parts_unchecked(
                    self.shape,
                    self.config.pitch_um,
                    self.config.wavelength_um,
                    data,
                );
                prop.propagate_window(&mid, self.shift)
            }
        }
    }

    fn backward(&self, sensor_adjoint: &ComplexField) -> Result<ComplexField> {
        match &self.second {
            None => self.first.adjoint_window(sensor_adjoint, self.shift),
            Some((screen, prop)) => {
                let mid = prop.adjoint_window(sensor_adjoint, self.shift)?;
                let data = mid.data().iter().zip(screen).map(|(u, s)| u * s.conj()).collect();
                let mid = ComplexField::from_parts_unchecked(
                    self.shape,
                    self.config.pitch_um,
                    self.config.wavelength_um,
                    data,
                );
                self.first.adjoint(&mid)
            }
        }
    }

    /// Complex field arriving at the sensor (noise-free, quantised SLM).
    pub fn sensor_field(&self, input: Option<&PhaseMap>, slm: &PhaseMap) -> Result<ComplexField> {
        let phase = self.slm_phase(input, slm, true)?;
        self.forward(&self.field_from_phase(&phase))
    }

    /// Noise-free intensity at the sensor.
    pub fn intensity(&self, input: Option<&PhaseMap>, slm: &PhaseMap) -> Result<IntensityImage> {
        Ok(self.sensor_field(input, slm)?.intensity())
    }

    /// One camera frame for the given input and SLM phases.
    pub fn run<R: Rng + ?Sized>(
        &self,
        input: Option<&PhaseMap>,
        slm: &PhaseMap,
        rng: &mut R,
    ) -> Result<IntensityImage> {
        let clean = self.intensity(input, slm)?;
        Ok(match &self.config.noise {
            None => clean,
            Some(model) => add_noise(&clean, model, rng),
        })
    }

    /// Differentiable twin: intensity with an unquantised SLM phase.
    pub fn model_intensity(&self, input: Option<&PhaseMap>, slm: &PhaseMap) -> Result<IntensityImage> {
        let phase = self.slm_phase(input, slm, false)?;
        Ok(self.forward(&self.field_from_phase(&phase))?.intensity())
    }

    /// Gradient of a scalar loss of the model intensity with respect to the
    /// SLM phase, by the adjoint method.
    ///
    /// `loss` receives the model intensity and returns the loss value together
    /// with `∂L/∂I` per sensor pixel.
    pub fn model_gradient<F>(&self, input: Option<&PhaseMap>, slm: &PhaseMap, loss: F) -> Result<(f64, Vec<f64>)>
    where
        F: FnOnce(&IntensityImage) -> Result<(f64, Vec<f64>)>,
    {
        if self.config.noise.is_some() {
            return Err(Error::config("model-based gradients need a noise-free bench"));
        }
        let phase = self.slm_phase(input, slm, false)?;
        let slm_field = self.field_from_phase(&phase);
        let sensor = self.forward(&slm_field)?;
        let (value, dl_di) = loss(&sensor.intensity())?;
        if dl_di.len() != self.shape.len() {
            return Err(Error::Dimension {
                expected: self.shape,
                got: Shape::new(1, dl_di.len()),
            });
        }
        let weighted = sensor
            .data()
            .iter()
            .zip(&dl_di)
            .map(|(u, g)| u * *g)
            .collect();
        let weighted = ComplexField::from_parts_unchecked(
            self.shape,
            self.config.pitch_um,
            self.config.wavelength_um,
            weighted,
        );
        let back = self.backward(&weighted)?;
        let grad = slm_field
            .data()
            .iter()
            .zip(back.data())
            .map(|(s, v)| 2.0 * (s.conj() * v).im)
            .collect();
        Ok((value, grad))
    }
}

/// One frame of the full forward pipeline. Builds the bench on every call;
/// hold a [`Bench`] to amortise propagator setup.
pub fn run_bench<R: Rng + ?Sized>(
    config: &BenchConfig,
    input: Option<&PhaseMap>,
    slm: &PhaseMap,
    rng: &mut R,
) -> Result<IntensityImage> {
    Bench::new(config.clone())?.run(input, slm, rng)
}
