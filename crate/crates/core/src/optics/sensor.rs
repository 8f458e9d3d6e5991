//! Camera model and detector regions.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::field::{ComplexField, IntensityImage};
use crate::error::{Error, Result, Shape};

/// Shot and read noise of the camera.
///
/// Each frame collects `photon_budget` photons in expectation, distributed
/// according to the noiseless intensity; counts are rescaled back to the
/// noiseless units so the expected frame equals `|u|²`. `read_sigma` is the
/// additive Gaussian standard deviation as a fraction of the mean signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub photon_budget: f64,
    pub read_sigma: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            photon_budget: 1e5,
            read_sigma: 1e-3,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.photon_budget > 0.0 && self.photon_budget.is_finite()) {
            return Err(Error::config("photon_budget must be positive"));
        }
        if !(self.read_sigma >= 0.0 && self.read_sigma.is_finite()) {
            return Err(Error::config("read_sigma must be non-negative"));
        }
        Ok(())
    }
}

/// Record the field's intensity, optionally with shot and read noise.
pub fn measure<R: Rng + ?Sized>(
    field: &ComplexField,
    noise: Option<&NoiseModel>,
    rng: &mut R,
) -> IntensityImage {
    let clean = field.intensity();
    match noise {
        None => clean,
        Some(model) => add_noise(&clean, model, rng),
    }
}

pub(crate) fn add_noise<R: Rng + ?Sized>(
    clean: &IntensityImage,
    model: &NoiseModel,
    rng: &mut R,
) -> IntensityImage {
    let total = clean.total();
    let n = clean.data().len();
    let mean = total / n as f64;
    let read = Normal::new(0.0, model.read_sigma * mean).ok();
    let photons_per_unit = if total > 0.0 { model.photon_budget / total } else { 0.0 };
    let data = clean
        .data()
        .iter()
        .map(|&i| {
            let rate = i * photons_per_unit;
            let counts = if rate > 0.0 {
                Poisson::new(rate).map(|p| p.sample(rng)).unwrap_or(rate)
            } else {
                0.0
            };
            let shot = if photons_per_unit > 0.0 { counts / photons_per_unit } else { 0.0 };
            let noisy = shot + read.map_or(0.0, |d| d.sample(rng));
            noisy.max(0.0)
        })
        .collect();
    IntensityImage::from_vec_unchecked(clean.shape(), data)
}

/// Axis-aligned rectangle of sensor pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Region {
    pub const fn new(row: usize, col: usize, height: usize, width: usize) -> Self {
        Region {
            row,
            col,
            height,
            width,
        }
    }

    fn overlaps(&self, other: &Region) -> bool {
        self.row < other.row + other.height
            && other.row < self.row + self.height
            && self.col < other.col + other.width
            && other.col < self.col + self.width
    }

    fn fits(&self, shape: Shape) -> bool {
        self.row + self.height <= shape.rows && self.col + self.width <= shape.cols
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row..self.row + self.height).contains(&row)
            && (self.col..self.col + self.width).contains(&col)
    }
}

/// Pairwise-disjoint detector regions on a sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorLayout {
    regions: Vec<Region>,
}

impl DetectorLayout {
    pub fn new(regions: Vec<Region>) -> Result<Self> {
        if regions.iter().any(|r| r.height == 0 || r.width == 0) {
            return Err(Error::Layout("regions must be non-empty".into()));
        }
        for (i, a) in regions.iter().enumerate() {
            for (j, b) in regions.iter().enumerate().skip(i + 1) {
                if a.overlaps(b) {
                    return Err(Error::Layout(format!("regions {i} and {j} overlap")));
                }
            }
        }
        Ok(DetectorLayout { regions })
    }

    /// Ten `size`×`size` regions on a 2×5 grid with `gap` pixels between
    /// neighbouring edges, centred on the sensor.
    pub fn grid_2x5(sensor: Shape, size: usize, gap: usize) -> Result<Self> {
        let span_w = 5 * size + 4 * gap;
        let span_h = 2 * size + gap;
        if span_w > sensor.cols || span_h > sensor.rows {
            return Err(Error::Layout(format!(
                "2x5 grid of {size}px regions with {gap}px gaps does not fit a {sensor} sensor"
            )));
        }
        let r0 = (sensor.rows - span_h) / 2;
        let c0 = (sensor.cols - span_w) / 2;
        let regions = (0..10)
            .map(|k| {
                let (gr, gc) = (k / 5, k % 5);
                Region::new(r0 + gr * (size + gap), c0 + gc * (size + gap), size, size)
            })
            .collect();
        let layout = Self::new(regions)?;
        layout.validate_for(sensor)?;
        Ok(layout)
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn validate_for(&self, sensor: Shape) -> Result<()> {
        match self.regions.iter().position(|r| !r.fits(sensor)) {
            Some(k) => Err(Error::Layout(format!(
                "region {k} ({:?}) extends outside the {sensor} sensor",
                self.regions[k]
            ))),
            None => Ok(()),
        }
    }

    /// Region index containing the pixel, if any.
    pub fn region_of(&self, row: usize, col: usize) -> Option<usize> {
        self.regions.iter().position(|r| r.contains(row, col))
    }
}

/// Sum of intensities inside each detector region.
pub fn detector_energies(image: &IntensityImage, layout: &DetectorLayout) -> Result<Vec<f64>> {
    let shape = image.shape();
    layout.validate_for(shape)?;
    Ok(layout
        .regions()
        .iter()
        .map(|reg| {
            (reg.row..reg.row + reg.height)
                .flat_map(|r| &image.row(r)[reg.col..reg.col + reg.width])
                .sum()
        })
        .collect())
}
