//! Phase-encoded digit classification on a single SLM plane.

use std::f64::consts::PI;

use crate::blackbox::Instrument;
use crate::error::{Error, Result, Shape};
use crate::optics::{detector_energies, DetectorLayout, IntensityImage, PhaseMap};

use super::mnist::LabeledDigit;
use super::rewards::argmax;
use super::targets::resize_bilinear;

/// Maps a digit to an input phase `π·pixel`, resized into a centred window
/// of the SLM grid; zero elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InputEncoder {
    pub slm: Shape,
    pub window: usize,
}

impl InputEncoder {
    pub fn new(slm: Shape, window: usize) -> Result<Self> {
        if window == 0 || window > slm.rows || window > slm.cols {
            return Err(Error::config(format!("input window {window} does not fit the {slm} SLM")));
        }
        Ok(InputEncoder { slm, window })
    }

    pub fn encode(&self, digit: &LabeledDigit) -> PhaseMap {
        let w = self.window;
        let small = resize_bilinear(&digit.pixels, digit.shape, Shape::new(w, w));
        let (r0, c0) = ((self.slm.rows - w) / 2, (self.slm.cols - w) / 2);
        let mut data = vec![0.0; self.slm.len()];
        for r in 0..w {
            for c in 0..w {
                data[(r0 + r) * self.slm.cols + c0 + c] = PI * small[r * w + c].clamp(0.0, 1.0);
            }
        }
        PhaseMap::from_vec_unchecked(self.slm, data)
    }
}

/// Digits with their input phases computed once.
#[derive(Clone, Debug)]
pub struct EncodedSet {
    pub inputs: Vec<PhaseMap>,
    pub labels: Vec<u8>,
}

impl EncodedSet {
    pub fn new(digits: &[LabeledDigit], encoder: &InputEncoder) -> Self {
        EncodedSet {
            inputs: digits.iter().map(|d| encoder.encode(d)).collect(),
            labels: digits.iter().map(|d| d.label).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// `E_label / Σ E`; 0 for a dark frame.
pub(crate) fn correct_fraction(image: &IntensityImage, layout: &DetectorLayout, label: u8) -> Result<f64> {
    let e = detector_energies(image, layout)?;
    let label = label as usize;
    if label >= e.len() {
        return Err(Error::Layout(format!("label {label} has no detector region")));
    }
    let total: f64 = e.iter().sum();
    Ok(if total > 0.0 { e[label] / total } else { 0.0 })
}

/// Mean correct-region energy fraction of each phase over the given digits.
/// Consumes `phases.len() · indices.len()` measurements.
pub fn rewards_classify(
    instrument: &mut dyn Instrument,
    phases: &[PhaseMap],
    set: &EncodedSet,
    indices: &[usize],
    layout: &DetectorLayout,
) -> Result<Vec<f64>> {
    if indices.is_empty() {
        return Err(Error::config("classification minibatch must hold at least one digit"));
    }
    let mut acc = vec![0.0; phases.len()];
    for &i in indices {
        let frames = instrument.evaluate_batch(Some(&set.inputs[i]), phases)?;
        for (a, f) in acc.iter_mut().zip(&frames) {
            *a += correct_fraction(f, layout, set.labels[i])?;
        }
    }
    let b = indices.len() as f64;
    Ok(acc.into_iter().map(|a| a / b).collect())
}

/// Single-phase form of [`rewards_classify`].
pub fn reward_classify(
    instrument: &mut dyn Instrument,
    phase: &PhaseMap,
    set: &EncodedSet,
    indices: &[usize],
    layout: &DetectorLayout,
) -> Result<f64> {
    Ok(rewards_classify(instrument, std::slice::from_ref(phase), set, indices, layout)?[0])
}

/// Fraction of digits whose brightest region matches the label.
pub fn accuracy(
    instrument: &mut dyn Instrument,
    phase: &PhaseMap,
    set: &EncodedSet,
    layout: &DetectorLayout,
) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Data("accuracy of an empty test set".into()));
    }
    let mut correct = 0usize;
    for (input, &label) in set.inputs.iter().zip(&set.labels) {
        let img = instrument.measure(Some(input), phase)?;
        if argmax(&detector_energies(&img, layout)?) == label as usize {
            correct += 1;
        }
    }
    Ok(correct as f64 / set.len() as f64)
}
