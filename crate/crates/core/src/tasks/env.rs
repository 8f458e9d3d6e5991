//! Task environments for the trainers and matching in-silico objectives.
//!
//! Each environment pairs the counted training instrument with a separate
//! noise-free evaluator used only for the reported metric.

use rand::seq::index::sample;
use rand::RngCore;

use crate::blackbox::{Instrument, LocalInstrument};
use crate::error::{Error, Result, Shape};
use crate::optics::{detector_energies, Bench, BenchConfig, DetectorLayout, IntensityImage, PhaseMap};
use crate::rl::{gain_mse_grad, Environment, InSilicoObjective};

use super::classify::{accuracy, correct_fraction, rewards_classify, EncodedSet};
use super::rewards::{center_contrast, psnr, reward_focus, reward_hologram};

/// Noise-free twin of `config` used for evaluation.
pub fn evaluator(config: &BenchConfig) -> Result<LocalInstrument> {
    LocalInstrument::new(config.noise_free())
}

fn energy_ratio(image: &IntensityImage, layout: &DetectorLayout, target: usize) -> Result<f64> {
    Ok(reward_focus(&detector_energies(image, layout)?, target)?.value)
}

/// Steer light into one detector region.
pub struct FocusEnv {
    instrument: Box<dyn Instrument>,
    evaluator: LocalInstrument,
    layout: DetectorLayout,
    target: usize,
    /// Frames that came back completely dark in the target layout.
    pub degenerate_frames: u64,
}

impl FocusEnv {
    pub fn new(
        instrument: Box<dyn Instrument>,
        evaluator: LocalInstrument,
        layout: DetectorLayout,
        target: usize,
    ) -> Result<Self> {
        let d = instrument.descriptor();
        Error::check_shape(d.shape, evaluator.descriptor().shape)?;
        layout.validate_for(d.sensor)?;
        if target >= layout.len() {
            return Err(Error::config(format!("target region {target} outside a {}-region layout", layout.len())));
        }
        Ok(FocusEnv {
            instrument,
            evaluator,
            layout,
            target,
            degenerate_frames: 0,
        })
    }

    pub fn instrument(&self) -> &dyn Instrument {
        self.instrument.as_ref()
    }
}

impl Environment for FocusEnv {
    fn shape(&self) -> Shape {
        self.instrument.descriptor().shape
    }

    fn rewards(&mut self, phases: &[PhaseMap], _rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let frames = self.instrument.evaluate_batch(None, phases)?;
        frames
            .iter()
            .map(|f| {
                let r = reward_focus(&detector_energies(f, &self.layout)?, self.target)?;
                self.degenerate_frames += r.degenerate as u64;
                Ok(r.value)
            })
            .collect()
    }

    /// Energy ratio of the mean phase on the noise-free evaluator.
    fn metric(&mut self, mean: &PhaseMap) -> Result<f64> {
        let img = self.evaluator.measure(None, mean)?;
        energy_ratio(&img, &self.layout, self.target)
    }
}

/// Reproduce a target intensity (also used for aberration correction, with
/// an initial mean supplied).
pub struct HologramEnv {
    instrument: Box<dyn Instrument>,
    evaluator: LocalInstrument,
    target: IntensityImage,
    initial: Option<PhaseMap>,
}

impl HologramEnv {
    pub fn new(instrument: Box<dyn Instrument>, evaluator: LocalInstrument, target: IntensityImage) -> Result<Self> {
        Error::check_shape(instrument.descriptor().sensor, target.shape())?;
        Ok(HologramEnv {
            instrument,
            evaluator,
            target,
            initial: None,
        })
    }

    /// Start the policy mean at `phase` instead of zeros.
    pub fn with_initial(mut self, phase: PhaseMap) -> Result<Self> {
        Error::check_shape(self.instrument.descriptor().shape, phase.shape())?;
        self.initial = Some(phase);
        Ok(self)
    }

    pub fn instrument(&self) -> &dyn Instrument {
        self.instrument.as_ref()
    }

    pub fn target(&self) -> &IntensityImage {
        &self.target
    }

    /// Noise-free image of `phase`.
    pub fn evaluate(&mut self, phase: &PhaseMap) -> Result<IntensityImage> {
        self.evaluator.measure(None, phase)
    }

    /// Centre-row Michelson contrast of the noise-free image of `phase`.
    pub fn contrast(&mut self, phase: &PhaseMap) -> Result<f64> {
        center_contrast(&self.evaluate(phase)?)
    }
}

impl Environment for HologramEnv {
    fn shape(&self) -> Shape {
        self.instrument.descriptor().shape
    }

    fn initial_mean(&self) -> Option<PhaseMap> {
        self.initial.clone()
    }

    fn rewards(&mut self, phases: &[PhaseMap], _rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let frames = self.instrument.evaluate_batch(None, phases)?;
        frames.iter().map(|f| reward_hologram(f, &self.target)).collect()
    }

    /// PSNR of the mean phase on the noise-free evaluator.
    fn metric(&mut self, mean: &PhaseMap) -> Result<f64> {
        let img = self.evaluate(mean)?;
        psnr(&img, &self.target)
    }
}

/// Route each digit's light to the detector of its class.
pub struct ClassifyEnv {
    instrument: Box<dyn Instrument>,
    evaluator: LocalInstrument,
    train: EncodedSet,
    test: EncodedSet,
    layout: DetectorLayout,
    batch_size: usize,
}

impl ClassifyEnv {
    pub fn new(
        instrument: Box<dyn Instrument>,
        evaluator: LocalInstrument,
        train: EncodedSet,
        test: EncodedSet,
        layout: DetectorLayout,
        batch_size: usize,
    ) -> Result<Self> {
        if batch_size == 0 || batch_size > train.len() {
            return Err(Error::config(format!(
                "minibatch size {batch_size} must be in 1..={}",
                train.len()
            )));
        }
        if layout.len() != 10 {
            return Err(Error::Layout(format!("classification needs 10 regions, got {}", layout.len())));
        }
        layout.validate_for(instrument.descriptor().sensor)?;
        Ok(ClassifyEnv {
            instrument,
            evaluator,
            train,
            test,
            layout,
            batch_size,
        })
    }

    pub fn instrument(&self) -> &dyn Instrument {
        self.instrument.as_ref()
    }

    pub fn test_accuracy(&mut self, phase: &PhaseMap) -> Result<f64> {
        accuracy(&mut self.evaluator, phase, &self.test, &self.layout)
    }

    pub fn train_accuracy(&mut self, phase: &PhaseMap) -> Result<f64> {
        accuracy(&mut self.evaluator, phase, &self.train, &self.layout)
    }
}

impl Environment for ClassifyEnv {
    fn shape(&self) -> Shape {
        self.instrument.descriptor().shape
    }

    fn measurements_per_sample(&self) -> usize {
        self.batch_size
    }

    /// One shared random minibatch of digits per round.
    fn rewards(&mut self, phases: &[PhaseMap], rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let idx = sample(rng, self.train.len(), self.batch_size).into_vec();
        rewards_classify(self.instrument.as_mut(), phases, &self.train, &idx, &self.layout)
    }

    /// Held-out accuracy of the mean phase on the noise-free evaluator.
    fn metric(&mut self, mean: &PhaseMap) -> Result<f64> {
        self.test_accuracy(mean)
    }
}

fn noise_free_bench(config: &BenchConfig) -> Result<Bench> {
    Bench::new(config.noise_free())
}

/// `∂(E_t/ΣE)/∂I` over the layout, and the ratio itself.
fn ratio_grad(image: &IntensityImage, layout: &DetectorLayout, target: usize) -> Result<(f64, Vec<f64>)> {
    let e = detector_energies(image, layout)?;
    let total: f64 = e.iter().sum();
    let mut grad = vec![0.0; image.data().len()];
    if total <= 0.0 {
        return Ok((0.0, grad));
    }
    let ratio = e[target] / total;
    let cols = image.shape().cols;
    for (k, reg) in layout.regions().iter().enumerate() {
        let g = ((k == target) as u8 as f64 - ratio) / total;
        for r in reg.row..reg.row + reg.height {
            grad[r * cols + reg.col..r * cols + reg.col + reg.width].fill(g);
        }
    }
    Ok((ratio, grad))
}

/// Maximise the focus energy ratio on the noise-free twin.
pub struct FocusObjective {
    bench: Bench,
    evaluator: LocalInstrument,
    layout: DetectorLayout,
    target: usize,
}

impl FocusObjective {
    pub fn new(config: &BenchConfig, layout: DetectorLayout, target: usize) -> Result<Self> {
        let bench = noise_free_bench(config)?;
        layout.validate_for(bench.shape())?;
        if target >= layout.len() {
            return Err(Error::config("target region outside layout"));
        }
        Ok(FocusObjective {
            evaluator: evaluator(config)?,
            bench,
            layout,
            target,
        })
    }
}

impl InSilicoObjective for FocusObjective {
    fn shape(&self) -> Shape {
        self.bench.shape()
    }

    fn loss_and_grad(&mut self, phase: &PhaseMap, _rng: &mut dyn RngCore) -> Result<(f64, Vec<f64>)> {
        let (layout, target) = (&self.layout, self.target);
        self.bench.model_gradient(None, phase, |img| {
            let (ratio, g) = ratio_grad(img, layout, target)?;
            Ok((-ratio, g.into_iter().map(|v| -v).collect()))
        })
    }

    fn metric(&mut self, phase: &PhaseMap) -> Result<f64> {
        let img = self.evaluator.measure(None, phase)?;
        energy_ratio(&img, &self.layout, self.target)
    }
}

/// Minimise the gain-fitted MSE to a target on the noise-free twin.
pub struct HologramObjective {
    bench: Bench,
    evaluator: LocalInstrument,
    target: IntensityImage,
    initial: Option<PhaseMap>,
}

impl HologramObjective {
    pub fn new(config: &BenchConfig, target: IntensityImage) -> Result<Self> {
        let bench = noise_free_bench(config)?;
        Error::check_shape(bench.shape(), target.shape())?;
        Ok(HologramObjective {
            evaluator: evaluator(config)?,
            bench,
            target,
            initial: None,
        })
    }

    pub fn with_initial(mut self, phase: PhaseMap) -> Self {
        self.initial = Some(phase);
        self
    }
}

impl InSilicoObjective for HologramObjective {
    fn shape(&self) -> Shape {
        self.bench.shape()
    }

    fn loss_and_grad(&mut self, phase: &PhaseMap, _rng: &mut dyn RngCore) -> Result<(f64, Vec<f64>)> {
        let target = &self.target;
        self.bench.model_gradient(None, phase, |img| gain_mse_grad(img, target))
    }

    /// PSNR on the noise-free evaluator.
    fn metric(&mut self, phase: &PhaseMap) -> Result<f64> {
        let img = self.evaluator.measure(None, phase)?;
        psnr(&img, &self.target)
    }

    fn initial_phase(&self) -> PhaseMap {
        self.initial.clone().unwrap_or_else(|| PhaseMap::zeros(self.shape()))
    }
}

/// Maximise the mean correct-region energy fraction on the noise-free twin,
/// one random minibatch per step.
pub struct ClassifyObjective {
    bench: Bench,
    evaluator: LocalInstrument,
    train: EncodedSet,
    test: EncodedSet,
    layout: DetectorLayout,
    batch_size: usize,
}

impl ClassifyObjective {
    pub fn new(
        config: &BenchConfig,
        train: EncodedSet,
        test: EncodedSet,
        layout: DetectorLayout,
        batch_size: usize,
    ) -> Result<Self> {
        let bench = noise_free_bench(config)?;
        layout.validate_for(bench.shape())?;
        if batch_size == 0 || batch_size > train.len() {
            return Err(Error::config("invalid in-silico minibatch size"));
        }
        Ok(ClassifyObjective {
            evaluator: evaluator(config)?,
            bench,
            train,
            test,
            layout,
            batch_size,
        })
    }
}

impl InSilicoObjective for ClassifyObjective {
    fn shape(&self) -> Shape {
        self.bench.shape()
    }

    fn loss_and_grad(&mut self, phase: &PhaseMap, rng: &mut dyn RngCore) -> Result<(f64, Vec<f64>)> {
        let idx = sample(rng, self.train.len(), self.batch_size).into_vec();
        let b = idx.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; phase.data().len()];
        for i in idx {
            let label = self.train.labels[i] as usize;
            let layout = &self.layout;
            let (l, g) = self.bench.model_gradient(Some(&self.train.inputs[i]), phase, |img| {
                let (ratio, g) = ratio_grad(img, layout, label)?;
                Ok((-ratio, g.into_iter().map(|v| -v).collect()))
            })?;
            loss += l / b;
            grad.iter_mut().zip(&g).for_each(|(a, v)| *a += v / b);
        }
        Ok((loss, grad))
    }

    /// Held-out accuracy on the noise-free evaluator.
    fn metric(&mut self, phase: &PhaseMap) -> Result<f64> {
        accuracy(&mut self.evaluator, phase, &self.test, &self.layout)
    }
}

/// Mean correct-region fraction over a whole set, noise-free (diagnostics).
pub fn mean_correct_fraction(
    evaluator: &mut LocalInstrument,
    phase: &PhaseMap,
    set: &EncodedSet,
    layout: &DetectorLayout,
) -> Result<f64> {
    let mut total = 0.0;
    for (input, &label) in set.inputs.iter().zip(&set.labels) {
        total += correct_fraction(&evaluator.measure(Some(input), phase)?, layout, label)?;
    }
    Ok(total / set.len().max(1) as f64)
}
