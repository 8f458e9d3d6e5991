//! Gaussian policy over phase maps with a shared, learnable standard deviation.
//!
//! Samples are unwrapped reals so the density stays an exact Gaussian; the
//! instrument wraps and quantises them on display.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result, Shape};
use crate::optics::io::{read_raw, write_raw, DataKind};
use crate::optics::PhaseMap;

pub const LOG_SIGMA_MIN: f64 = -4.605_170_185_988_091; // ln 0.01
pub const LOG_SIGMA_MAX: f64 = -0.693_147_180_559_945_3; // ln 0.5
pub const INITIAL_SIGMA: f64 = 0.15;
pub const LOG_RATIO_CLAMP: f64 = 20.0;

/// Per-pixel mean phase `μ` and one shared `log σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPolicy {
    shape: Shape,
    mu: Vec<f64>,
    log_sigma: f64,
}

/// Gradient of a scalar with respect to the policy parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyGrad {
    pub mu: Vec<f64>,
    pub log_sigma: f64,
}

impl PolicyGrad {
    pub fn zeros(n: usize) -> Self {
        PolicyGrad {
            mu: vec![0.0; n],
            log_sigma: 0.0,
        }
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &PolicyGrad, scale: f64) {
        debug_assert_eq!(self.mu.len(), other.mu.len());
        self.mu.iter_mut().zip(&other.mu).for_each(|(a, b)| *a += scale * b);
        self.log_sigma += scale * other.log_sigma;
    }
}

/// `M` phase maps drawn from one policy, with their log-densities under it.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub phases: Vec<PhaseMap>,
    pub log_probs: Vec<f64>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

impl GaussianPolicy {
    /// Policy with the given mean; `log_sigma` is clamped into range.
    pub fn new(mean: PhaseMap, log_sigma: f64) -> Result<Self> {
        if !log_sigma.is_finite() {
            return Err(Error::Data("log_sigma must be finite".into()));
        }
        Ok(GaussianPolicy {
            shape: mean.shape(),
            mu: mean.into_data(),
            log_sigma: log_sigma.clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX),
        })
    }

    /// Zero mean, `σ = 0.15`.
    pub fn zeros(shape: Shape) -> Self {
        Self::with_mean(PhaseMap::zeros(shape))
    }

    /// Given mean, `σ = 0.15`.
    pub fn with_mean(mean: PhaseMap) -> Self {
        GaussianPolicy {
            shape: mean.shape(),
            mu: mean.into_data(),
            log_sigma: INITIAL_SIGMA.ln(),
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn mean_phase(&self) -> PhaseMap {
        PhaseMap::from_vec_unchecked(self.shape, self.mu.clone())
    }

    pub fn log_sigma(&self) -> f64 {
        self.log_sigma
    }

    pub fn sigma(&self) -> f64 {
        self.log_sigma.exp()
    }

    /// Replace the parameters, clamping `log_sigma`. Non-finite values are rejected.
    pub fn set_params(&mut self, mu: Vec<f64>, log_sigma: f64) -> Result<()> {
        if mu.len() != self.shape.len() {
            return Err(Error::Dimension {
                expected: self.shape,
                got: Shape::new(1, mu.len()),
            });
        }
        if !log_sigma.is_finite() || mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("policy update produced non-finite parameters".into()));
        }
        self.mu = mu;
        self.log_sigma = log_sigma.clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX);
        Ok(())
    }

    /// Draw `m` phase maps `μ + σ·z`.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<SampleBatch> {
        if m < 2 {
            return Err(Error::config(format!("need at least 2 samples per batch, got {m}")));
        }
        let sigma = self.sigma();
        let mut phases = Vec::with_capacity(m);
        let mut log_probs = Vec::with_capacity(m);
        for _ in 0..m {
            let data: Vec<f64> = self
                .mu
                .iter()
                .map(|&mu| mu + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let phase = PhaseMap::from_vec_unchecked(self.shape, data);
            log_probs.push(self.log_prob(&phase)?);
            phases.push(phase);
        }
        Ok(SampleBatch { phases, log_probs })
    }

    fn log_norm(&self) -> f64 {
        let n = self.mu.len() as f64;
        -n * self.log_sigma - 0.5 * n * TAU.ln()
    }

    fn sq_dist(&self, phase: &PhaseMap) -> Result<f64> {
        Error::check_shape(self.shape, phase.shape())?;
        Ok(phase
            .data()
            .iter()
            .zip(&self.mu)
            .map(|(p, m)| (p - m) * (p - m))
            .sum())
    }

    /// `−Σ(φ−μ)²/(2σ²) − N·ln σ − (N/2)·ln 2π`.
    pub fn log_prob(&self, phase: &PhaseMap) -> Result<f64> {
        let var = (2.0 * self.log_sigma).exp();
        Ok(-self.sq_dist(phase)? / (2.0 * var) + self.log_norm())
    }

    /// `(∂/∂μ, ∂/∂log σ)` of [`GaussianPolicy::log_prob`].
    pub fn grad_log_prob(&self, phase: &PhaseMap) -> Result<PolicyGrad> {
        Error::check_shape(self.shape, phase.shape())?;
        let inv_var = (-2.0 * self.log_sigma).exp();
        let mut sq = 0.0;
        let mu = phase
            .data()
            .iter()
            .zip(&self.mu)
            .map(|(p, m)| {
                let d = p - m;
                sq += d * d;
                d * inv_var
            })
            .collect();
        Ok(PolicyGrad {
            mu,
            log_sigma: sq * inv_var - self.mu.len() as f64,
        })
    }

    /// `N·(ln σ + ½·ln 2πe)`.
    pub fn entropy(&self) -> f64 {
        self.mu.len() as f64 * (self.log_sigma + 0.5 * (2.0 * PI * std::f64::consts::E).ln())
    }

    /// Derivative of [`GaussianPolicy::entropy`] with respect to `log σ`.
    pub fn entropy_grad_log_sigma(&self) -> f64 {
        self.mu.len() as f64
    }

    pub fn save(&self, path: &Path, step: u64) -> Result<()> {
        let file = fs::File::create(path)?;
        write_raw(std::io::BufWriter::new(file), self.shape, DataKind::PolicyMean, &self.mu)?;
        fs::write(
            sidecar(path),
            format!("log_sigma = {:e}\nstep = {step}\n", self.log_sigma),
        )?;
        Ok(())
    }

    /// Inverse of [`GaussianPolicy::save`]; returns the policy and step count.
    /// The mean is stored at `f32` precision.
    pub fn load(path: &Path) -> Result<(Self, u64)> {
        let (shape, kind, mu) = read_raw(fs::File::open(path)?)?;
        if kind != DataKind::PolicyMean {
            return Err(Error::format(12, "checkpoint does not hold a policy mean"));
        }
        let text = fs::read_to_string(sidecar(path))?;
        let mut log_sigma = None;
        let mut step = None;
        for line in text.lines() {
            let Some((key, value)) = line.split_once('=') else { continue };
            match key.trim() {
                "log_sigma" => log_sigma = value.trim().parse::<f64>().ok(),
                "step" => step = value.trim().parse::<u64>().ok(),
                _ => {}
            }
        }
        let (Some(log_sigma), Some(step)) = (log_sigma, step) else {
            return Err(Error::Data("checkpoint sidecar lacks log_sigma or step".into()));
        };
        let policy = GaussianPolicy::new(PhaseMap::new(shape, mu)?, log_sigma)?;
        Ok((policy, step))
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".txt");
    PathBuf::from(name)
}

/// `log π_new(φ) − log π_old(φ)`, clamped to `±20`.
pub fn log_ratio(new: &GaussianPolicy, old: &GaussianPolicy, phase: &PhaseMap) -> Result<f64> {
    Error::check_shape(new.shape, old.shape)?;
    if new == old {
        Error::check_shape(new.shape, phase.shape())?;
        return Ok(0.0);
    }
    let v = new.log_prob(phase)? - old.log_prob(phase)?;
    Ok(v.clamp(-LOG_RATIO_CLAMP, LOG_RATIO_CLAMP))
}

/// `KL(new ‖ old)` between diagonal Gaussians.
pub fn kl(new: &GaussianPolicy, old: &GaussianPolicy) -> Result<f64> {
    Error::check_shape(old.shape, new.shape)?;
    let n = new.mu.len() as f64;
    let var_new = (2.0 * new.log_sigma).exp();
    let var_old = (2.0 * old.log_sigma).exp();
    let sq: f64 = new.mu.iter().zip(&old.mu).map(|(a, b)| (a - b) * (a - b)).sum();
    let v = n * (old.log_sigma - new.log_sigma) + (n * var_new + sq) / (2.0 * var_old) - 0.5 * n;
    Ok(v.max(0.0))
}
