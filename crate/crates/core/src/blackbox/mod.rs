//! The instrument boundary. Optimisers see an [`EnvDescriptor`] and images,
//! nothing else; imperfections stay behind [`Instrument`].

mod client;
pub mod frame;
mod server;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, Shape};
use crate::optics::{Bench, BenchConfig, IntensityImage, PhaseMap};

pub use client::{handshake, RemoteInstrument, DEFAULT_TIMEOUT};
pub use server::{serve_sim, SimServer};

pub const PROTOCOL_VERSION: u32 = 1;
pub const ADDR_ENV_VAR: &str = "INSITU_INSTRUMENT_ADDR";

/// Everything an instrument advertises about itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnvDescriptor {
    /// SLM grid.
    pub shape: Shape,
    /// Distinct phase levels, `2^slm_bits`.
    pub levels: u32,
    pub sensor: Shape,
    pub version: u32,
}

/// A phase-in, image-out measurement device.
pub trait Instrument {
    fn descriptor(&self) -> EnvDescriptor;

    /// Display each phase map in turn (on top of `input`, if any) and return
    /// one camera frame per map.
    fn evaluate_batch(&mut self, input: Option<&PhaseMap>, phases: &[PhaseMap]) -> Result<Vec<IntensityImage>>;

    /// Frames captured so far.
    fn measurements(&self) -> u64;

    fn measure(&mut self, input: Option<&PhaseMap>, phase: &PhaseMap) -> Result<IntensityImage> {
        let mut out = self.evaluate_batch(input, std::slice::from_ref(phase))?;
        out.pop()
            .ok_or_else(|| Error::Instrument("instrument returned no frame".into()))
    }
}

/// Noise stream for connection `index` of a simulator seeded with `seed`.
pub(crate) fn noise_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// In-process simulator binding.
///
/// Phases and frames pass through `f32`, the wire precision, so this binding
/// and a remote one over the same simulator agree bit for bit. The noise
/// stream matches the first connection to a [`SimServer`].
#[derive(Clone, Debug)]
pub struct LocalInstrument {
    bench: Bench,
    rng: ChaCha8Rng,
    count: u64,
}

impl LocalInstrument {
    pub fn new(config: BenchConfig) -> Result<Self> {
        let seed = config.seed;
        Ok(LocalInstrument {
            bench: Bench::new(config)?,
            rng: noise_rng(seed, 0),
            count: 0,
        })
    }

    pub(crate) fn with_stream(bench: Bench, index: u64) -> Self {
        let seed = bench.config().seed;
        LocalInstrument {
            bench,
            rng: noise_rng(seed, index),
            count: 0,
        }
    }

    pub(crate) fn bench(&self) -> &Bench {
        &self.bench
    }

    pub(crate) fn check(&self, phase: &PhaseMap) -> Result<()> {
        Error::check_shape(self.bench.shape(), phase.shape())
    }
}

pub(crate) fn descriptor_of(bench: &Bench) -> EnvDescriptor {
    EnvDescriptor {
        shape: bench.shape(),
        levels: bench.phase_levels(),
        sensor: bench.shape(),
        version: PROTOCOL_VERSION,
    }
}

impl Instrument for LocalInstrument {
    fn descriptor(&self) -> EnvDescriptor {
        descriptor_of(&self.bench)
    }

    fn evaluate_batch(&mut self, input: Option<&PhaseMap>, phases: &[PhaseMap]) -> Result<Vec<IntensityImage>> {
        if let Some(inp) = input {
            self.check(inp)?;
        }
        phases.iter().try_for_each(|p| self.check(p))?;
        let input = input.map(PhaseMap::to_f32_precision);
        let mut out = Vec::with_capacity(phases.len());
        for p in phases {
            let img = self.bench.run(input.as_ref(), &p.to_f32_precision(), &mut self.rng)?;
            out.push(img.to_f32_precision());
            self.count += 1;
        }
        Ok(out)
    }

    fn measurements(&self) -> u64 {
        self.count
    }
}
