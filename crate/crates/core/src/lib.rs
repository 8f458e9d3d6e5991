//! Model-free, in-situ training of diffractive optical processors.
//!
//! The crate pairs a proximal-policy-optimization trainer that only ever sees
//! phase patterns and camera frames with a seedable simulator of a phase-only
//! SLM bench (including imperfections the trainer is never told about).
//!
//! * [`optics`]: propagation, modulation, aberrations, camera noise.
//! * [`policy`]: Gaussian policy over phase maps.
//! * [`rl`]: advantages, clipped surrogate and policy-gradient losses, Adam,
//!   the training loops, and the model-based (adjoint) baseline.
//! * [`tasks`]: rewards and metrics for focusing, holography, aberration
//!   correction and classification, plus MNIST ingestion.
//! * [`blackbox`]: the instrument boundary, in-process and over TCP.
//! * [`experiment`]: configuration, experiment runs, comparisons, plots.

pub mod blackbox;
pub mod error;
pub mod experiment;
pub mod optics;
pub mod policy;
pub mod rl;
pub mod tasks;

pub use error::{Error, Result, Shape};
