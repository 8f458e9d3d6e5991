//! Seedable simulation of a phase-only SLM bench.

mod bench;
mod field;
pub mod io;
mod phase;
mod propagation;
mod sensor;

pub use bench::{run_bench, AberrationConfig, Bench, BenchConfig, DiffuserConfig};
pub use field::{wrap_phase, ComplexField, IntensityImage, PhaseMap};
pub use phase::{apply_phase, make_diffuser, quantize_phase, zernike_phase, ZernikeCoeffs};
pub use propagation::{propagate, propagate_with, Boundary, Propagator};
pub use sensor::{detector_energies, measure, DetectorLayout, NoiseModel, Region};
