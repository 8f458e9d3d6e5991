//! Free-space propagation and the simulated bench.
//!
//! Propagates a Zernike-aberrated plane wave, checks energy conservation and
//! writes the noise-free and noisy camera frames as PGM images.
//!
//! `cargo run --release --example propagate -- [out_dir]`

use std::fs::File;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use insitu::optics::io::write_pgm;
use insitu::optics::{apply_phase, propagate, zernike_phase, Bench, BenchConfig, ComplexField, ZernikeCoeffs};
use insitu::Shape;

fn main() -> insitu::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out/propagate".into()));
    std::fs::create_dir_all(&out)?;

    let shape = Shape::new(64, 64);
    let z = ZernikeCoeffs {
        defocus: 1.0,
        astigmatism: 0.0,
        coma: 0.0,
    };
    let screen = zernike_phase(&z, shape);
    let field = apply_phase(&ComplexField::plane_wave(shape, 8.0, 0.52)?, &screen)?;
    let far = propagate(&field, 50.0)?;
    // Light diffracted past the window edge is lost, so the ratio is below 1.
    println!(
        "energy in {:.1}, inside the window after 50 mm {:.1} ({:.1}%)",
        field.energy(),
        far.energy(),
        100.0 * far.energy() / field.energy()
    );

    let bench = Bench::new(BenchConfig::default())?;
    let clean = bench.intensity(None, &screen)?;
    let noisy = bench.run(None, &screen, &mut ChaCha8Rng::seed_from_u64(0))?;
    println!("peak {:.4}, noisy peak {:.4}", clean.max(), noisy.max());
    write_pgm(File::create(out.join("clean.pgm"))?, shape, clean.data())?;
    write_pgm(File::create(out.join("noisy.pgm"))?, shape, noisy.data())?;
    println!("wrote {}", out.display());
    Ok(())
}
