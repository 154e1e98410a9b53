//! Writes a synthetic mortality surface and annuitant portfolio.
//!
//! cargo run --release -p longevity-core --example synthetic_inputs -- OUT_DIR [SEED]

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use longevity_core::save_surface;
use longevity_core::synthetic::{lee_carter_surface, reference_portfolio, SyntheticSurfaceSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| ".".into()));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    std::fs::create_dir_all(&dir)?;

    let spec = SyntheticSurfaceSpec {
        seed,
        sigma_eps: 0.02,
        ..SyntheticSurfaceSpec::default()
    };
    let surface = lee_carter_surface(&spec)?.surface;
    save_surface(
        &surface,
        BufWriter::new(File::create(dir.join("surface.csv"))?),
    )?;
    reference_portfolio(seed)?.save(BufWriter::new(File::create(dir.join("portfolio.csv"))?))?;
    println!("{}", dir.join("surface.csv").display());
    println!("{}", dir.join("portfolio.csv").display());
    Ok(())
}
