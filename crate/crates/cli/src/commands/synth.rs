use std::path::PathBuf;

use clap::Args;
use histomil::Result;

use crate::config::{echo_run, PipelineConfig};
use crate::synth::{generate, SynthSpec};

/// Generate the deterministic synthetic benchmark dataset.
#[derive(Debug, Args)]
pub struct SynthArgs {
    /// output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long = "tiles-per-sample", default_value_t = 20)]
    pub tiles_per_sample: usize,
    #[arg(long = "tile-size", default_value_t = 64)]
    pub tile_size: usize,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        samples: args.samples,
        tiles_per_sample: args.tiles_per_sample,
        tile_size: args.tile_size,
        seed: args.seed,
    };
    let summary = generate(&spec, &args.out)?;
    let config = PipelineConfig {
        seed: args.seed,
        tiling: crate::config::TilingConfig {
            tile_size: args.tile_size,
            min_tissue: 0.5,
        },
        ..Default::default()
    };
    echo_run(&args.out, "synth", &[], &config)?;
    println!(
        "wrote {} samples x {} tiles to {}",
        args.samples,
        args.tiles_per_sample,
        summary.manifest_path.display()
    );
    Ok(())
}
