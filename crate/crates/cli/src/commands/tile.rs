use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use histomil::slide::{ingest_tile_dir, tile_slide, RgbImage, SlideImage, TileManifest};
use histomil::{Error, Result};

use crate::config::{echo_run, PipelineConfig};

/// Cut slides into tissue tiles and write the manifest.
#[derive(Debug, Args)]
pub struct TileArgs {
    /// slide image, directory of slide images, or directory of per-sample
    /// tile subdirectories
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "tile-size")]
    pub tile_size: Option<usize>,
    #[arg(long = "min-tissue")]
    pub min_tissue: Option<f64>,
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("png") | Some("ppm")
    )
}

fn sample_id_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn run(args: &TileArgs) -> Result<()> {
    let mut config = PipelineConfig::load(args.config.as_deref())?;
    if let Some(ts) = args.tile_size {
        config.tiling.tile_size = ts;
    }
    if let Some(mt) = args.min_tissue {
        config.tiling.min_tissue = mt;
    }
    config.validate()?;
    let tile_size = config.tiling.tile_size;
    let min_tissue = config.tiling.min_tissue;

    let tiles_dir = args.out.join("tiles");
    fs::create_dir_all(&tiles_dir).map_err(|e| Error::io(&tiles_dir, e))?;

    let mut manifest = TileManifest::new(tile_size, min_tissue, config.seed);
    if args.input.is_file() {
        let slide = SlideImage {
            sample_id: sample_id_of(&args.input),
            image: RgbImage::load(&args.input)?,
        };
        manifest
            .records
            .extend(tile_slide(&slide, &tiles_dir, tile_size, min_tissue)?);
    } else if args.input.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(&args.input)
            .map_err(|e| Error::io(&args.input, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for entry in entries {
            if entry.is_file() && is_image(&entry) {
                let slide = SlideImage {
                    sample_id: sample_id_of(&entry),
                    image: RgbImage::load(&entry)?,
                };
                manifest
                    .records
                    .extend(tile_slide(&slide, &tiles_dir, tile_size, min_tissue)?);
            } else if entry.is_dir() {
                // pre-extracted tiles; the directory name is the sample id
                manifest.records.extend(ingest_tile_dir(
                    &sample_id_of(&entry),
                    &entry,
                    tile_size,
                    min_tissue,
                )?);
            }
        }
    } else {
        return Err(Error::io(
            &args.input,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input not found"),
        ));
    }

    manifest.validate()?;
    let manifest_path = args.out.join("manifest.csv");
    manifest.save(&manifest_path)?;
    echo_run(&args.out, "tile", &[&args.input], &config)?;
    println!(
        "kept {} tiles from {} samples -> {}",
        manifest.records.len(),
        manifest.sample_ids().len(),
        manifest_path.display()
    );
    Ok(())
}
