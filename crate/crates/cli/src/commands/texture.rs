use std::path::{Path, PathBuf};

use clap::Args;
use histomil::slide::{RgbImage, TileManifest};
use histomil::texture::{glcm_features, to_gray};
use histomil::{Error, Result};

use crate::config::{echo_run, PipelineConfig};
use crate::tables::Table;

/// Compute the angle-averaged co-occurrence texture features per tile.
#[derive(Debug, Args)]
pub struct TextureArgs {
    /// tile manifest CSV
    #[arg(long, conflicts_with = "tiles")]
    pub manifest: Option<PathBuf>,
    /// any CSV with a `path` column (e.g. tile_scores.csv)
    #[arg(long)]
    pub tiles: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn feature_row(id: &str, path: &Path) -> Result<Vec<String>> {
    let img = RgbImage::load(path)?;
    let gray = to_gray(img.height(), img.width(), img.pixels())?;
    let f = glcm_features(&gray)?;
    let mut row = vec![id.to_string()];
    row.extend(f.as_array().iter().map(|v| v.to_string()));
    Ok(row)
}

pub fn run(args: &TextureArgs) -> Result<()> {
    let mut columns = vec!["id"];
    columns.extend(histomil::texture::GlcmFeatures::NAMES);
    let mut table = Table::new(&columns);

    let input: PathBuf;
    match (&args.manifest, &args.tiles) {
        (Some(manifest_path), None) => {
            input = manifest_path.clone();
            let manifest = TileManifest::load(manifest_path)?;
            for rec in &manifest.records {
                let id = format!("{}:{}", rec.sample_id, rec.tile_index);
                table.push(feature_row(&id, &rec.path)?);
            }
        }
        (None, Some(tiles_path)) => {
            input = tiles_path.clone();
            let t = Table::load(tiles_path)?;
            for path in t.column("path")? {
                table.push(feature_row(path, Path::new(path))?);
            }
        }
        _ => {
            return Err(Error::Argument(
                "exactly one of --manifest or --tiles is required".into(),
            ))
        }
    }

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let features_path = args.out.join("texture_features.csv");
    table.save(&features_path)?;
    echo_run(
        &args.out,
        "texture",
        &[&input],
        &PipelineConfig::load(None)?,
    )?;
    println!(
        "computed texture features for {} tiles -> {}",
        table.rows.len(),
        features_path.display()
    );
    Ok(())
}
