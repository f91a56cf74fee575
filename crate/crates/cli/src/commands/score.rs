use std::path::PathBuf;

use clap::Args;
use histomil::mil::{score_single_tiles, tile_to_tensor};
use histomil::slide::{RgbImage, TileManifest};
use histomil::{Error, Result};

use crate::commands::load_model;
use crate::config::{echo_run, PipelineConfig};
use crate::tables::Table;

/// Classify single tiles as confident hypoxic/normoxic, dropping the rest.
#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
    /// restrict to a comma-separated list of sample ids
    #[arg(long)]
    pub samples: Option<String>,
}

pub fn run(args: &ScoreArgs) -> Result<()> {
    let model = load_model(&args.checkpoint)?;
    let manifest = TileManifest::load(&args.manifest)?;
    let wanted: Option<Vec<&str>> = args.samples.as_deref().map(|s| s.split(',').collect());

    let mut table = Table::new(&["sample_id", "tile_index", "path", "score", "class"]);
    let mut scored = 0usize;
    for sample_id in manifest.sample_ids() {
        if let Some(w) = &wanted {
            if !w.contains(&sample_id.as_str()) {
                continue;
            }
        }
        let records = manifest.tiles_of(&sample_id);
        let mut tensors = Vec::with_capacity(records.len());
        for rec in &records {
            let img = RgbImage::load(&rec.path)?;
            tensors.push(tile_to_tensor::<f32>(&img));
        }
        scored += tensors.len();
        for kept in score_single_tiles(&model, &tensors, args.threshold)? {
            let rec = records[kept.tile_index];
            table.push(vec![
                rec.sample_id.clone(),
                rec.tile_index.to_string(),
                rec.path.display().to_string(),
                kept.score.to_string(),
                kept.class.as_str().to_string(),
            ]);
        }
    }

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let scores_path = args.out.join("tile_scores.csv");
    table.save(&scores_path)?;
    echo_run(
        &args.out,
        "score-tiles",
        &[&args.checkpoint, &args.manifest],
        &PipelineConfig::load(None)?,
    )?;
    println!(
        "kept {} of {scored} tiles at threshold {} -> {}",
        table.rows.len(),
        args.threshold,
        scores_path.display()
    );
    Ok(())
}
