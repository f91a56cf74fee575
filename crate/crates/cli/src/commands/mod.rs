pub mod cam;
pub mod eval;
pub mod gradcheck;
pub mod label;
pub mod report;
pub mod score;
pub mod shape;
pub mod synth;
pub mod texture;
pub mod tile;
pub mod train;

use std::path::Path;

use histomil::mil::{tile_to_tensor, MilModel};
use histomil::slide::{RgbImage, TileManifest};
use histomil::{Error, Result};

/// Tiles of one sample as network inputs, in tile-index order.
pub(crate) fn sample_tensors(
    manifest: &TileManifest,
    sample_id: &str,
    tile_size: usize,
) -> Result<Vec<histomil::autograd::Tensor<f32>>> {
    let records = manifest.tiles_of(sample_id);
    if records.is_empty() {
        return Err(Error::Argument(format!(
            "sample `{sample_id}` has no tiles in the manifest"
        )));
    }
    let mut tensors = Vec::with_capacity(records.len());
    for rec in records {
        let img = RgbImage::load(&rec.path)?;
        if img.width() != tile_size || img.height() != tile_size {
            return Err(Error::Config(format!(
                "tile {} is {}x{}, model expects {tile_size}x{tile_size}",
                rec.path.display(),
                img.height(),
                img.width()
            )));
        }
        tensors.push(tile_to_tensor(&img));
    }
    Ok(tensors)
}

pub(crate) fn load_model(path: &Path) -> Result<MilModel<f32>> {
    Ok(histomil::mil::load_checkpoint(path)?.0)
}
