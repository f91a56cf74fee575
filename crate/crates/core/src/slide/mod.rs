//! Slide ingestion: raster I/O, tissue masking, tile extraction, and the
//! tile manifest format.

mod image;
mod tile;

pub use image::RgbImage;
pub use tile::{
    ingest_tile_dir, tile_slide, tissue_mask, SlideImage, TileManifest, TileRecord,
    DEFAULT_MIN_TISSUE, DEFAULT_TILE_SIZE,
};
