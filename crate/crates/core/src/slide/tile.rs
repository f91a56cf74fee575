use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::slide::image::RgbImage;

pub const DEFAULT_TILE_SIZE: usize = 512;
pub const DEFAULT_MIN_TISSUE: f64 = 0.5;

/// A slide-scale raster with its sample identity.
#[derive(Debug, Clone)]
pub struct SlideImage {
    pub sample_id: String,
    pub image: RgbImage,
}

/// Provenance of one kept tile.
#[derive(Debug, Clone, PartialEq)]
pub struct TileRecord {
    pub sample_id: String,
    pub tile_index: u32,
    /// pixel offset of the tile origin in the slide
    pub row: u32,
    pub col: u32,
    pub tissue_fraction: f64,
    pub path: PathBuf,
}

/// Index of kept tiles across a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TileManifest {
    pub tile_size: usize,
    pub min_tissue: f64,
    pub seed: u64,
    pub records: Vec<TileRecord>,
}

/// Tissue iff HSV saturation > 0.05 and value < 0.98. Standard background
/// rejection for stained tissue on a bright field.
pub fn tissue_mask(image: &RgbImage) -> Vec<bool> {
    image
        .pixels()
        .chunks_exact(3)
        .map(|px| {
            let max = px[0].max(px[1]).max(px[2]) as f64 / 255.0;
            let min = px[0].min(px[1]).min(px[2]) as f64 / 255.0;
            let sat = if max > 0.0 { (max - min) / max } else { 0.0 };
            sat > 0.05 && max < 0.98
        })
        .collect()
}

/// Fraction of tissue pixels inside one tile window of the mask.
fn window_fraction(mask: &[bool], slide_width: usize, row: usize, col: usize, size: usize) -> f64 {
    let mut count = 0usize;
    for r in row..row + size {
        for c in col..col + size {
            if mask[r * slide_width + c] {
                count += 1;
            }
        }
    }
    count as f64 / (size * size) as f64
}

/// Cut the non-overlapping tile grid from origin (0,0), discard partial edge
/// tiles, keep tiles whose tissue fraction reaches `min_tissue`, and write
/// each kept tile as a PNG under `out_dir`. Records are in row-major grid
/// order with tile indices assigned over kept tiles.
pub fn tile_slide(
    slide: &SlideImage,
    out_dir: &Path,
    tile_size: usize,
    min_tissue: f64,
) -> Result<Vec<TileRecord>> {
    if tile_size == 0 {
        return Err(Error::Argument("tile_size must be at least 1".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mask = tissue_mask(&slide.image);
    let (h, w) = (slide.image.height(), slide.image.width());
    let mut records = Vec::new();
    let mut index = 0u32;
    for gy in 0..h / tile_size {
        for gx in 0..w / tile_size {
            let row = gy * tile_size;
            let col = gx * tile_size;
            let fraction = window_fraction(&mask, w, row, col, tile_size);
            if fraction < min_tissue {
                continue;
            }
            let tile = slide.image.crop(row, col, tile_size)?;
            let path = out_dir.join(format!("{}_{index:04}.png", slide.sample_id));
            tile.save_png(&path)?;
            records.push(TileRecord {
                sample_id: slide.sample_id.clone(),
                tile_index: index,
                row: row as u32,
                col: col as u32,
                tissue_fraction: fraction,
                path,
            });
            index += 1;
        }
    }
    Ok(records)
}

/// Ingest a directory of pre-extracted tiles as one sample. Files are taken
/// in name order; each must already be `tile_size` square. Grid origins are
/// synthesized as a vertical strip (row = index * tile_size).
pub fn ingest_tile_dir(
    sample_id: &str,
    dir: &Path,
    tile_size: usize,
    min_tissue: f64,
) -> Result<Vec<TileRecord>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("png") | Some("ppm")
            )
        })
        .collect();
    paths.sort();
    let mut records = Vec::new();
    let mut index = 0u32;
    for path in paths {
        let img = RgbImage::load(&path)?;
        if img.width() != tile_size || img.height() != tile_size {
            return Err(Error::image(
                &path,
                format!(
                    "tile is {}x{}, expected {tile_size}x{tile_size}",
                    img.height(),
                    img.width()
                ),
            ));
        }
        let mask = tissue_mask(&img);
        let fraction = mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64;
        if fraction < min_tissue {
            continue;
        }
        records.push(TileRecord {
            sample_id: sample_id.to_string(),
            tile_index: index,
            row: index * tile_size as u32,
            col: 0,
            tissue_fraction: fraction,
            path,
        });
        index += 1;
    }
    Ok(records)
}

impl TileManifest {
    pub fn new(tile_size: usize, min_tissue: f64, seed: u64) -> Self {
        TileManifest {
            tile_size,
            min_tissue,
            seed,
            records: Vec::new(),
        }
    }

    /// Tiles of one sample, in tile-index order.
    pub fn tiles_of(&self, sample_id: &str) -> Vec<&TileRecord> {
        self.records
            .iter()
            .filter(|r| r.sample_id == sample_id)
            .collect()
    }

    pub fn sample_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.records.iter().map(|r| r.sample_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for r in &self.records {
            if !seen.insert((r.sample_id.clone(), r.tile_index)) {
                return Err(Error::Argument(format!(
                    "duplicate manifest key ({}, {})",
                    r.sample_id, r.tile_index
                )));
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "# tile_size={},min_tissue={},seed={}",
            self.tile_size, self.min_tissue, self.seed
        )?;
        writeln!(out, "sample_id,tile_index,row,col,tissue_fraction,path")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.sample_id,
                r.tile_index,
                r.row,
                r.col,
                r.tissue_fraction,
                r.path.display()
            )?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut manifest = TileManifest::new(DEFAULT_TILE_SIZE, DEFAULT_MIN_TISSUE, 0);
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if line.starts_with('#') {
                for part in line.trim_start_matches('#').trim().split(',') {
                    let mut kv = part.splitn(2, '=');
                    match (kv.next().map(str::trim), kv.next().map(str::trim)) {
                        (Some("tile_size"), Some(v)) => {
                            manifest.tile_size = v.parse().map_err(|_| Error::Parse {
                                line: i + 1,
                                msg: format!("bad tile_size `{v}`"),
                            })?
                        }
                        (Some("min_tissue"), Some(v)) => {
                            manifest.min_tissue = v.parse().map_err(|_| Error::Parse {
                                line: i + 1,
                                msg: format!("bad min_tissue `{v}`"),
                            })?
                        }
                        (Some("seed"), Some(v)) => {
                            manifest.seed = v.parse().map_err(|_| Error::Parse {
                                line: i + 1,
                                msg: format!("bad seed `{v}`"),
                            })?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if i <= 1 && line.starts_with("sample_id") {
                continue; // column header
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("manifest row has {} of 6 columns", fields.len()),
                });
            }
            let parse_err = |what: &str| Error::Parse {
                line: i + 1,
                msg: format!("bad {what} in manifest row"),
            };
            manifest.records.push(TileRecord {
                sample_id: fields[0].to_string(),
                tile_index: fields[1].parse().map_err(|_| parse_err("tile_index"))?,
                row: fields[2].parse().map_err(|_| parse_err("row"))?,
                col: fields[3].parse().map_err(|_| parse_err("col"))?,
                tissue_fraction: fields[4]
                    .parse()
                    .map_err(|_| parse_err("tissue_fraction"))?,
                path: PathBuf::from(fields[5]),
            });
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(BufReader::new(file))
    }
}
