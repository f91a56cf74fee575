use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use histomil::signature::TissueClass;
use histomil::slide::{tissue_mask, RgbImage, TileManifest, TileRecord};
use histomil::{Error, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub samples: usize,
    pub tiles_per_sample: usize,
    pub tile_size: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            samples: 200,
            tiles_per_sample: 20,
            tile_size: 64,
            seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct SynthSummary {
    pub manifest_path: PathBuf,
    pub expression_path: PathBuf,
    pub gene_set_path: PathBuf,
    pub truth_path: PathBuf,
    pub truth: Vec<(String, TissueClass)>,
    /// per sample: indices of the high-frequency signal tiles
    pub signal_tiles: Vec<(String, Vec<usize>)>,
}

const SIGNATURE_GENES: usize = 10;
const BACKGROUND_GENES: usize = 30;
pub const SYNTH_GENE_SET: &str = "SYNTH_HYPOXIA_SIGNATURE";

/// Smooth low-frequency cosine field; adjacent pixels differ by a few gray
/// levels, so co-occurrence mass stays near the diagonal.
fn background_tile(size: usize, rng: &mut ChaCha8Rng) -> RgbImage {
    let base = [
        rng.random_range(175..200) as f64,
        rng.random_range(115..140) as f64,
        rng.random_range(150..175) as f64,
    ];
    let mut waves = Vec::new();
    let mut total_amp = 0.0;
    for _ in 0..3 {
        let fx = rng.random_range(-3i32..=3) as f64;
        let fy = rng.random_range(1i32..=3) as f64;
        let amp = rng.random_range(0.4..1.0);
        let phase = rng.random_range(0.0..TAU);
        total_amp += amp;
        waves.push((fx, fy, amp, phase));
    }
    let mut img = RgbImage::filled(size, size, [0, 0, 0]);
    let gains = [1.0, 0.75, 0.9];
    for r in 0..size {
        for c in 0..size {
            let mut v = 0.0;
            for &(fx, fy, amp, phase) in &waves {
                v += amp * (TAU * (fx * c as f64 + fy * r as f64) / size as f64 + phase).cos();
            }
            let delta = 26.0 * v / total_amp;
            let px = [
                (base[0] + gains[0] * delta).round().clamp(0.0, 255.0) as u8,
                (base[1] + gains[1] * delta).round().clamp(0.0, 255.0) as u8,
                (base[2] + gains[2] * delta).round().clamp(0.0, 255.0) as u8,
            ];
            img.set_pixel(r, c, px);
        }
    }
    img
}

/// High-frequency, low-homogeneity texture: per-pixel noise over a fine
/// checker. Mean color matches the background tiles so only texture
/// separates the classes.
fn signal_tile(size: usize, rng: &mut ChaCha8Rng) -> RgbImage {
    let base = [
        rng.random_range(175..200) as f64,
        rng.random_range(115..140) as f64,
        rng.random_range(150..175) as f64,
    ];
    let mut img = RgbImage::filled(size, size, [0, 0, 0]);
    for r in 0..size {
        for c in 0..size {
            let checker = if (r + c) % 2 == 0 { 22.0 } else { -22.0 };
            let noise = rng.random_range(-46.0..46.0);
            let delta = checker + noise;
            let px = [
                (base[0] + delta).round().clamp(0.0, 255.0) as u8,
                (base[1] + 0.75 * delta).round().clamp(0.0, 255.0) as u8,
                (base[2] + 0.9 * delta).round().clamp(0.0, 255.0) as u8,
            ];
            img.set_pixel(r, c, px);
        }
    }
    img
}

/// Deterministic synthetic dataset: tile images and manifest, a matching
/// expression matrix and gene set (so the weak-labeling path can be run end
/// to end), and the generator's ground truth.
pub fn generate(spec: &SynthSpec, out_dir: &Path) -> Result<SynthSummary> {
    if spec.samples < 2 || !spec.samples.is_multiple_of(2) {
        return Err(Error::Argument(format!(
            "sample count {} must be even and at least 2",
            spec.samples
        )));
    }
    if spec.tiles_per_sample < 4 {
        return Err(Error::Argument(
            "at least 4 tiles per sample are required".into(),
        ));
    }
    let tiles_dir = out_dir.join("tiles");
    fs::create_dir_all(&tiles_dir).map_err(|e| Error::io(&tiles_dir, e))?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // balanced class assignment in shuffled order
    let mut classes: Vec<TissueClass> = (0..spec.samples)
        .map(|i| {
            if i < spec.samples / 2 {
                TissueClass::Hypoxic
            } else {
                TissueClass::Normoxic
            }
        })
        .collect();
    classes.shuffle(&mut rng);

    let mut manifest = TileManifest::new(spec.tile_size, 0.5, spec.seed);
    let mut truth = Vec::with_capacity(spec.samples);
    let mut signal_tiles = Vec::new();
    for (si, class) in classes.iter().enumerate() {
        let sample_id = format!("S{si:03}");
        let n_signal = match class {
            TissueClass::Hypoxic => rng.random_range(5..=9).min(spec.tiles_per_sample),
            TissueClass::Normoxic => 0,
        };
        let mut slots: Vec<usize> = (0..spec.tiles_per_sample).collect();
        slots.shuffle(&mut rng);
        let signal_set: Vec<usize> = slots[..n_signal].to_vec();

        for t in 0..spec.tiles_per_sample {
            let img = if signal_set.contains(&t) {
                signal_tile(spec.tile_size, &mut rng)
            } else {
                background_tile(spec.tile_size, &mut rng)
            };
            let path = tiles_dir.join(format!("{sample_id}_{t:04}.png"));
            img.save_png(&path)?;
            let mask = tissue_mask(&img);
            let fraction = mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64;
            manifest.records.push(TileRecord {
                sample_id: sample_id.clone(),
                tile_index: t as u32,
                row: (t * spec.tile_size) as u32,
                col: 0,
                tissue_fraction: fraction,
                path,
            });
        }
        truth.push((sample_id.clone(), *class));
        let mut sorted_signal = signal_set;
        sorted_signal.sort_unstable();
        signal_tiles.push((sample_id, sorted_signal));
    }

    let manifest_path = out_dir.join("manifest.csv");
    manifest.save(&manifest_path)?;

    // expression matrix: signature genes shifted up in hypoxic samples
    let expression_path = out_dir.join("expression.tsv");
    {
        let mut tsv = String::from("gene_id");
        for (sample_id, _) in &truth {
            tsv.push('\t');
            tsv.push_str(sample_id);
        }
        tsv.push('\n');
        for g in 0..SIGNATURE_GENES {
            let base = 2.0 + 0.2 * g as f64;
            tsv.push_str(&format!("SIG_GENE_{g:02}"));
            for (_, class) in &truth {
                let shift = match class {
                    TissueClass::Hypoxic => 6.0,
                    TissueClass::Normoxic => 0.0,
                };
                let value = base + shift + rng.random_range(-0.5..0.5);
                tsv.push_str(&format!("\t{value:.4}"));
            }
            tsv.push('\n');
        }
        for g in 0..BACKGROUND_GENES {
            tsv.push_str(&format!("BG_GENE_{g:02}"));
            for _ in &truth {
                tsv.push_str(&format!("\t{:.4}", rng.random_range(3.0..7.0)));
            }
            tsv.push('\n');
        }
        fs::write(&expression_path, tsv).map_err(|e| Error::io(&expression_path, e))?;
    }

    // gene set: the signature genes plus two ids absent from the matrix
    let gene_set_path = out_dir.join("signature.gmt");
    {
        let mut line = format!("{SYNTH_GENE_SET}\tsynthetic hypoxia-responsive gene set");
        for g in 0..SIGNATURE_GENES {
            line.push_str(&format!("\tSIG_GENE_{g:02}"));
        }
        line.push_str("\tABSENT_GENE_00\tABSENT_GENE_01\n");
        fs::write(&gene_set_path, line).map_err(|e| Error::io(&gene_set_path, e))?;
    }

    let truth_path = out_dir.join("truth.csv");
    {
        let mut csv = String::from("sample_id,class\n");
        for (sample_id, class) in &truth {
            csv.push_str(&format!("{sample_id},{}\n", class.as_str()));
        }
        fs::write(&truth_path, csv).map_err(|e| Error::io(&truth_path, e))?;
    }

    Ok(SynthSummary {
        manifest_path,
        expression_path,
        gene_set_path,
        truth_path,
        truth,
        signal_tiles,
    })
}
