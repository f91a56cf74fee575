use std::path::PathBuf;

use clap::Args;
use histomil::mil::{grad_cam, tile_to_tensor};
use histomil::slide::RgbImage;
use histomil::{Error, Result};

use crate::commands::load_model;
use crate::config::{echo_run, PipelineConfig};

/// Render the class activation map of one tile as a heat overlay.
#[derive(Debug, Args)]
pub struct CamArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub tile: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// overlay opacity of the heat map, in [0,1]
    #[arg(long, default_value_t = 0.45)]
    pub alpha: f64,
}

/// Blue (cold) to red (hot) ramp through green.
fn heat_color(t: f64) -> [f64; 3] {
    let t = t.clamp(0.0, 1.0);
    if t < 0.5 {
        let u = t * 2.0;
        [0.0, 255.0 * u, 255.0 * (1.0 - u)]
    } else {
        let u = (t - 0.5) * 2.0;
        [255.0 * u, 255.0 * (1.0 - u), 0.0]
    }
}

pub fn run(args: &CamArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&args.alpha) {
        return Err(Error::Argument(format!(
            "alpha {} not in [0,1]",
            args.alpha
        )));
    }
    let model = load_model(&args.checkpoint)?;
    let img = RgbImage::load(&args.tile)?;
    let cam = grad_cam(&model, &tile_to_tensor::<f32>(&img))?;

    let mut overlay = img.clone();
    for (i, px) in overlay.pixels_mut().chunks_exact_mut(3).enumerate() {
        let heat = heat_color(cam.heat_map[i] as f64);
        for ch in 0..3 {
            let blended = (1.0 - args.alpha) * px[ch] as f64 + args.alpha * heat[ch];
            px[ch] = blended.round().clamp(0.0, 255.0) as u8;
        }
    }

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let stem = args
        .tile
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let overlay_path = args.out.join(format!("{stem}_cam.png"));
    overlay.save_png(&overlay_path)?;

    // the raw map as grayscale, for downstream quantitative use
    let mut gray = RgbImage::filled(cam.width, cam.height, [0, 0, 0]);
    for (i, px) in gray.pixels_mut().chunks_exact_mut(3).enumerate() {
        let v = (cam.heat_map[i] as f64 * 255.0).round().clamp(0.0, 255.0) as u8;
        px.copy_from_slice(&[v, v, v]);
    }
    let map_path = args.out.join(format!("{stem}_cam_map.png"));
    gray.save_png(&map_path)?;

    echo_run(
        &args.out,
        "cam",
        &[&args.checkpoint, &args.tile],
        &PipelineConfig::load(None)?,
    )?;
    println!(
        "wrote {} and {}",
        overlay_path.display(),
        map_path.display()
    );
    Ok(())
}
