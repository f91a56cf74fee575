use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::mil::config::AugmentConfig;
use crate::slide::RgbImage;

/// Concrete draws for one tile. Applying the same params twice gives the
/// same geometry; noise is drawn separately per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentParams {
    /// counterclockwise quarter turns, 0..=3
    pub quarter_turns: u8,
    pub hflip: bool,
    pub vflip: bool,
    /// degrees on the HSV circle
    pub hue_shift: f64,
    pub gamma: f64,
    pub noise_sigma: f64,
}

impl AugmentParams {
    pub fn identity() -> Self {
        AugmentParams {
            quarter_turns: 0,
            hflip: false,
            vflip: false,
            hue_shift: 0.0,
            gamma: 1.0,
            noise_sigma: 0.0,
        }
    }

    /// Draw order is fixed: rotation, h-flip, v-flip, hue, gamma, sigma.
    /// A disabled stage consumes no draws and keeps its identity value.
    pub fn draw(cfg: &AugmentConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut p = AugmentParams::identity();
        if !cfg.enabled {
            return p;
        }
        if cfg.rotate {
            p.quarter_turns = rng.random_range(0..4u8);
        }
        if cfg.flip {
            p.hflip = rng.random_range(0.0..1.0) < 0.5;
            p.vflip = rng.random_range(0.0..1.0) < 0.5;
        }
        if cfg.hue {
            p.hue_shift = rng.random_range(-cfg.hue_max_degrees..=cfg.hue_max_degrees);
        }
        if cfg.gamma {
            p.gamma = rng.random_range(cfg.gamma_min..=cfg.gamma_max);
        }
        if cfg.noise {
            p.noise_sigma = rng.random_range(0.0..=cfg.noise_sigma_max);
        }
        p
    }
}

/// Draw parameters and apply them; the standard training-time entry point.
pub fn augment_tile(img: &RgbImage, cfg: &AugmentConfig, rng: &mut ChaCha8Rng) -> RgbImage {
    let params = AugmentParams::draw(cfg, rng);
    apply_augment(img, &params, rng)
}

/// Rotation, flips, hue shift, gamma on the value channel, then Gaussian
/// noise, everything clamped back to 8-bit range.
pub fn apply_augment(img: &RgbImage, params: &AugmentParams, rng: &mut ChaCha8Rng) -> RgbImage {
    let mut out = img.clone();
    for _ in 0..params.quarter_turns % 4 {
        out = rotate90_ccw(&out);
    }
    if params.hflip {
        out = flip_horizontal(&out);
    }
    if params.vflip {
        out = flip_vertical(&out);
    }
    if params.hue_shift != 0.0 || params.gamma != 1.0 {
        shift_hue_and_gamma(&mut out, params.hue_shift, params.gamma);
    }
    if params.noise_sigma > 0.0 {
        let scale = (params.noise_sigma * 255.0) as f32;
        for byte in out.pixels_mut() {
            let n: f32 = rng.sample(StandardNormal);
            let v = *byte as f32 + n * scale;
            *byte = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// An h x w image rotates into a w x h image; (r, c) -> (w-1-c, r).
fn rotate90_ccw(img: &RgbImage) -> RgbImage {
    let (h, w) = (img.height(), img.width());
    let mut pixels = vec![0u8; w * h * 3];
    for r in 0..h {
        for c in 0..w {
            let src = img.pixel(r, c);
            let idx = ((w - 1 - c) * h + r) * 3;
            pixels[idx..idx + 3].copy_from_slice(&src);
        }
    }
    // output is w rows by h columns
    RgbImage::new(h, w, pixels).expect("sizes agree by construction")
}

fn flip_horizontal(img: &RgbImage) -> RgbImage {
    let (h, w) = (img.height(), img.width());
    let mut out = img.clone();
    for r in 0..h {
        let row = &mut out.pixels_mut()[r * w * 3..(r + 1) * w * 3];
        for c in 0..w / 2 {
            let (a, b) = (c * 3, (w - 1 - c) * 3);
            for k in 0..3 {
                row.swap(a + k, b + k);
            }
        }
    }
    out
}

fn flip_vertical(img: &RgbImage) -> RgbImage {
    let (h, w) = (img.height(), img.width());
    let mut out = img.clone();
    let stride = w * 3;
    for r in 0..h / 2 {
        let (top, rest) = out.pixels_mut().split_at_mut((r + 1) * stride);
        let bottom_start = (h - 1 - r) * stride - (r + 1) * stride;
        top[r * stride..].swap_with_slice(&mut rest[bottom_start..bottom_start + stride]);
    }
    out
}

/// One fused pass: RGB -> HSV, hue shift, gamma on the value channel (a
/// 256-entry table, since the value channel is 8-bit), HSV -> RGB.
fn shift_hue_and_gamma(img: &mut RgbImage, hue_shift: f64, gamma: f64) {
    let mut gamma_lut = [0.0f32; 256];
    for (i, g) in gamma_lut.iter_mut().enumerate() {
        *g = (i as f64 / 255.0).powf(gamma) as f32;
    }
    let shift = hue_shift as f32;
    for px in img.pixels_mut().chunks_exact_mut(3) {
        let (r, g, b) = (px[0] as f32, px[1] as f32, px[2] as f32);
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let delta = max - min;
        let h = if delta == 0.0 {
            0.0
        } else if max == r {
            // (g - b) / delta lies in (-1, 1); branch instead of fmod
            let t = (g - b) / delta;
            60.0 * if t < 0.0 { t + 6.0 } else { t }
        } else if max == g {
            60.0 * ((b - r) / delta + 2.0)
        } else {
            60.0 * ((r - g) / delta + 4.0)
        };
        let s = if max == 0.0 { 0.0 } else { delta / max };
        let v = gamma_lut[max as usize];

        // h + shift stays within (-360, 720); two fixups replace rem_euclid
        let mut h = h + shift;
        if h < 0.0 {
            h += 360.0;
        } else if h >= 360.0 {
            h -= 360.0;
        }
        let c = v * s;
        let hp = h * (1.0 / 60.0);
        let sector = (hp as u32).min(5);
        let frac = hp - sector as f32;
        let x = c * if sector.is_multiple_of(2) {
            frac
        } else {
            1.0 - frac
        };
        let (r1, g1, b1) = match sector {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = v - c;
        px[0] = ((r1 + m) * 255.0).round().clamp(0.0, 255.0) as u8;
        px[1] = ((g1 + m) * 255.0).round().clamp(0.0, 255.0) as u8;
        px[2] = ((b1 + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    }
}

/// h in [0, 360), s and v in [0, 1].
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> (f64, f64, f64) {
    let (r, g, b) = (r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { delta / max };
    (h, s, max)
}

pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> (u8, u8, u8) {
    let c = v * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let to8 = |u: f64| ((u + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    (to8(r1), to8(g1), to8(b1))
}
