use crate::error::{Error, Result};
use crate::texture::gray::GrayTile;

pub const GRAY_LEVELS: usize = 256;

/// Co-occurrence offset directions at distance 1, as (row, col) steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Angle {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Angle {
    pub const ALL: [Angle; 4] = [Angle::Deg0, Angle::Deg45, Angle::Deg90, Angle::Deg135];

    pub fn offset(self) -> (isize, isize) {
        match self {
            Angle::Deg0 => (0, 1),
            Angle::Deg45 => (-1, 1),
            Angle::Deg90 => (-1, 0),
            Angle::Deg135 => (-1, -1),
        }
    }
}

/// Normalized ordered-pair co-occurrence distribution for one angle.
#[derive(Debug, Clone)]
pub struct GlcmMatrix {
    pub angle: Angle,
    p: Vec<f64>,
}

impl GlcmMatrix {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.p[i * GRAY_LEVELS + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.p
    }
}

/// Texture features, each averaged over the four angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlcmFeatures {
    pub homogeneity: f64,
    pub energy: f64,
    pub correlation: f64,
    pub contrast: f64,
    pub dissimilarity: f64,
    pub asm: f64,
}

impl GlcmFeatures {
    pub const NAMES: [&'static str; 6] = [
        "homogeneity",
        "energy",
        "correlation",
        "contrast",
        "dissimilarity",
        "asm",
    ];

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.homogeneity,
            self.energy,
            self.correlation,
            self.contrast,
            self.dissimilarity,
            self.asm,
        ]
    }
}

/// Ordered-pair counting at distance 1 for one angle, normalized to sum 1.
pub fn glcm(tile: &GrayTile, angle: Angle) -> Result<GlcmMatrix> {
    let (dr, dc) = angle.offset();
    let h = tile.height() as isize;
    let w = tile.width() as isize;
    let mut counts = vec![0u64; GRAY_LEVELS * GRAY_LEVELS];
    let mut total = 0u64;
    for r in 0..h {
        let nr = r + dr;
        if nr < 0 || nr >= h {
            continue;
        }
        for c in 0..w {
            let nc = c + dc;
            if nc < 0 || nc >= w {
                continue;
            }
            let i = tile.at(r as usize, c as usize) as usize;
            let j = tile.at(nr as usize, nc as usize) as usize;
            counts[i * GRAY_LEVELS + j] += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(Error::Degenerate(format!(
            "tile {}x{} has no pixel pair at angle {angle:?}",
            tile.height(),
            tile.width()
        )));
    }
    let p = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(GlcmMatrix { angle, p })
}

fn features_of(m: &GlcmMatrix) -> GlcmFeatures {
    let mut homogeneity = 0.0;
    let mut asm = 0.0;
    let mut contrast = 0.0;
    let mut dissimilarity = 0.0;
    let mut mu_i = 0.0;
    let mut mu_j = 0.0;
    for i in 0..GRAY_LEVELS {
        for j in 0..GRAY_LEVELS {
            let p = m.at(i, j);
            if p == 0.0 {
                continue;
            }
            let d = i as f64 - j as f64;
            homogeneity += p / (1.0 + d * d);
            asm += p * p;
            contrast += p * d * d;
            dissimilarity += p * d.abs();
            mu_i += i as f64 * p;
            mu_j += j as f64 * p;
        }
    }
    let mut var_i = 0.0;
    let mut var_j = 0.0;
    let mut cov = 0.0;
    for i in 0..GRAY_LEVELS {
        for j in 0..GRAY_LEVELS {
            let p = m.at(i, j);
            if p == 0.0 {
                continue;
            }
            let di = i as f64 - mu_i;
            let dj = j as f64 - mu_j;
            var_i += p * di * di;
            var_j += p * dj * dj;
            cov += p * di * dj;
        }
    }
    let denom = (var_i * var_j).sqrt();
    // zero-variance marginal: one gray level dominates, correlation -> 1
    let correlation = if denom == 0.0 { 1.0 } else { cov / denom };
    GlcmFeatures {
        homogeneity,
        energy: asm.sqrt(),
        correlation,
        contrast,
        dissimilarity,
        asm,
    }
}

/// Per-angle features averaged over the four angles.
pub fn glcm_features(tile: &GrayTile) -> Result<GlcmFeatures> {
    let mut acc = [0.0f64; 6];
    for angle in Angle::ALL {
        let m = glcm(tile, angle)?;
        let f = features_of(&m);
        for (a, v) in acc.iter_mut().zip(f.as_array()) {
            *a += v;
        }
    }
    for a in &mut acc {
        *a *= 0.25;
    }
    Ok(GlcmFeatures {
        homogeneity: acc[0],
        energy: acc[1],
        correlation: acc[2],
        contrast: acc[3],
        dissimilarity: acc[4],
        asm: acc[5],
    })
}

/// Features of a single angle; exposed for tests and diagnostics.
pub fn features_of_matrix(m: &GlcmMatrix) -> GlcmFeatures {
    features_of(m)
}
