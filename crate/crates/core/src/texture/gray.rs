use crate::error::{Error, Result};

/// 2-D grid of gray levels in `[0, 255]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayTile {
    height: usize,
    width: usize,
    levels: Vec<u8>,
}

impl GrayTile {
    pub fn new(height: usize, width: usize, levels: Vec<u8>) -> Result<Self> {
        if levels.len() != height * width {
            return Err(Error::Shape(format!(
                "gray tile {height}x{width} needs {} levels, got {}",
                height * width,
                levels.len()
            )));
        }
        Ok(GrayTile {
            height,
            width,
            levels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.levels[row * self.width + col]
    }
}

/// Rec. 709 luma conversion of an interleaved 8-bit RGB buffer.
pub fn to_gray(height: usize, width: usize, rgb: &[u8]) -> Result<GrayTile> {
    if rgb.len() != height * width * 3 {
        return Err(Error::Shape(format!(
            "rgb tile {height}x{width} needs {} bytes, got {}",
            height * width * 3,
            rgb.len()
        )));
    }
    let levels = rgb
        .chunks_exact(3)
        .map(|px| {
            let y = 0.2126 * px[0] as f64 + 0.7152 * px[1] as f64 + 0.0722 * px[2] as f64;
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayTile::new(height, width, levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        let g = to_gray(1, 2, &[0, 0, 0, 255, 255, 255]).unwrap();
        assert_eq!(g.levels(), &[0, 255]);
    }

    #[test]
    fn gray_input_is_identity() {
        for v in [0u8, 1, 17, 128, 200, 254, 255] {
            let g = to_gray(1, 1, &[v, v, v]).unwrap();
            assert_eq!(g.levels(), &[v]);
        }
    }

    #[test]
    fn matches_direct_formula() {
        let rgb = [10u8, 200, 40, 255, 0, 128, 3, 77, 250];
        let g = to_gray(1, 3, &rgb).unwrap();
        for (i, px) in rgb.chunks_exact(3).enumerate() {
            let direct =
                (0.2126 * px[0] as f64 + 0.7152 * px[1] as f64 + 0.0722 * px[2] as f64).round();
            assert_eq!(g.levels()[i] as f64, direct);
        }
    }
}
