use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Interleaved 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height * 3 {
            return Err(Error::Shape(format!(
                "rgb image {width}x{height} needs {} bytes, got {}",
                width * height * 3,
                pixels.len()
            )));
        }
        Ok(RgbImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&rgb);
        }
        RgbImage {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copy of the `size`-square window at the given origin.
    pub fn crop(&self, row: usize, col: usize, size: usize) -> Result<RgbImage> {
        if row + size > self.height || col + size > self.width {
            return Err(Error::Argument(format!(
                "crop {size} at ({row},{col}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut pixels = Vec::with_capacity(size * size * 3);
        for r in row..row + size {
            let start = (r * self.width + col) * 3;
            pixels.extend_from_slice(&self.pixels[start..start + size * 3]);
        }
        RgbImage::new(size, size, pixels)
    }

    /// Dispatch on extension: `.png` or `.ppm`.
    pub fn load(path: &Path) -> Result<RgbImage> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("png") => Self::load_png(path),
            Some("ppm") => Self::load_ppm(path),
            other => Err(Error::image(
                path,
                format!("unsupported image extension {other:?}"),
            )),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("png") => self.save_png(path),
            Some("ppm") => self.save_ppm(path),
            other => Err(Error::image(
                path,
                format!("unsupported image extension {other:?}"),
            )),
        }
    }

    pub fn load_png(path: &Path) -> Result<RgbImage> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let decoder = png::Decoder::new(BufReader::new(file));
        let mut reader = decoder
            .read_info()
            .map_err(|e| Error::image(path, e.to_string()))?;
        let size = reader
            .output_buffer_size()
            .ok_or_else(|| Error::image(path, "image too large"))?;
        let mut buf = vec![0u8; size];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| Error::image(path, e.to_string()))?;
        let (w, h) = (info.width as usize, info.height as usize);
        if info.bit_depth != png::BitDepth::Eight {
            return Err(Error::image(
                path,
                format!("expected 8-bit image, got {:?}", info.bit_depth),
            ));
        }
        let pixels = match info.color_type {
            png::ColorType::Rgb => buf[..w * h * 3].to_vec(),
            png::ColorType::Rgba => buf[..w * h * 4]
                .chunks_exact(4)
                .flat_map(|p| [p[0], p[1], p[2]])
                .collect(),
            png::ColorType::Grayscale => buf[..w * h].iter().flat_map(|&g| [g, g, g]).collect(),
            other => {
                return Err(Error::image(
                    path,
                    format!("unsupported color type {other:?}"),
                ))
            }
        };
        RgbImage::new(w, h, pixels)
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut enc =
            png::Encoder::new(BufWriter::new(file), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::image(path, e.to_string()))?;
        writer
            .write_image_data(&self.pixels)
            .map_err(|e| Error::image(path, e.to_string()))?;
        Ok(())
    }

    pub fn load_ppm(path: &Path) -> Result<RgbImage> {
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        parse_ppm(&bytes).map_err(|msg| Error::image(path, msg))
    }

    pub fn save_ppm(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        (|| -> std::io::Result<()> {
            write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
            out.write_all(&self.pixels)
        })()
        .map_err(|e| Error::io(path, e))
    }
}

/// Advance over whitespace/comments and return the next header token.
fn ppm_token(bytes: &[u8], pos: &mut usize) -> std::result::Result<String, String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err("truncated PPM header".into());
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

/// Binary P6 with maxval 255; `#` comments allowed in the header.
fn parse_ppm(bytes: &[u8]) -> std::result::Result<RgbImage, String> {
    let mut pos = 0usize;
    if ppm_token(bytes, &mut pos)? != "P6" {
        return Err("not a binary P6 PPM".into());
    }
    let width: usize = ppm_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| "bad width")?;
    let height: usize = ppm_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| "bad height")?;
    let maxval: usize = ppm_token(bytes, &mut pos)?
        .parse()
        .map_err(|_| "bad maxval")?;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    let data_start = pos + 1; // single whitespace after maxval
    let need = width * height * 3;
    if bytes.len() < data_start + need {
        return Err(format!(
            "PPM payload truncated: need {need} bytes, have {}",
            bytes.len().saturating_sub(data_start)
        ));
    }
    RgbImage::new(width, height, bytes[data_start..data_start + need].to_vec())
        .map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let dir = std::env::temp_dir().join("histomil_ppm_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("x.ppm");
        let mut img = RgbImage::filled(3, 2, [10, 20, 30]);
        img.set_pixel(1, 2, [200, 100, 50]);
        img.save(&path).unwrap();
        let back = RgbImage::load(&path).unwrap();
        assert_eq!(back, img);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn crop_extracts_the_window() {
        let mut img = RgbImage::filled(4, 4, [0, 0, 0]);
        img.set_pixel(2, 3, [9, 9, 9]);
        let c = img.crop(2, 2, 2).unwrap();
        assert_eq!(c.pixel(0, 1), [9, 9, 9]);
        assert!(img.crop(3, 3, 2).is_err());
    }

    #[test]
    fn missing_file_reports_path() {
        let err = RgbImage::load(Path::new("/nonexistent/foo.png")).unwrap_err();
        assert!(err.to_string().contains("foo.png"));
    }
}
