use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::Path;

use crate::error::{Error, Result};

/// 2-D grid of instance ids; 0 is background. Ids are authoritative: the
/// pixels of one id form one region whether or not they touch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    height: usize,
    width: usize,
    ids: Vec<u32>,
}

/// One instance's pixel set, in row-major order.
#[derive(Debug, Clone)]
pub struct Region {
    pub id: u32,
    pub pixels: Vec<(u32, u32)>,
}

impl LabelMask {
    pub fn new(height: usize, width: usize, ids: Vec<u32>) -> Result<Self> {
        if ids.len() != height * width {
            return Err(Error::Shape(format!(
                "label mask {height}x{width} needs {} ids, got {}",
                height * width,
                ids.len()
            )));
        }
        Ok(LabelMask { height, width, ids })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn at(&self, row: usize, col: usize) -> u32 {
        self.ids[row * self.width + col]
    }

    /// Group pixels by positive id, ascending.
    pub fn regions(&self) -> Vec<Region> {
        let mut by_id: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
        for r in 0..self.height {
            for c in 0..self.width {
                let id = self.at(r, c);
                if id > 0 {
                    by_id.entry(id).or_default().push((r as u32, c as u32));
                }
            }
        }
        by_id
            .into_iter()
            .map(|(id, pixels)| Region { id, pixels })
            .collect()
    }

    /// 16-bit grayscale PNG of instance ids.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        if let Some(&bad) = self.ids.iter().find(|&&id| id > u16::MAX as u32) {
            return Err(Error::Argument(format!(
                "instance id {bad} exceeds the 16-bit mask format"
            )));
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut enc =
            png::Encoder::new(BufWriter::new(file), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::image(path, e.to_string()))?;
        let mut bytes = Vec::with_capacity(self.ids.len() * 2);
        for &id in &self.ids {
            bytes.extend_from_slice(&(id as u16).to_be_bytes());
        }
        writer
            .write_image_data(&bytes)
            .map_err(|e| Error::image(path, e.to_string()))?;
        Ok(())
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let decoder = png::Decoder::new(BufReader::new(file));
        let mut reader = decoder
            .read_info()
            .map_err(|e| Error::image(path, e.to_string()))?;
        let mut buf = vec![
            0u8;
            reader
                .output_buffer_size()
                .ok_or_else(|| Error::image(path, "image too large"))?
        ];
        let info = reader
            .next_frame(&mut buf)
            .map_err(|e| Error::image(path, e.to_string()))?;
        if info.color_type != png::ColorType::Grayscale {
            return Err(Error::image(
                path,
                format!("expected grayscale mask, got {:?}", info.color_type),
            ));
        }
        let (w, h) = (info.width as usize, info.height as usize);
        let ids = match info.bit_depth {
            png::BitDepth::Sixteen => buf[..w * h * 2]
                .chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]) as u32)
                .collect(),
            png::BitDepth::Eight => buf[..w * h].iter().map(|&b| b as u32).collect(),
            d => {
                return Err(Error::image(
                    path,
                    format!("unsupported mask bit depth {d:?}"),
                ))
            }
        };
        LabelMask::new(h, w, ids)
    }
}

/// 8-connected labeling of a binary mask. Components are numbered from 1
/// in row-major discovery order.
pub fn label_binary(height: usize, width: usize, foreground: &[bool]) -> Result<LabelMask> {
    if foreground.len() != height * width {
        return Err(Error::Shape(format!(
            "binary mask {height}x{width} needs {} entries, got {}",
            height * width,
            foreground.len()
        )));
    }
    let mut ids = vec![0u32; height * width];
    let mut next = 1u32;
    let mut queue = Vec::new();
    for start in 0..height * width {
        if !foreground[start] || ids[start] != 0 {
            continue;
        }
        ids[start] = next;
        queue.push(start);
        while let Some(idx) = queue.pop() {
            let (r, c) = (idx / width, idx % width);
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    if dr == 0 && dc == 0 {
                        continue;
                    }
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nr >= height as i64 || nc < 0 || nc >= width as i64 {
                        continue;
                    }
                    let nidx = nr as usize * width + nc as usize;
                    if foreground[nidx] && ids[nidx] == 0 {
                        ids[nidx] = next;
                        queue.push(nidx);
                    }
                }
            }
        }
        next += 1;
    }
    LabelMask::new(height, width, ids)
}

/// Optional sidecar mapping `instance_id,cell_type`, one pair per line,
/// with a header line.
pub fn parse_cell_types(reader: impl Read) -> Result<BTreeMap<u32, String>> {
    let mut content = String::new();
    let mut reader = reader;
    reader
        .read_to_string(&mut content)
        .map_err(|e| Error::Parse {
            line: 0,
            msg: format!("cell type table not readable: {e}"),
        })?;
    let mut map = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue; // header
        }
        let mut parts = line.splitn(2, ',');
        let id = parts
            .next()
            .and_then(|s| s.trim().parse::<u32>().ok())
            .ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("bad instance id in `{line}`"),
            })?;
        let ty = parts.next().ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: "missing cell type column".into(),
        })?;
        map.insert(id, ty.trim().to_string());
    }
    Ok(map)
}
