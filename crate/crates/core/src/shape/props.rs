use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::shape::labels::Region;

/// Binary shape descriptors of one region. Perimeter-dependent metrics and
/// solidity are undefined for single-pixel regions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionProps {
    pub id: u32,
    pub area: u64,
    pub centroid: (f64, f64),
    pub major_axis: f64,
    pub minor_axis: f64,
    pub eccentricity: f64,
    pub extent: f64,
    pub equivalent_diameter: f64,
    pub perimeter: Option<f64>,
    pub circularity: Option<f64>,
    pub solidity: Option<f64>,
    /// min_row, min_col, max_row, max_col (inclusive)
    pub bbox: (u32, u32, u32, u32),
}

/// `sqrt(1 - b^2/a^2)` with b = minor axis, a = major axis.
pub fn eccentricity_from_axes(major: f64, minor: f64) -> f64 {
    if major == 0.0 {
        return 0.0;
    }
    (1.0 - (minor * minor) / (major * major)).max(0.0).sqrt()
}

pub fn shape_descriptors(region: &Region) -> Result<RegionProps> {
    if region.pixels.is_empty() {
        return Err(Error::Argument(format!(
            "region {} has no pixels",
            region.id
        )));
    }
    let n = region.pixels.len() as f64;
    let area = region.pixels.len() as u64;

    let (mut min_r, mut min_c, mut max_r, mut max_c) = {
        let (r0, c0) = region.pixels[0];
        (r0, c0, r0, c0)
    };
    let mut sum_r = 0.0;
    let mut sum_c = 0.0;
    for &(r, c) in &region.pixels {
        min_r = min_r.min(r);
        min_c = min_c.min(c);
        max_r = max_r.max(r);
        max_c = max_c.max(c);
        sum_r += r as f64;
        sum_c += c as f64;
    }
    let centroid = (sum_r / n, sum_c / n);

    // ellipse with equal normalized second central moments:
    // eigenvalues of the pixel-coordinate covariance, axes = 4 sqrt(lambda)
    let mut c_rr = 0.0;
    let mut c_cc = 0.0;
    let mut c_rc = 0.0;
    for &(r, c) in &region.pixels {
        let dr = r as f64 - centroid.0;
        let dc = c as f64 - centroid.1;
        c_rr += dr * dr;
        c_cc += dc * dc;
        c_rc += dr * dc;
    }
    c_rr /= n;
    c_cc /= n;
    c_rc /= n;
    let mean = 0.5 * (c_rr + c_cc);
    let dev = (0.25 * (c_rr - c_cc) * (c_rr - c_cc) + c_rc * c_rc).sqrt();
    let lambda_max = (mean + dev).max(0.0);
    let lambda_min = (mean - dev).max(0.0);
    let major_axis = 4.0 * lambda_max.sqrt();
    let minor_axis = 4.0 * lambda_min.sqrt();
    let eccentricity = eccentricity_from_axes(major_axis, minor_axis);

    let bbox_area = ((max_r - min_r + 1) as f64) * ((max_c - min_c + 1) as f64);
    let extent = n / bbox_area;
    let equivalent_diameter = (4.0 * n / PI).sqrt();

    let (perimeter, circularity, solidity) = if area < 2 {
        (None, None, None)
    } else {
        let p = chain_perimeter(region, (min_r, min_c), (max_r, max_c));
        let circ = if p > 0.0 {
            Some(4.0 * PI * n / (p * p))
        } else {
            None
        };
        let hull_area = corner_hull_area(&region.pixels);
        let solidity = if hull_area > 0.0 {
            Some(n / hull_area)
        } else {
            None
        };
        (Some(p), circ, solidity)
    };

    Ok(RegionProps {
        id: region.id,
        area,
        centroid,
        major_axis,
        minor_axis,
        eccentricity,
        extent,
        equivalent_diameter,
        perimeter,
        circularity,
        solidity,
        bbox: (min_r, min_c, max_r, max_c),
    })
}

// Moore neighborhood in clockwise order starting west, as (row, col) steps.
const CLOCKWISE: [(i64, i64); 8] = [
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
];

fn dir_index(dr: i64, dc: i64) -> usize {
    CLOCKWISE
        .iter()
        .position(|&d| d == (dr, dc))
        .expect("unit step")
}

/// Boundary chain length summed over the region's 8-connected components,
/// with unit weight for axis moves and sqrt(2) for diagonal moves.
fn chain_perimeter(region: &Region, min: (u32, u32), max: (u32, u32)) -> f64 {
    let h = (max.0 - min.0 + 1) as usize;
    let w = (max.1 - min.1 + 1) as usize;
    let mut grid = vec![false; h * w];
    for &(r, c) in &region.pixels {
        grid[(r - min.0) as usize * w + (c - min.1) as usize] = true;
    }
    let contains = |r: i64, c: i64| -> bool {
        r >= 0 && r < h as i64 && c >= 0 && c < w as i64 && grid[r as usize * w + c as usize]
    };

    let mut component = vec![0u32; h * w];
    let mut next = 1u32;
    let mut total = 0.0;
    for start in 0..h * w {
        if !grid[start] || component[start] != 0 {
            continue;
        }
        // flood-fill this component so later starts skip it
        let mut stack = vec![start];
        component[start] = next;
        while let Some(idx) = stack.pop() {
            let (r, c) = ((idx / w) as i64, (idx % w) as i64);
            for &(dr, dc) in &CLOCKWISE {
                let (nr, nc) = (r + dr, c + dc);
                if contains(nr, nc) {
                    let nidx = nr as usize * w + nc as usize;
                    if component[nidx] == 0 {
                        component[nidx] = next;
                        stack.push(nidx);
                    }
                }
            }
        }
        next += 1;
        total += trace_component(&contains, ((start / w) as i64, (start % w) as i64));
    }
    total
}

/// Moore-neighbor trace with Jacob's stopping criterion. The start pixel is
/// the first of its component in row-major order, so its west neighbor is
/// outside the region.
fn trace_component(contains: &dyn Fn(i64, i64) -> bool, start: (i64, i64)) -> f64 {
    let mut cur = start;
    let mut backtrack = (start.0, start.1 - 1);
    let mut first_move: Option<((i64, i64), usize)> = None;
    let mut perimeter = 0.0;
    loop {
        let bdir = dir_index(backtrack.0 - cur.0, backtrack.1 - cur.1);
        let mut found = None;
        for k in 1..=8 {
            let d = (bdir + k) % 8;
            let np = (cur.0 + CLOCKWISE[d].0, cur.1 + CLOCKWISE[d].1);
            if contains(np.0, np.1) {
                found = Some((np, d));
                break;
            }
        }
        let Some((np, d)) = found else {
            return 0.0; // isolated pixel
        };
        match first_move {
            Some((fp, fd)) if cur == start && np == fp && d == fd => break,
            None => first_move = Some((np, d)),
            _ => {}
        }
        perimeter += if CLOCKWISE[d].0 == 0 || CLOCKWISE[d].1 == 0 {
            1.0
        } else {
            SQRT_2
        };
        backtrack = (
            cur.0 + CLOCKWISE[(d + 7) % 8].0,
            cur.1 + CLOCKWISE[(d + 7) % 8].1,
        );
        cur = np;
    }
    perimeter
}

/// Convex hull over the four unit-square corners of every pixel, measured by
/// the shoelace formula. The hull contains each full pixel square, so the
/// resulting solidity never exceeds 1.
fn corner_hull_area(pixels: &[(u32, u32)]) -> f64 {
    let mut pts: Vec<(i64, i64)> = Vec::with_capacity(pixels.len() * 4);
    for &(r, c) in pixels {
        let (r, c) = (r as i64, c as i64);
        pts.push((r, c));
        pts.push((r, c + 1));
        pts.push((r + 1, c));
        pts.push((r + 1, c + 1));
    }
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    // Andrew's monotone chain
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| -> i64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    let mut twice_area = 0i64;
    for i in 0..hull.len() {
        let (r0, c0) = hull[i];
        let (r1, c1) = hull[(i + 1) % hull.len()];
        twice_area += r0 * c1 - r1 * c0;
    }
    (twice_area.abs() as f64) / 2.0
}
