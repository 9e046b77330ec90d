//! Per-slice blob extraction: threshold |S_i| and label 8-connected regions.

use crate::representation::Msr;

/// One connected region of active cells in a single slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub slice: usize,
    pub pixels: u32,
    /// Σ |S_i| over the region.
    pub magnitude: u32,
    pub cx: f64,
    pub cy: f64,
    pub x0: u16,
    pub y0: u16,
    pub x1: u16,
    pub y1: u16,
}

impl Component {
    /// Mean |S_i| per active pixel.
    pub fn density(&self) -> f64 {
        f64::from(self.magnitude) / f64::from(self.pixels)
    }

    fn touches_border(&self, width: u16, height: u16, margin: u16) -> bool {
        self.x0 < margin
            || self.y0 < margin
            || u32::from(self.x1) + u32::from(margin) >= u32::from(width)
            || u32::from(self.y1) + u32::from(margin) >= u32::from(height)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ComponentFilter {
    pub threshold: i32,
    pub min_area: u32,
    pub max_area: u32,
    /// Regions whose bounding box comes within this many pixels of the edge are dropped.
    pub border_margin: u16,
    /// Active pixels separated by at most this many inactive ones belong to
    /// the same region (0 = plain 8-connectivity).
    pub merge_gap: u16,
}

struct Accum {
    pixels: u32,
    magnitude: u32,
    sx: u64,
    sy: u64,
    x0: u16,
    y0: u16,
    x1: u16,
    y1: u16,
}

/// Labels one slice of per-pixel magnitudes. Pixels within Chebyshev
/// distance `reach` are connected; `visited` is scratch space of
/// `width * height` entries.
fn label_slice(
    cells: &[u32],
    width: usize,
    height: usize,
    threshold: u32,
    reach: usize,
    visited: &mut [bool],
    stack: &mut Vec<usize>,
) -> Vec<Accum> {
    visited.fill(false);
    let mut out = Vec::new();
    for start in 0..cells.len() {
        if visited[start] || cells[start] < threshold {
            continue;
        }
        visited[start] = true;
        stack.push(start);
        let (sx0, sy0) = ((start % width) as u16, (start / width) as u16);
        let mut acc = Accum {
            pixels: 0,
            magnitude: 0,
            sx: 0,
            sy: 0,
            x0: sx0,
            y0: sy0,
            x1: sx0,
            y1: sy0,
        };
        while let Some(i) = stack.pop() {
            let (x, y) = (i % width, i / width);
            acc.pixels += 1;
            acc.magnitude += cells[i];
            acc.sx += x as u64;
            acc.sy += y as u64;
            acc.x0 = acc.x0.min(x as u16);
            acc.x1 = acc.x1.max(x as u16);
            acc.y0 = acc.y0.min(y as u16);
            acc.y1 = acc.y1.max(y as u16);
            let ylo = y.saturating_sub(reach);
            let yhi = (y + reach).min(height - 1);
            let xlo = x.saturating_sub(reach);
            let xhi = (x + reach).min(width - 1);
            for ny in ylo..=yhi {
                for nx in xlo..=xhi {
                    let j = ny * width + nx;
                    if !visited[j] && cells[j] >= threshold {
                        visited[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(acc);
    }
    out
}

/// Components of every slice, in slice order then scan order.
pub fn extract_components(msr: &Msr, filter: &ComponentFilter) -> Vec<Vec<Component>> {
    let (w, h) = (usize::from(msr.width), usize::from(msr.height));
    let mut visited = vec![false; w * h];
    let mut stack = Vec::new();
    let mut cells = vec![0u32; w * h];
    let threshold = filter.threshold.max(1).unsigned_abs();
    let reach = usize::from(filter.merge_gap) + 1;
    (0..msr.num_slices())
        .map(|s| {
            for (c, v) in cells.iter_mut().zip(msr.slice(s)) {
                *c = v.unsigned_abs();
            }
            let regions = label_slice(&cells, w, h, threshold, reach, &mut visited, &mut stack);
            let mut comps: Vec<Component> = regions
                .into_iter()
                .filter(|a| a.pixels >= filter.min_area && a.pixels <= filter.max_area)
                .map(|a| Component {
                    slice: s,
                    pixels: a.pixels,
                    magnitude: a.magnitude,
                    cx: a.sx as f64 / f64::from(a.pixels),
                    cy: a.sy as f64 / f64::from(a.pixels),
                    x0: a.x0,
                    y0: a.y0,
                    x1: a.x1,
                    y1: a.y1,
                })
                .filter(|c| !c.touches_border(msr.width, msr.height, filter.border_margin))
                .collect();
            comps.sort_by_key(|c| (c.y0, c.x0, c.y1, c.x1));
            comps
        })
        .collect()
}
