//! Multi-slice event representation and the time-surface baseline.
//!
//! A window `[T, T + ΔT)` is split into `N` equal half-open sub-intervals;
//! slice `i` holds, per pixel, the signed sum of the polarities of events
//! that fall in sub-interval `i`. Unlike a time surface, nothing is
//! overwritten: every event in the window contributes to exactly one cell.

use std::io::Write;

use crate::error::{Error, Result};
use crate::event::{EventStream, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MsrConfig {
    /// Window start T, µs.
    pub start: Timestamp,
    /// Window length ΔT, µs. Must be a multiple of `slices`.
    pub window_us: u64,
    pub slices: usize,
}

impl MsrConfig {
    pub fn new(start: Timestamp, window_us: u64, slices: usize) -> Result<Self> {
        let cfg = Self {
            start,
            window_us,
            slices,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slices == 0 {
            return Err(Error::Config("slice count must be >= 1".into()));
        }
        if self.window_us == 0 {
            return Err(Error::Config("window length must be > 0".into()));
        }
        if !self.window_us.is_multiple_of(self.slices as u64) {
            return Err(Error::Config(format!(
                "window length {} µs is not divisible into {} slices",
                self.window_us, self.slices
            )));
        }
        Ok(())
    }

    pub fn slice_us(&self) -> u64 {
        self.window_us / self.slices as u64
    }

    pub fn end(&self) -> Timestamp {
        self.start + self.window_us
    }

    pub fn midpoint(&self) -> Timestamp {
        self.start + self.window_us / 2
    }

    /// Midpoint of slice `i` (0-based), µs; may be fractional.
    pub fn slice_midpoint(&self, i: usize) -> f64 {
        self.start as f64 + (i as f64 + 0.5) * self.slice_us() as f64
    }
}

/// `N` dense signed slices plus a parallel unsigned event-count grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Msr {
    pub config: MsrConfig,
    pub width: u16,
    pub height: u16,
    slices: Vec<i32>,
    counts: Vec<u32>,
}

impl Msr {
    fn plane(&self) -> usize {
        usize::from(self.width) * usize::from(self.height)
    }

    /// Row-major signed cells of slice `i` (0-based).
    pub fn slice(&self, i: usize) -> &[i32] {
        let n = self.plane();
        &self.slices[i * n..(i + 1) * n]
    }

    /// Unsigned event counts of slice `i`.
    pub fn counts(&self, i: usize) -> &[u32] {
        let n = self.plane();
        &self.counts[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, x: u16, y: u16) -> i32 {
        self.slice(i)[usize::from(y) * usize::from(self.width) + usize::from(x)]
    }

    pub fn num_slices(&self) -> usize {
        self.config.slices
    }

    /// Element-wise sum over all slices.
    pub fn collapsed(&self) -> Vec<i32> {
        let n = self.plane();
        let mut out = vec![0i32; n];
        for chunk in self.slices.chunks_exact(n) {
            for (o, v) in out.iter_mut().zip(chunk) {
                *o += v;
            }
        }
        out
    }

    pub fn total_events(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Accumulates the events of `[cfg.start, cfg.end())` into `cfg.slices` slices.
pub fn build_msr(stream: &EventStream, cfg: &MsrConfig) -> Result<Msr> {
    cfg.validate()?;
    let (w, h) = (usize::from(stream.width), usize::from(stream.height));
    let plane = w * h;
    let mut slices = vec![0i32; cfg.slices * plane];
    let mut counts = vec![0u32; cfg.slices * plane];
    let slice_us = cfg.slice_us();
    for e in stream.range(cfg.start, cfg.end()) {
        let i = ((e.t - cfg.start) / slice_us) as usize;
        let idx = i * plane + usize::from(e.y) * w + usize::from(e.x);
        slices[idx] += i32::from(e.p.sign());
        counts[idx] += 1;
    }
    Ok(Msr {
        config: *cfg,
        width: stream.width,
        height: stream.height,
        slices,
        counts,
    })
}

/// Latest event per pixel, decayed exponentially toward the query time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSurface {
    pub width: u16,
    pub height: u16,
    pub query_time: Timestamp,
    pub tau_us: f64,
    last_t: Vec<Timestamp>,
    /// 0 where the pixel never fired.
    last_p: Vec<i8>,
}

impl TimeSurface {
    pub fn value(&self, x: u16, y: u16) -> f64 {
        let i = usize::from(y) * usize::from(self.width) + usize::from(x);
        self.value_at(i)
    }

    fn value_at(&self, i: usize) -> f64 {
        match self.last_p[i] {
            0 => 0.0,
            p => {
                let age = (self.query_time - self.last_t[i]) as f64;
                (-age / self.tau_us).exp() * f64::from(p)
            }
        }
    }

    /// Dense row-major grid of decayed values.
    pub fn to_grid(&self) -> Vec<f64> {
        (0..self.last_p.len()).map(|i| self.value_at(i)).collect()
    }
}

/// Builds a time surface from events with `t <= query_time`; later events are ignored.
pub fn build_time_surface(stream: &EventStream, query_time: Timestamp, tau_us: f64) -> Result<TimeSurface> {
    if !(tau_us > 0.0 && tau_us.is_finite()) {
        return Err(Error::Config("time-surface decay constant must be > 0".into()));
    }
    let w = usize::from(stream.width);
    let plane = w * usize::from(stream.height);
    let mut last_t = vec![0; plane];
    let mut last_p = vec![0i8; plane];
    for e in stream.events.iter().take_while(|e| e.t <= query_time) {
        let i = usize::from(e.y) * w + usize::from(e.x);
        last_t[i] = e.t;
        last_p[i] = e.p.sign();
    }
    Ok(TimeSurface {
        width: stream.width,
        height: stream.height,
        query_time,
        tau_us,
        last_t,
        last_p,
    })
}

/// 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: u16,
    pub height: u16,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    /// Binary PGM (P5).
    pub fn write_pgm<W: Write>(&self, mut dst: W) -> Result<()> {
        write!(dst, "P5\n{} {}\n255\n", self.width, self.height)?;
        dst.write_all(&self.pixels)?;
        Ok(())
    }
}

/// Maps signed counts to gray levels: 0 → 128, +clip → 255, -clip → 1.
pub fn slice_to_image(cells: &[i32], width: u16, height: u16, clip: i32) -> Result<GrayImage> {
    if clip < 1 {
        return Err(Error::InvalidArgument("clip must be >= 1".into()));
    }
    if cells.len() != usize::from(width) * usize::from(height) {
        return Err(Error::Shape(format!(
            "{} cells for a {width}x{height} image",
            cells.len()
        )));
    }
    let scale = 127.0 / f64::from(clip);
    let pixels = cells
        .iter()
        .map(|&c| (128.0 + (f64::from(c.clamp(-clip, clip)) * scale).round()) as u8)
        .collect();
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}
