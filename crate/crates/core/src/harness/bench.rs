use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use super::eval::prepare_window;
use super::{summarize, StageTiming, WindowTiming};
use crate::detection::{classify_tracks, extract_components};
use crate::error::{Error, Result};
use crate::event::EventStream;
use crate::geometry::pixel_to_bearing;
use crate::io::{load_events, RunConfig};

/// Windows run before timing starts.
pub const WARMUP_WINDOWS: usize = 5;
/// Fewest timed windows a benchmark reports.
pub const MIN_TIMED_WINDOWS: usize = 100;
/// Streams with fewer full windows are rejected.
pub const MIN_AVAILABLE_WINDOWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub window_us: u64,
    pub slices: usize,
    pub timed_windows: usize,
    pub stages: Vec<StageTiming>,
    /// Sum of stage means, ms per window.
    pub subtotal: f64,
    /// Serial throughput implied by `subtotal`.
    pub windows_per_second: f64,
    pub mean_events_per_window: f64,
    /// Events accumulated per second of `image_generation` time.
    pub representation_events_per_second: f64,
}

/// Times the reference pipeline stage by stage, serially, over at least
/// [`MIN_TIMED_WINDOWS`] windows (cycling through the stream if it is short).
pub fn run_bench(cfg: &RunConfig, stream: &EventStream, windows: usize) -> Result<BenchReport> {
    cfg.validate()?;
    let dt = cfg.msr.window_us;
    let starts: Vec<u64> = match (stream.first_time(), stream.last_time()) {
        (Some(first), Some(last)) => (0..)
            .map(|k| first + k * dt)
            .take_while(|s| s + dt <= last + 1)
            .collect(),
        _ => Vec::new(),
    };
    if starts.len() < MIN_AVAILABLE_WINDOWS {
        return Err(Error::InsufficientData(format!(
            "{} full windows of {dt} µs available, need at least {MIN_AVAILABLE_WINDOWS}",
            starts.len()
        )));
    }
    if cfg.msr.slices < 3 {
        return Err(Error::Config("reference detector needs at least 3 slices".into()));
    }
    let timed = windows.max(MIN_TIMED_WINDOWS);
    let params = &cfg.detector.reference;
    let filter = params.filter();
    let mut samples = Vec::with_capacity(timed);
    let mut events = 0u64;
    for k in 0..WARMUP_WINDOWS + timed {
        let start = starts[k % starts.len()];
        let mut timing = WindowTiming::default();
        let wall = Instant::now();
        let msr = prepare_window(stream, start, &cfg.msr, &mut timing)?;
        let t = Instant::now();
        let comps = extract_components(&msr, &filter);
        timing.0[WindowTiming::INPUT] = t.elapsed();
        let t = Instant::now();
        let dets = classify_tracks(&comps, &msr.config, &cfg.platform, &cfg.sensor, params);
        timing.0[WindowTiming::INFERENCE] = t.elapsed();
        let t = Instant::now();
        let mid = msr.config.midpoint();
        for d in &dets {
            std::hint::black_box(pixel_to_bearing(
                d.bbox.cx,
                d.bbox.cy,
                mid,
                &cfg.sensor,
                &cfg.platform,
            )?);
        }
        timing.0[WindowTiming::BEARING] = t.elapsed();
        timing.0[WindowTiming::OTHER] = wall.elapsed().saturating_sub(timing.total());
        if k >= WARMUP_WINDOWS {
            events += msr.total_events();
            samples.push(timing);
        }
    }
    let stages = summarize(&samples);
    let subtotal: f64 = stages.iter().map(|s| s.mean).sum();
    let image_secs: f64 = samples
        .iter()
        .map(|w| w.0[WindowTiming::IMAGE].as_secs_f64())
        .sum();
    Ok(BenchReport {
        window_us: dt,
        slices: cfg.msr.slices,
        timed_windows: samples.len(),
        stages,
        subtotal,
        windows_per_second: if subtotal > 0.0 {
            1e3 / subtotal
        } else {
            f64::INFINITY
        },
        mean_events_per_window: events as f64 / samples.len() as f64,
        representation_events_per_second: if image_secs > 0.0 {
            events as f64 / image_secs
        } else {
            f64::INFINITY
        },
    })
}

/// Loads events, benchmarks, and writes `bench.json` to `cfg.output.dir`.
pub fn cmd_bench(cfg: &RunConfig, events_path: &Path, windows: usize) -> Result<BenchReport> {
    let stream = load_events(events_path, &cfg.sensor)?;
    let report = run_bench(cfg, &stream, windows)?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    let json = serde_json::to_string_pretty(&report).expect("bench report serializes");
    std::fs::write(cfg.output.dir.join("bench.json"), json + "\n")?;
    Ok(report)
}
