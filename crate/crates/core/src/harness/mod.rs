//! End-to-end commands: simulate, evaluate, benchmark and trigger demux.

mod bench;
mod eval;
mod plot;
mod simulate;

pub use bench::{cmd_bench, run_bench, BenchReport};
pub use eval::{cmd_eval, run_eval, EvalOutcome, EvalReport, WindowCounts};
pub use eval::{ConfigEcho, ErrorBounds, REPORT_SCHEMA};
pub use plot::{bearing_plot_svg, Series};
pub use simulate::{cmd_demux, cmd_simulate, DemuxSummary, SimSummary};

use std::f64::consts::TAU;
use std::time::Duration;

use serde::Serialize;

use crate::event::Timestamp;
use crate::io::{demux_triggers, TriggerRecord, TriggerSettings, TriggerSource};
use crate::sim::PlatformPose;

/// Pipeline stages in reporting order.
pub const STAGES: [&str; 6] = [
    "data_processing",
    "image_generation",
    "input_construction",
    "inference",
    "bearing_estimation",
    "other",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    /// Milliseconds.
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub samples: usize,
}

/// Per-window durations of each stage, indexed like [`STAGES`].
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct WindowTiming(pub [Duration; 6]);

impl WindowTiming {
    pub(crate) const DATA: usize = 0;
    pub(crate) const IMAGE: usize = 1;
    pub(crate) const INPUT: usize = 2;
    pub(crate) const INFERENCE: usize = 3;
    pub(crate) const BEARING: usize = 4;
    pub(crate) const OTHER: usize = 5;

    pub(crate) fn total(&self) -> Duration {
        self.0.iter().sum()
    }
}

/// Nearest-rank percentile of sorted data, `q` in (0, 1].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub(crate) fn summarize(samples: &[WindowTiming]) -> Vec<StageTiming> {
    STAGES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut ms: Vec<f64> = samples.iter().map(|w| w.0[i].as_secs_f64() * 1e3).collect();
            ms.sort_by(f64::total_cmp);
            let n = ms.len();
            StageTiming {
                stage: (*name).to_string(),
                mean: if n == 0 {
                    0.0
                } else {
                    ms.iter().sum::<f64>() / n as f64
                },
                p50: if n == 0 { 0.0 } else { percentile(&ms, 0.5) },
                p95: if n == 0 { 0.0 } else { percentile(&ms, 0.95) },
                samples: n,
            }
        })
        .collect()
}

/// Platform pose over time, re-anchored on rotation triggers.
#[derive(Debug, Clone)]
pub struct PoseTimeline {
    base: PlatformPose,
    rotation: Vec<Timestamp>,
    settings: TriggerSettings,
}

impl PoseTimeline {
    pub fn new(base: PlatformPose, mut rotation: Vec<Timestamp>, settings: TriggerSettings) -> Self {
        rotation.sort_unstable();
        Self {
            base,
            rotation,
            settings,
        }
    }

    /// Builds the timeline from a trigger log. Unlabeled logs are demultiplexed
    /// first; logs too short to demultiplex fall back to their labels.
    pub fn from_triggers(base: PlatformPose, records: &[TriggerRecord], settings: TriggerSettings) -> Self {
        let merged: Vec<Timestamp> = records.iter().map(|r| r.t).collect();
        let rotation = base
            .rotation_period_us()
            .and_then(|period| {
                demux_triggers(
                    &merged,
                    settings.pps_period_us,
                    period,
                    settings.jitter_tolerance_us,
                )
                .ok()
            })
            .map(|d| d.rotation)
            .unwrap_or_else(|| {
                records
                    .iter()
                    .filter(|r| r.source == TriggerSource::Rotation)
                    .map(|r| r.t)
                    .collect()
            });
        Self::new(base, rotation, settings)
    }

    pub fn rotation_triggers(&self) -> &[Timestamp] {
        &self.rotation
    }

    pub fn pose_at(&self, t: Timestamp) -> PlatformPose {
        if !self.settings.refresh_t0 || self.rotation.is_empty() {
            return self.base;
        }
        let i = self.rotation.partition_point(|&r| r <= t);
        let k = i.saturating_sub(1);
        let mut pose = PlatformPose {
            t0: self.rotation[k],
            ..self.base
        };
        if self.settings.reestimate_omega && k >= 1 {
            let interval = (self.rotation[k] - self.rotation[k - 1]) as f64 * 1e-6;
            if interval > 0.0 {
                pose.omega = TAU / interval * self.base.omega.signum();
            }
        }
        pose
    }
}
