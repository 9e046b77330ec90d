//! JSON run configuration. Every field has a default matching the reference
//! hardware (640x480 sensor, 0.95 rad/s spin, 35° tilt).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detection::ReferenceParams;
use crate::error::{Error, Result};
use crate::event::SensorConfig;
use crate::sim::{PlatformPose, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsrSettings {
    pub window_us: u64,
    pub slices: usize,
}

impl Default for MsrSettings {
    fn default() -> Self {
        // 33_333 µs rounded up to a multiple of 5 slices
        Self {
            window_us: 33_335,
            slices: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Oracle,
    #[default]
    Reference,
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(DetectorKind::Oracle),
            "reference" => Ok(DetectorKind::Reference),
            other => Err(Error::Config(format!(
                "unknown detector {other:?} (expected oracle|reference)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSettings {
    pub kind: DetectorKind,
    pub reference: ReferenceParams,
    /// Snap oracle centroids to the pixel grid, as a pixel-based detector would.
    pub oracle_quantize: bool,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self {
            kind: DetectorKind::default(),
            reference: ReferenceParams::default(),
            oracle_quantize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    pub duration_us: u64,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            duration_us: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriggerSettings {
    pub pps_period_us: f64,
    pub jitter_tolerance_us: f64,
    /// Re-anchor t0 on the latest rotation trigger before each detection.
    pub refresh_t0: bool,
    /// Replace ω by 2π over the latest rotation interval.
    pub reestimate_omega: bool,
}

impl Default for TriggerSettings {
    fn default() -> Self {
        Self {
            pps_period_us: 1e6,
            jitter_tolerance_us: 500.0,
            refresh_t0: true,
            reestimate_omega: false,
        }
    }
}

/// Instant inside the accumulation window that anchors the platform angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowAnchor {
    Start,
    #[default]
    Midpoint,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    pub anchor: WindowAnchor,
    /// Overlap representation and detection on two threads.
    pub pipelined: bool,
    /// Bounded queue length between the two pipeline stages.
    pub queue_depth: usize,
    /// Detections need at least this IoU with the ground-truth box to count.
    pub match_iou: f64,
    /// In-view windows with a smaller projected drone are left out of recall.
    pub min_apparent_size: f64,
    /// Cap on evaluated windows (0 = all).
    pub max_windows: usize,
    /// Emit SVG plots of azimuth and elevation over time.
    pub plots: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            anchor: WindowAnchor::Midpoint,
            pipelined: true,
            queue_depth: 2,
            match_iou: 0.5,
            min_apparent_size: 14.0,
            max_windows: 0,
            plots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Sequence label used in reports.
    pub name: String,
    pub seed: u64,
    pub sensor: SensorConfig,
    pub platform: PlatformPose,
    pub msr: MsrSettings,
    pub detector: DetectorSettings,
    pub scene: Scene,
    pub simulation: SimulationSettings,
    pub triggers: TriggerSettings,
    pub eval: EvalSettings,
    pub output: OutputSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "sequence".into(),
            seed: 7,
            sensor: SensorConfig::default(),
            platform: PlatformPose::default(),
            msr: MsrSettings::default(),
            detector: DetectorSettings::default(),
            scene: Scene::default(),
            simulation: SimulationSettings::default(),
            triggers: TriggerSettings::default(),
            eval: EvalSettings::default(),
            output: OutputSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!(
                "line {} column {}, field `{}`: {}",
                inner.line(),
                inner.column(),
                path,
                inner
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        self.platform.validate()?;
        self.scene.validate()?;
        if self.msr.slices == 0 {
            return Err(Error::Config("msr.slices must be >= 1".into()));
        }
        if self.msr.window_us == 0 {
            return Err(Error::Config("msr.window_us must be > 0".into()));
        }
        if !self.msr.window_us.is_multiple_of(self.msr.slices as u64) {
            return Err(Error::Config(format!(
                "msr.window_us ({}) must be divisible by msr.slices ({})",
                self.msr.window_us, self.msr.slices
            )));
        }
        if self.eval.queue_depth == 0 {
            return Err(Error::Config("eval.queue_depth must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.eval.match_iou) {
            return Err(Error::Config("eval.match_iou must be in [0, 1]".into()));
        }
        self.detector.reference.validate()?;
        Ok(())
    }
}
