use super::{BBox, Detection, Detector};
use crate::error::Result;
use crate::event::{SensorConfig, Timestamp};
use crate::representation::Msr;
use crate::sim::{world_to_pixel, GroundTruthSample, PlatformPose};

/// Detection centered exactly on the projected ground truth, sized by its
/// apparent diameter; `None` when the target is out of view.
pub fn detect_oracle(
    gt: &GroundTruthSample,
    sensor: &SensorConfig,
    pose: &PlatformPose,
) -> Option<Detection> {
    let p = world_to_pixel(&gt.bearing, gt.t, pose, sensor)?;
    let size = gt.apparent_size.max(1.0);
    Some(Detection {
        bbox: BBox::new(p.u, p.v, size, size),
        score: 1.0,
        t: gt.t,
    })
}

/// Time-sorted ground truth with nearest-sample and interpolated lookup.
#[derive(Debug, Clone, Default)]
pub struct GroundTruthIndex {
    samples: Vec<GroundTruthSample>,
}

impl GroundTruthIndex {
    pub fn new(mut samples: Vec<GroundTruthSample>) -> Self {
        samples.sort_by_key(|s| s.t);
        Self { samples }
    }

    pub fn samples(&self) -> &[GroundTruthSample] {
        &self.samples
    }

    pub fn covers(&self, t: Timestamp) -> bool {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => a.t <= t && t <= b.t,
            _ => false,
        }
    }

    /// Sample closest in time to `t` (earlier one on ties), if `t` is covered.
    pub fn nearest(&self, t: Timestamp) -> Option<&GroundTruthSample> {
        if !self.covers(t) {
            return None;
        }
        let i = self.samples.partition_point(|s| s.t < t);
        if i == 0 {
            return self.samples.first();
        }
        let (a, b) = (&self.samples[i - 1], self.samples.get(i));
        match b {
            Some(b) if b.t - t < t - a.t => Some(b),
            _ => Some(a),
        }
    }

    /// Linear interpolation of bearing (re-normalized) and apparent size.
    /// Visibility is taken from the nearer sample.
    pub fn interpolate(&self, t: Timestamp) -> Option<GroundTruthSample> {
        let near = *self.nearest(t)?;
        let i = self.samples.partition_point(|s| s.t <= t);
        if i == 0 || i == self.samples.len() {
            return Some(GroundTruthSample { t, ..near });
        }
        let (a, b) = (&self.samples[i - 1], &self.samples[i]);
        let f = (t - a.t) as f64 / (b.t - a.t) as f64;
        let bearing = (a.bearing + (b.bearing - a.bearing) * f).normalize();
        Some(GroundTruthSample {
            t,
            bearing,
            in_fov: near.in_fov,
            apparent_size: a.apparent_size + (b.apparent_size - a.apparent_size) * f,
        })
    }
}

/// Oracle behind the [`Detector`] interface: uses the ground-truth sample
/// nearest the window midpoint and stamps the detection with the midpoint.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    pub ground_truth: GroundTruthIndex,
    pub sensor: SensorConfig,
    pub pose: PlatformPose,
    /// Round centroids to the pixel grid.
    pub quantize: bool,
}

impl Detector for OracleDetector {
    fn detect(&self, msr: &Msr) -> Result<Vec<Detection>> {
        let mid = msr.config.midpoint();
        let Some(gt) = self.ground_truth.nearest(mid) else {
            return Ok(Vec::new());
        };
        Ok(detect_oracle(gt, &self.sensor, &self.pose)
            .map(|mut d| {
                if self.quantize {
                    d.bbox.cx = d.bbox.cx.round();
                    d.bbox.cy = d.bbox.cy.round();
                }
                d.t = mid;
                d
            })
            .into_iter()
            .collect())
    }
}
