use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Timestamp;

/// Spin state of the rotating platform and the camera's mounting tilt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatformPose {
    /// Angular velocity about the vertical axis, rad/s.
    pub omega: f64,
    /// Time the platform last passed the zero direction, µs.
    #[serde(rename = "t0_us")]
    pub t0: Timestamp,
    /// Upward tilt of the optical axis, degrees.
    pub tilt_deg: f64,
}

impl Default for PlatformPose {
    fn default() -> Self {
        Self {
            omega: 0.95,
            t0: 0,
            tilt_deg: 35.0,
        }
    }
}

impl PlatformPose {
    pub fn validate(&self) -> Result<()> {
        if !self.omega.is_finite() {
            return Err(Error::Config("platform omega must be finite".into()));
        }
        if !(0.0..90.0).contains(&self.tilt_deg) {
            return Err(Error::Config(format!(
                "mounting tilt must be in [0, 90) degrees, got {}",
                self.tilt_deg
            )));
        }
        Ok(())
    }

    /// One full revolution, µs. `None` when the platform is not spinning.
    pub fn rotation_period_us(&self) -> Option<f64> {
        (self.omega != 0.0).then(|| TAU / self.omega.abs() * 1e6)
    }
}

/// Platform heading at `t`, wrapped to `[0, 2π)`.
pub fn platform_angle(t: Timestamp, pose: &PlatformPose) -> f64 {
    let dt_s = (t as i128 - pose.t0 as i128) as f64 * 1e-6;
    wrap_angle(dt_s * pose.omega)
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}
