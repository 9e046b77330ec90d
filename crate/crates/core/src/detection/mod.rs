//! Detectors operating on a multi-slice representation.
//!
//! The learned detector is replaced by the [`Detector`] trait with two
//! implementations: an oracle that projects simulator ground truth (to
//! isolate bearing error from detection error) and a classical reference
//! detector that rejects blobs moving with the rotation-induced background
//! flow. The channel-gating kernel lives in [`fcg`].

pub mod components;
pub mod fcg;
mod oracle;
mod reference;

pub use components::{extract_components, Component};
pub use fcg::{fcg_forward, FcgOutput};
pub use oracle::{detect_oracle, GroundTruthIndex, OracleDetector};
pub use reference::{
    classify_tracks, detect_reference, predict_background, ReferenceDetector, ReferenceParams,
};

use crate::error::Result;
use crate::event::{SensorConfig, Timestamp};
use crate::representation::Msr;

/// Axis-aligned box in center-size form, pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        debug_assert!(w > 0.0 && h > 0.0, "box sides must be positive");
        Self { cx, cy, w, h }
    }

    pub fn from_corners(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new((x0 + x1) / 2.0, (y0 + y1) / 2.0, x1 - x0, y1 - y0)
    }

    /// `(x0, y0, x1, y1)`.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0 && self.h > 0.0 && self.cx.is_finite() && self.cy.is_finite()
    }

    /// Intersection with the sensor area `[-0.5, W - 0.5) x [-0.5, H - 0.5)`.
    pub fn clamp_to(&self, sensor: &SensorConfig) -> Option<BBox> {
        let (x0, y0, x1, y1) = self.corners();
        let (xmax, ymax) = (f64::from(sensor.width) - 0.5, f64::from(sensor.height) - 0.5);
        let (x0, y0) = (x0.max(-0.5), y0.max(-0.5));
        let (x1, y1) = (x1.min(xmax), y1.min(ymax));
        (x1 > x0 && y1 > y0).then(|| BBox::from_corners(x0, y0, x1, y1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    /// In `[0, 1]`.
    pub score: f64,
    /// Instant the detection represents, µs.
    pub t: Timestamp,
}

/// Descending score, then ascending center x.
pub fn sort_detections(dets: &mut [Detection]) {
    dets.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.bbox.cx.total_cmp(&b.bbox.cx))
            .then(a.bbox.cy.total_cmp(&b.bbox.cy))
    });
}

/// A detector consuming one window's representation.
pub trait Detector: Send + Sync {
    fn detect(&self, msr: &Msr) -> Result<Vec<Detection>>;
}
