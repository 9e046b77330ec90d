//! Event data model shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Microseconds since the stream epoch.
pub type Timestamp = u64;

/// Sign of the log-intensity change that fired an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn from_i8(value: i8) -> Option<Self> {
        match value {
            1 => Some(Polarity::Positive),
            -1 => Some(Polarity::Negative),
            _ => None,
        }
    }

    /// +1 or -1.
    #[inline]
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub t: Timestamp,
    pub x: u16,
    pub y: u16,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: Timestamp, x: u16, y: u16, p: Polarity) -> Self {
        Self { t, x, y, p }
    }
}

/// Pinhole intrinsics and resolution of the event sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub width: u16,
    pub height: u16,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

/// Horizontal field of view of the DVXplorer with its 3.6 mm lens, degrees.
pub const DEFAULT_HFOV_DEG: f64 = 77.32;
/// Vertical field of view, degrees.
pub const DEFAULT_VFOV_DEG: f64 = 61.93;

impl Default for SensorConfig {
    fn default() -> Self {
        Self::from_fov(640, 480, DEFAULT_HFOV_DEG, DEFAULT_VFOV_DEG)
    }
}

impl SensorConfig {
    /// Intrinsics for a centered principal point and the given full fields of view.
    ///
    /// Pixel indices address pixel centers, so the optical center of a
    /// `width`-wide sensor sits at `(width - 1) / 2`.
    pub fn from_fov(width: u16, height: u16, hfov_deg: f64, vfov_deg: f64) -> Self {
        let fx = f64::from(width) / 2.0 / (hfov_deg.to_radians() / 2.0).tan();
        let fy = f64::from(height) / 2.0 / (vfov_deg.to_radians() / 2.0).tan();
        Self {
            width,
            height,
            fx,
            fy,
            cx: (f64::from(width) - 1.0) / 2.0,
            cy: (f64::from(height) - 1.0) / 2.0,
        }
    }

    pub fn horizontal_fov_deg(&self) -> f64 {
        2.0 * (f64::from(self.width) / (2.0 * self.fx)).atan().to_degrees()
    }

    pub fn vertical_fov_deg(&self) -> f64 {
        2.0 * (f64::from(self.height) / (2.0 * self.fy)).atan().to_degrees()
    }

    pub fn pixel_count(&self) -> usize {
        usize::from(self.width) * usize::from(self.height)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("sensor intrinsics must be finite".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("sensor dimensions must be non-zero".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::Config("focal lengths must be positive".into()));
        }
        if !(0.0..f64::from(self.width)).contains(&self.cx)
            || !(0.0..f64::from(self.height)).contains(&self.cy)
        {
            return Err(Error::Config("principal point must lie on the sensor".into()));
        }
        Ok(())
    }
}

/// Time-ordered events from one sensor.
///
/// Immutable once built; share it by reference across consumers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    pub width: u16,
    pub height: u16,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    OutOfBounds,
    NonMonotonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

/// Result of [`validate_stream`]. At most [`MAX_REPORTED_VIOLATIONS`] entries
/// are kept, but `total` counts all of them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub total: usize,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.total == 0
    }
}

pub const MAX_REPORTED_VIOLATIONS: usize = 100;

impl EventStream {
    pub fn new(width: u16, height: u16, events: Vec<Event>) -> Self {
        Self {
            width,
            height,
            events,
        }
    }

    pub fn empty(width: u16, height: u16) -> Self {
        Self::new(width, height, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first_time(&self) -> Option<Timestamp> {
        self.events.first().map(|e| e.t)
    }

    pub fn last_time(&self) -> Option<Timestamp> {
        self.events.last().map(|e| e.t)
    }

    /// Slice of events with `start <= t < end`. Requires a time-ordered stream.
    pub fn range(&self, start: Timestamp, end: Timestamp) -> &[Event] {
        let lo = self.events.partition_point(|e| e.t < start);
        let hi = self.events.partition_point(|e| e.t < end);
        &self.events[lo..hi.max(lo)]
    }
}

/// Checks bounds and timestamp ordering of every event.
pub fn validate_stream(stream: &EventStream) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut record = |index, kind| {
        report.total += 1;
        if report.violations.len() < MAX_REPORTED_VIOLATIONS {
            report.violations.push(Violation { index, kind });
        }
    };
    let mut prev: Option<Timestamp> = None;
    for (i, e) in stream.events.iter().enumerate() {
        if e.x >= stream.width || e.y >= stream.height {
            record(i, ViolationKind::OutOfBounds);
        }
        if prev.is_some_and(|p| e.t < p) {
            record(i, ViolationKind::NonMonotonic);
        }
        prev = Some(e.t);
    }
    report
}

/// Events in the half-open interval `[start, start + duration)`, order preserved.
pub fn window(stream: &EventStream, start: Timestamp, duration: u64) -> Result<EventStream> {
    if duration == 0 {
        return Err(Error::InvalidArgument("window duration must be positive".into()));
    }
    let end = start.saturating_add(duration);
    Ok(EventStream::new(
        stream.width,
        stream.height,
        stream.range(start, end).to_vec(),
    ))
}
