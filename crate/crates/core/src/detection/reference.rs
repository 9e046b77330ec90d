//! Classical reference detector: velocity consistency against the known spin.
//!
//! The rotation axis passes through the optical center, so the image motion
//! of any static scene point depends only on the spin rate, not on depth.
//! Blobs are tracked across slices; a track whose mean displacement departs
//! from the predicted rotation flow is an independently moving object.

use serde::{Deserialize, Serialize};

use super::components::{extract_components, Component, ComponentFilter};
use super::{sort_detections, BBox, Detection, Detector};
use crate::error::{Error, Result};
use crate::event::SensorConfig;
use crate::geometry::{camera_to_platform_matrix, pixel_to_camera_ray};
use crate::representation::{Msr, MsrConfig};
use crate::sim::{wrap_angle, PlatformPose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceParams {
    /// |S_i| needed for a cell to be active.
    pub event_threshold: i32,
    pub min_area: u32,
    pub max_area: u32,
    /// Nearest-neighbour gate between consecutive slices, pixels.
    pub track_radius: f64,
    /// Largest pixel-count ratio between linked components; larger jumps are
    /// blobs merging or splitting.
    pub max_area_ratio: f64,
    /// Allowed deviation of per-slice displacement from background flow, pixels.
    pub flow_tolerance: f64,
    /// Density (events per active pixel) that earns a full score.
    pub density_ref: f64,
    pub border_margin: u16,
    pub merge_gap: u16,
    /// Minimum track length in slices; `None` means ⌈N/2⌉.
    pub min_track_slices: Option<usize>,
    /// Candidates overlapping a higher-scored one above this IoU are dropped.
    pub nms_iou: f64,
}

impl Default for ReferenceParams {
    fn default() -> Self {
        Self {
            event_threshold: 1,
            min_area: 6,
            max_area: 5000,
            track_radius: 12.0,
            max_area_ratio: 1.5,
            flow_tolerance: 1.5,
            density_ref: 2.0,
            border_margin: 2,
            merge_gap: 6,
            min_track_slices: None,
            nms_iou: 0.1,
        }
    }
}

impl ReferenceParams {
    pub fn validate(&self) -> Result<()> {
        if self.event_threshold < 1 {
            return Err(Error::Config("event_threshold must be >= 1".into()));
        }
        if self.min_area == 0 || self.min_area > self.max_area {
            return Err(Error::Config("need 1 <= min_area <= max_area".into()));
        }
        if !(self.track_radius > 0.0 && self.flow_tolerance >= 0.0 && self.density_ref > 0.0) {
            return Err(Error::Config(
                "track_radius and density_ref must be > 0, flow_tolerance >= 0".into(),
            ));
        }
        if !(self.max_area_ratio >= 1.0) {
            return Err(Error::Config("max_area_ratio must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn filter(&self) -> ComponentFilter {
        ComponentFilter {
            threshold: self.event_threshold,
            min_area: self.min_area,
            max_area: self.max_area,
            border_margin: self.border_margin,
            merge_gap: self.merge_gap,
        }
    }

    fn min_len(&self, slices: usize) -> usize {
        self.min_track_slices.unwrap_or(slices.div_ceil(2)).max(2)
    }
}

fn angle_at(t_us: f64, pose: &PlatformPose) -> f64 {
    wrap_angle((t_us - pose.t0 as f64) * 1e-6 * pose.omega)
}

/// Where a static scene point seen at pixel `(u, v)` at `t_from` appears at
/// `t_to` (both µs), under pure platform rotation.
pub fn predict_background(
    u: f64,
    v: f64,
    t_from: f64,
    t_to: f64,
    pose: &PlatformPose,
    sensor: &SensorConfig,
) -> Option<(f64, f64)> {
    let ray = pixel_to_camera_ray(u, v, sensor).v;
    let from = camera_to_platform_matrix(angle_at(t_from, pose), pose.tilt_deg);
    let to = camera_to_platform_matrix(angle_at(t_to, pose), pose.tilt_deg);
    let cam = to.transpose() * (from * ray);
    (cam.z > 0.0).then(|| {
        (
            sensor.fx * cam.x / cam.z + sensor.cx,
            sensor.fy * cam.y / cam.z + sensor.cy,
        )
    })
}

#[derive(Debug, Clone)]
struct Track {
    members: Vec<Component>,
}

impl Track {
    fn last(&self) -> &Component {
        self.members.last().expect("tracks are never empty")
    }
}

/// Greedy nearest-neighbour association between consecutive slices.
fn build_tracks(components: &[Vec<Component>], radius: f64, max_area_ratio: f64) -> Vec<Track> {
    let mut tracks: Vec<Track> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    for (s, comps) in components.iter().enumerate() {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for &ti in &active {
            let last = tracks[ti].last();
            debug_assert_eq!(last.slice + 1, s);
            for (ci, c) in comps.iter().enumerate() {
                let d = (c.cx - last.cx).hypot(c.cy - last.cy);
                let ratio =
                    f64::from(c.pixels.max(last.pixels)) / f64::from(c.pixels.min(last.pixels).max(1));
                if d <= radius && ratio <= max_area_ratio {
                    pairs.push((d, ti, ci));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_taken = vec![false; tracks.len()];
        let mut comp_taken = vec![false; comps.len()];
        let mut next_active = Vec::new();
        for (_, ti, ci) in pairs {
            if track_taken[ti] || comp_taken[ci] {
                continue;
            }
            track_taken[ti] = true;
            comp_taken[ci] = true;
            tracks[ti].members.push(comps[ci]);
            next_active.push(ti);
        }
        for (ci, c) in comps.iter().enumerate() {
            if !comp_taken[ci] {
                tracks.push(Track { members: vec![*c] });
                next_active.push(tracks.len() - 1);
            }
        }
        next_active.sort_unstable();
        active = next_active;
    }
    tracks
}

/// Lower median of the per-slice residual between observed and predicted
/// displacement. Most steps have to disagree with the rotation flow, so one
/// split or merge of background blobs does not pose as motion.
fn flow_deviation(track: &Track, cfg: &MsrConfig, pose: &PlatformPose, sensor: &SensorConfig) -> f64 {
    let mut residuals: Vec<f64> = track
        .members
        .windows(2)
        .map(|pair| {
            let (a, b) = (&pair[0], &pair[1]);
            let ta = cfg.slice_midpoint(a.slice);
            let tb = cfg.slice_midpoint(b.slice);
            let (px, py) = predict_background(a.cx, a.cy, ta, tb, pose, sensor).unwrap_or((a.cx, a.cy));
            (b.cx - px).hypot(b.cy - py)
        })
        .collect();
    residuals.sort_by(f64::total_cmp);
    residuals[(residuals.len() - 1) / 2]
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn iou(a: &BBox, b: &BBox) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    inter / (a.area() + b.area() - inter)
}

/// Turns per-slice components into detections for the window described by `cfg`.
pub fn classify_tracks(
    components: &[Vec<Component>],
    cfg: &MsrConfig,
    pose: &PlatformPose,
    sensor: &SensorConfig,
    params: &ReferenceParams,
) -> Vec<Detection> {
    let n = cfg.slices;
    let min_len = params.min_len(n);
    let mut dets: Vec<Detection> = build_tracks(components, params.track_radius, params.max_area_ratio)
        .into_iter()
        .filter(|tr| tr.members.len() >= min_len)
        .filter(|tr| flow_deviation(tr, cfg, pose, sensor) > params.flow_tolerance)
        .filter_map(|tr| {
            // component boxes span pixel centers; widen by half a pixel each side
            let mut cxs: Vec<f64> = tr
                .members
                .iter()
                .map(|c| (f64::from(c.x0) + f64::from(c.x1)) / 2.0)
                .collect();
            let mut cys: Vec<f64> = tr
                .members
                .iter()
                .map(|c| (f64::from(c.y0) + f64::from(c.y1)) / 2.0)
                .collect();
            let mut ws: Vec<f64> = tr.members.iter().map(|c| f64::from(c.x1 - c.x0) + 1.0).collect();
            let mut hs: Vec<f64> = tr.members.iter().map(|c| f64::from(c.y1 - c.y0) + 1.0).collect();
            let bbox = BBox::new(
                median(&mut cxs),
                median(&mut cys),
                median(&mut ws),
                median(&mut hs),
            )
            .clamp_to(sensor)?;
            let density = tr.members.iter().map(Component::density).sum::<f64>() / tr.members.len() as f64;
            let score = (tr.members.len() as f64 / n as f64) * (density / params.density_ref).min(1.0);
            Some(Detection {
                bbox,
                score: score.clamp(0.0, 1.0),
                t: cfg.midpoint(),
            })
        })
        .collect();
    sort_detections(&mut dets);
    let mut kept: Vec<Detection> = Vec::with_capacity(dets.len());
    for d in dets {
        if kept.iter().all(|k| iou(&k.bbox, &d.bbox) <= params.nms_iou) {
            kept.push(d);
        }
    }
    kept
}

pub fn detect_reference(
    msr: &Msr,
    pose: &PlatformPose,
    sensor: &SensorConfig,
    params: &ReferenceParams,
) -> Result<Vec<Detection>> {
    if msr.num_slices() < 3 {
        return Err(Error::Config(format!(
            "reference detector needs at least 3 slices, got {}",
            msr.num_slices()
        )));
    }
    let comps = extract_components(msr, &params.filter());
    Ok(classify_tracks(&comps, &msr.config, pose, sensor, params))
}

#[derive(Debug, Clone)]
pub struct ReferenceDetector {
    pub params: ReferenceParams,
    pub pose: PlatformPose,
    pub sensor: SensorConfig,
}

impl Detector for ReferenceDetector {
    fn detect(&self, msr: &Msr) -> Result<Vec<Detection>> {
        detect_reference(msr, &self.pose, &self.sensor, &self.params)
    }
}
