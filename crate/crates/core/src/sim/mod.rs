//! Synthetic event streams from a spinning, tilted camera.
//!
//! Entities (background landmarks and the drone) are rendered as disks into a
//! log-intensity buffer once per time step. A pixel fires one event for each
//! multiple of the contrast threshold its log intensity has moved since its
//! last event, with timestamps drawn uniformly inside the step.

mod platform;
mod scene;

pub(crate) use platform::wrap_angle;
pub use platform::{platform_angle, PlatformPose};
pub use scene::{
    CarrierMotion, DroneSpec, Landmark, LandmarkField, Scene, Trajectory, TrajectorySpec, Waypoint,
};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity, SensorConfig, Timestamp};
use crate::geometry::camera_to_platform_matrix;
use crate::io::{TriggerRecord, TriggerSource};

/// Upper bound on events a single pixel may emit within one step.
pub const MAX_EVENTS_PER_PIXEL_STEP: u32 = 8;

/// Objects closer than this to the optical center are not rendered, meters.
const NEAR_PLANE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    /// Distance along the optical axis.
    pub depth: f64,
}

/// Camera-frame coordinates of a platform-frame point at `t`.
pub fn platform_to_camera(p: &Vector3<f64>, t: Timestamp, pose: &PlatformPose) -> Vector3<f64> {
    let r = camera_to_platform_matrix(platform_angle(t, pose), pose.tilt_deg);
    r.transpose() * p
}

/// Projects a platform-frame point; `None` if behind the camera or off the sensor.
pub fn world_to_pixel(
    pw: &Vector3<f64>,
    t: Timestamp,
    pose: &PlatformPose,
    sensor: &SensorConfig,
) -> Option<Projection> {
    project_camera(&platform_to_camera(pw, t, pose), sensor).filter(|p| on_sensor(p.u, p.v, sensor))
}

fn project_camera(pc: &Vector3<f64>, sensor: &SensorConfig) -> Option<Projection> {
    if pc.z <= 0.0 {
        return None;
    }
    Some(Projection {
        u: sensor.fx * pc.x / pc.z + sensor.cx,
        v: sensor.fy * pc.y / pc.z + sensor.cy,
        depth: pc.z,
    })
}

/// Pixel `i` covers `[i - 0.5, i + 0.5)`.
pub fn on_sensor(u: f64, v: f64, sensor: &SensorConfig) -> bool {
    u >= -0.5 && u < f64::from(sensor.width) - 0.5 && v >= -0.5 && v < f64::from(sensor.height) - 0.5
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthSample {
    pub t: Timestamp,
    /// Unit drone direction in the platform frame.
    pub bearing: Vector3<f64>,
    pub in_fov: bool,
    /// Projected drone diameter, pixels (0 when behind the camera).
    pub apparent_size: f64,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub events: EventStream,
    /// Rotation and PPS triggers, time-sorted, tagged with their true source.
    pub triggers: Vec<TriggerRecord>,
    pub ground_truth: Vec<GroundTruthSample>,
}

impl SimOutput {
    /// Trigger timestamps as the camera's single trigger input would see them.
    pub fn merged_triggers(&self) -> Vec<Timestamp> {
        self.triggers.iter().map(|r| r.t).collect()
    }
}

struct Disk {
    center: Vector3<f64>,
    radius: f64,
    contrast: f64,
}

/// Rotation ticks where the heading wraps, and one PPS tick per elapsed second.
pub fn trigger_schedule(pose: &PlatformPose, duration: u64) -> Vec<TriggerRecord> {
    let mut out = Vec::new();
    if let Some(period) = pose.rotation_period_us() {
        let t0 = pose.t0 as f64;
        let mut k = (-t0 / period).ceil() as i64;
        loop {
            let t = t0 + k as f64 * period;
            if t >= duration as f64 {
                break;
            }
            if t >= 0.0 {
                out.push(TriggerRecord {
                    t: t.round() as Timestamp,
                    source: TriggerSource::Rotation,
                });
            }
            k += 1;
        }
    }
    let mut s = 1_000_000;
    while s <= duration {
        out.push(TriggerRecord {
            t: s,
            source: TriggerSource::Pps,
        });
        s += 1_000_000;
    }
    out.sort_by_key(|r| r.t);
    out
}

/// Runs the contrast-crossing simulator over `[0, duration]`.
pub fn simulate_sequence(
    scene: &Scene,
    pose: &PlatformPose,
    sensor: &SensorConfig,
    duration: u64,
    seed: u64,
) -> Result<SimOutput> {
    scene.validate()?;
    pose.validate()?;
    sensor.validate()?;
    let drone = match &scene.drone {
        Some(spec) => {
            let tr = Trajectory::from_spec(&spec.trajectory)?;
            if !tr.covers(0, duration) {
                return Err(Error::Config(format!(
                    "drone trajectory does not cover [0, {duration}] µs"
                )));
            }
            Some((tr, spec.radius, spec.contrast))
        }
        None => None,
    };
    let landmarks = scene.all_landmarks();
    let carrier = scene.carrier.unwrap_or_default();

    let (w, h) = (usize::from(sensor.width), usize::from(sensor.height));
    let n = w * h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut intensity = vec![0.0f64; n];
    let mut reference = vec![0.0f64; n];
    let mut mark = vec![u32::MAX; n];
    let mut painted: Vec<u32> = Vec::new();
    let mut pending: Vec<u32> = Vec::new();
    let mut candidates: Vec<u32> = Vec::new();
    let mut disks: Vec<Disk> = Vec::with_capacity(landmarks.len() + 1);
    let mut events: Vec<Event> = Vec::new();
    let mut step_events: Vec<Event> = Vec::new();
    let mut ground_truth = Vec::new();

    let noise = if scene.noise_rate > 0.0 {
        let mean = scene.noise_rate * n as f64 * scene.dt_us as f64 * 1e-6;
        Some(Poisson::new(mean).map_err(|e| Error::Config(format!("noise rate: {e}")))?)
    } else {
        None
    };
    let c = scene.contrast_threshold;

    let mut step: u32 = 0;
    let mut t_prev: Timestamp = 0;
    let mut t: Timestamp = 0;
    loop {
        let rot = camera_to_platform_matrix(platform_angle(t, pose), pose.tilt_deg).transpose();

        disks.clear();
        for lm in &landmarks {
            let dev = carrier.to_device(&Vector3::from(lm.position), t);
            disks.push(Disk {
                center: rot * dev,
                radius: lm.radius,
                contrast: lm.contrast,
            });
        }
        if let Some((tr, radius, contrast)) = &drone {
            let dev = carrier.to_device(&tr.position_at(t), t);
            let cam = rot * dev;
            let bearing = dev.normalize();
            let proj = project_camera(&cam, sensor);
            ground_truth.push(GroundTruthSample {
                t,
                bearing,
                in_fov: proj.is_some_and(|p| on_sensor(p.u, p.v, sensor)),
                apparent_size: proj.map_or(0.0, |p| 2.0 * sensor.fx * radius / p.depth),
            });
            disks.push(Disk {
                center: cam,
                radius: *radius,
                contrast: *contrast,
            });
        }
        // painter's order: far to near
        disks.sort_by(|a, b| b.center.z.total_cmp(&a.center.z));

        candidates.clear();
        for &p in &painted {
            intensity[p as usize] = 0.0;
            if mark[p as usize] != step {
                mark[p as usize] = step;
                candidates.push(p);
            }
        }
        painted.clear();
        for disk in &disks {
            paint_disk(disk, sensor, &mut intensity, &mut painted);
        }
        for &p in painted.iter().chain(pending.iter()) {
            if mark[p as usize] != step {
                mark[p as usize] = step;
                candidates.push(p);
            }
        }
        pending.clear();

        if step > 0 {
            step_events.clear();
            let span = t - t_prev;
            for &p in &candidates {
                let i = p as usize;
                let diff = intensity[i] - reference[i];
                let crossings = (diff.abs() / c + 1e-9).floor() as u32;
                if crossings == 0 {
                    continue;
                }
                let emitted = crossings.min(MAX_EVENTS_PER_PIXEL_STEP);
                if crossings > emitted {
                    pending.push(p);
                }
                let pol = if diff > 0.0 {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                };
                reference[i] += f64::from(pol.sign()) * f64::from(emitted) * c;
                let (x, y) = ((i % w) as u16, (i / w) as u16);
                for _ in 0..emitted {
                    let te = t_prev + rng.random_range(0..span);
                    step_events.push(Event::new(te, x, y, pol));
                }
            }
            if let Some(dist) = &noise {
                let count = dist.sample(&mut rng) as u64;
                for _ in 0..count {
                    let i = rng.random_range(0..n);
                    let pol = if rng.random_bool(0.5) {
                        Polarity::Positive
                    } else {
                        Polarity::Negative
                    };
                    let te = t_prev + rng.random_range(0..span);
                    step_events.push(Event::new(te, (i % w) as u16, (i / w) as u16, pol));
                }
            }
            step_events.sort_by_key(|e| e.t);
            events.extend_from_slice(&step_events);
        }

        if t >= duration {
            break;
        }
        t_prev = t;
        t = (t + scene.dt_us).min(duration);
        step += 1;
    }

    Ok(SimOutput {
        events: EventStream::new(sensor.width, sensor.height, events),
        triggers: trigger_schedule(pose, duration),
        ground_truth,
    })
}

/// Fills pixels whose centers fall inside the projected disk. A disk smaller
/// than one pixel still lights the pixel under its center.
fn paint_disk(disk: &Disk, sensor: &SensorConfig, intensity: &mut [f64], painted: &mut Vec<u32>) {
    let Some(p) = project_camera(&disk.center, sensor) else {
        return;
    };
    if p.depth < NEAR_PLANE {
        return;
    }
    let rx = sensor.fx * disk.radius / p.depth;
    let ry = sensor.fy * disk.radius / p.depth;
    let (w, h) = (i64::from(sensor.width), i64::from(sensor.height));
    let x0 = (p.u - rx).ceil().max(0.0);
    let x1 = (p.u + rx).floor().min((w - 1) as f64);
    let y0 = (p.v - ry).ceil().max(0.0);
    let y1 = (p.v + ry).floor().min((h - 1) as f64);
    let mut any = false;
    if x0 <= x1 && y0 <= y1 {
        for y in y0 as i64..=y1 as i64 {
            let dy = (y as f64 - p.v) / ry;
            for x in x0 as i64..=x1 as i64 {
                let dx = (x as f64 - p.u) / rx;
                if dx * dx + dy * dy <= 1.0 {
                    let i = (y * w + x) as usize;
                    intensity[i] = disk.contrast;
                    painted.push(i as u32);
                    any = true;
                }
            }
        }
    }
    if !any && on_sensor(p.u, p.v, sensor) {
        let (x, y) = (p.u.round() as i64, p.v.round() as i64);
        let i = (y * w + x) as usize;
        intensity[i] = disk.contrast;
        painted.push(i as u32);
    }
}
