use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Timestamp;
use crate::geometry::spin_rotation;

/// A static background blob: a disk of `radius` meters facing the camera.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Landmark {
    pub position: [f64; 3],
    pub radius: f64,
    /// Log-intensity offset against the background.
    pub contrast: f64,
}

/// Randomly scattered landmarks, generated deterministically from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandmarkField {
    pub count: usize,
    pub min_range: f64,
    pub max_range: f64,
    pub min_elevation_deg: f64,
    pub max_elevation_deg: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    /// Contrast magnitude; the sign is drawn at random per landmark.
    pub contrast: f64,
    pub seed: u64,
}

impl Default for LandmarkField {
    fn default() -> Self {
        Self {
            count: 40,
            min_range: 25.0,
            max_range: 60.0,
            min_elevation_deg: 0.0,
            max_elevation_deg: 70.0,
            min_radius: 0.4,
            max_radius: 1.2,
            contrast: 0.5,
            seed: 1,
        }
    }
}

impl LandmarkField {
    pub fn generate(&self) -> Vec<Landmark> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| {
                let range = rng.random_range(self.min_range..=self.max_range);
                let az = rng.random_range(0.0..std::f64::consts::TAU);
                let el = rng
                    .random_range(self.min_elevation_deg..=self.max_elevation_deg)
                    .to_radians();
                let radius = rng.random_range(self.min_radius..=self.max_radius);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                Landmark {
                    position: [
                        range * el.cos() * az.sin(),
                        range * el.sin(),
                        range * el.cos() * az.cos(),
                    ],
                    radius,
                    contrast: sign * self.contrast,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t_us: Timestamp,
    pub position: [f64; 3],
}

/// How the drone center moves. Every variant is resolved to piecewise-linear
/// waypoints before simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySpec {
    Waypoints {
        points: Vec<Waypoint>,
    },
    /// Circle about the rotation axis with an optional vertical oscillation.
    Orbit {
        radius: f64,
        height: f64,
        /// Azimuth rate, rad/s (same sense as the platform spin when positive).
        angular_rate: f64,
        #[serde(default)]
        phase_deg: f64,
        #[serde(default)]
        vertical_amplitude: f64,
        #[serde(default)]
        vertical_rate: f64,
        #[serde(default)]
        start_us: Timestamp,
        end_us: Timestamp,
        #[serde(default = "default_orbit_step")]
        step_us: u64,
    },
}

fn default_orbit_step() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneSpec {
    pub trajectory: TrajectorySpec,
    /// Disk radius, meters.
    pub radius: f64,
    pub contrast: f64,
}

/// Optional motion of the whole device: constant velocity plus constant yaw rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierMotion {
    pub velocity: [f64; 3],
    pub yaw_rate: f64,
}

impl CarrierMotion {
    /// World point expressed in the device (platform) frame at time `t`.
    pub fn to_device(&self, world: &Vector3<f64>, t: Timestamp) -> Vector3<f64> {
        let ts = t as f64 * 1e-6;
        let origin = Vector3::from(self.velocity) * ts;
        spin_rotation(self.yaw_rate * ts).transpose() * (world - origin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scene {
    pub landmarks: Vec<Landmark>,
    pub landmark_field: Option<LandmarkField>,
    pub drone: Option<DroneSpec>,
    /// Background activity, events / pixel / second.
    pub noise_rate: f64,
    /// Log-intensity change per event.
    pub contrast_threshold: f64,
    pub dt_us: u64,
    pub carrier: Option<CarrierMotion>,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            landmarks: Vec::new(),
            landmark_field: None,
            drone: None,
            noise_rate: 0.0,
            contrast_threshold: 0.15,
            dt_us: 500,
            carrier: None,
        }
    }
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if self.dt_us == 0 {
            return Err(Error::Config("scene.dt_us must be positive".into()));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(Error::Config("scene.noise_rate must be >= 0".into()));
        }
        if !(self.contrast_threshold > 0.0 && self.contrast_threshold.is_finite()) {
            return Err(Error::Config("scene.contrast_threshold must be > 0".into()));
        }
        if let Some(drone) = &self.drone {
            if !(drone.radius > 0.0) {
                return Err(Error::Config("drone radius must be positive".into()));
            }
        }
        Ok(())
    }

    /// Explicit landmarks followed by the generated field, if any.
    pub fn all_landmarks(&self) -> Vec<Landmark> {
        let mut out = self.landmarks.clone();
        if let Some(field) = &self.landmark_field {
            out.extend(field.generate());
        }
        out
    }
}

/// Piecewise-linear path through time-ordered waypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<Waypoint>,
}

impl Trajectory {
    pub fn new(points: Vec<Waypoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("drone trajectory has no waypoints".into()));
        }
        if points.windows(2).any(|w| w[1].t_us <= w[0].t_us) {
            return Err(Error::Config(
                "drone waypoints must have strictly increasing times".into(),
            ));
        }
        if points.iter().any(|p| p.position.iter().any(|c| !c.is_finite())) {
            return Err(Error::Config("drone waypoint is not finite".into()));
        }
        Ok(Self { points })
    }

    pub fn from_spec(spec: &TrajectorySpec) -> Result<Self> {
        match spec {
            TrajectorySpec::Waypoints { points } => Self::new(points.clone()),
            TrajectorySpec::Orbit {
                radius,
                height,
                angular_rate,
                phase_deg,
                vertical_amplitude,
                vertical_rate,
                start_us,
                end_us,
                step_us,
            } => {
                if !(*radius > 0.0) || *step_us == 0 || end_us <= start_us {
                    return Err(Error::Config(
                        "orbit needs radius > 0, step_us > 0 and end_us > start_us".into(),
                    ));
                }
                let phase = phase_deg.to_radians();
                let mut points = Vec::new();
                let mut t = *start_us;
                loop {
                    let ts = (t - start_us) as f64 * 1e-6;
                    let az = phase + angular_rate * ts;
                    let y = height + vertical_amplitude * (vertical_rate * ts).sin();
                    points.push(Waypoint {
                        t_us: t,
                        position: [radius * az.sin(), y, radius * az.cos()],
                    });
                    if t >= *end_us {
                        break;
                    }
                    t = (t + step_us).min(*end_us);
                }
                Self::new(points)
            }
        }
    }

    /// Whether positions are defined over `[start, end]`.
    pub fn covers(&self, start: Timestamp, end: Timestamp) -> bool {
        if self.points.len() == 1 {
            return true;
        }
        self.points[0].t_us <= start && self.points[self.points.len() - 1].t_us >= end
    }

    /// Linear interpolation; held constant outside the waypoint span.
    pub fn position_at(&self, t: Timestamp) -> Vector3<f64> {
        let pts = &self.points;
        let i = pts.partition_point(|p| p.t_us <= t);
        if i == 0 {
            return Vector3::from(pts[0].position);
        }
        if i == pts.len() {
            return Vector3::from(pts[i - 1].position);
        }
        let (a, b) = (&pts[i - 1], &pts[i]);
        let frac = (t - a.t_us) as f64 / (b.t_us - a.t_us) as f64;
        let pa = Vector3::from(a.position);
        pa + (Vector3::from(b.position) - pa) * frac
    }
}
