//! Bearing estimation from a detection centroid and angular error scoring.
//!
//! Frames:
//!
//! * camera: x right, y down, z along the optical axis (standard pinhole).
//! * platform: origin at the optical center, y along the rotation axis
//!   (up), z toward the zero direction, x completing a right-handed frame.
//!
//! A camera ray reaches the platform frame through three rotations applied
//! right to left: the 180° mount flip about the optical axis, the fixed
//! upward tilt, and the spin about the platform y axis.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::event::{SensorConfig, Timestamp};
use crate::sim::{platform_angle, PlatformPose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Camera,
    Platform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingVector {
    pub v: Vector3<f64>,
    pub frame: Frame,
}

impl BearingVector {
    pub fn camera(x: f64, y: f64, z: f64) -> Self {
        Self {
            v: Vector3::new(x, y, z),
            frame: Frame::Camera,
        }
    }

    pub fn platform(x: f64, y: f64, z: f64) -> Self {
        Self {
            v: Vector3::new(x, y, z),
            frame: Frame::Platform,
        }
    }

    pub fn normalized(&self) -> Self {
        Self {
            v: self.v.normalize(),
            frame: self.frame,
        }
    }
}

/// Azimuth in `(-180, 180]` and elevation in `[-90, 90]`, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalBearing {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl SphericalBearing {
    /// Unit platform vector pointing along this bearing.
    pub fn to_unit_vector(&self) -> Vector3<f64> {
        let (az, el) = (self.azimuth_deg.to_radians(), self.elevation_deg.to_radians());
        Vector3::new(el.cos() * az.sin(), el.sin(), el.cos() * az.cos())
    }
}

/// 180° about the optical axis: camera y-down becomes platform y-up.
pub fn mount_rotation() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0))
}

/// Raises the optical axis by `tilt_deg` toward +y.
pub fn tilt_rotation(tilt_deg: f64) -> Matrix3<f64> {
    let (s, c) = tilt_deg.to_radians().sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c)
}

/// Spin by `theta` radians about the platform y axis.
pub fn spin_rotation(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Full camera-to-platform rotation at heading `theta`.
pub fn camera_to_platform_matrix(theta: f64, tilt_deg: f64) -> Matrix3<f64> {
    spin_rotation(theta) * tilt_rotation(tilt_deg) * mount_rotation()
}

/// Back-projects a pixel through K⁻¹. The result has z = 1, not unit length.
pub fn pixel_to_camera_ray(u: f64, v: f64, sensor: &SensorConfig) -> BearingVector {
    BearingVector::camera((u - sensor.cx) / sensor.fx, (v - sensor.cy) / sensor.fy, 1.0)
}

pub fn camera_to_platform(ray: &BearingVector, theta: f64, tilt_deg: f64) -> BearingVector {
    debug_assert_eq!(ray.frame, Frame::Camera);
    BearingVector {
        v: camera_to_platform_matrix(theta, tilt_deg) * ray.v,
        frame: Frame::Platform,
    }
}

/// Azimuth uses the two-argument arctangent of (x, z) so the full circle is
/// covered; it agrees with `atan(x / z)` whenever z > 0. At the poles the
/// azimuth is reported as 0.
pub fn to_spherical(v: &BearingVector) -> Result<SphericalBearing> {
    let norm = v.v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidArgument(
            "bearing vector must be finite and non-zero".into(),
        ));
    }
    let elevation = (v.v.y / norm).clamp(-1.0, 1.0).asin().to_degrees();
    let mut azimuth = v.v.x.atan2(v.v.z).to_degrees();
    if azimuth <= -180.0 {
        azimuth = 180.0;
    }
    if azimuth == 0.0 {
        // fold -0.0
        azimuth = 0.0;
    }
    Ok(SphericalBearing {
        azimuth_deg: azimuth,
        elevation_deg: elevation,
    })
}

/// Pixel centroid at time `t` to a unit platform bearing and its angles.
pub fn pixel_to_bearing(
    u: f64,
    v: f64,
    t: Timestamp,
    sensor: &SensorConfig,
    pose: &PlatformPose,
) -> Result<(BearingVector, SphericalBearing)> {
    let theta = platform_angle(t, pose);
    let ray = pixel_to_camera_ray(u, v, sensor);
    let platform = camera_to_platform(&ray, theta, pose.tilt_deg).normalized();
    let spherical = to_spherical(&platform)?;
    Ok((platform, spherical))
}

/// Angle between two directions, degrees in `[0, 180]`.
///
/// Inputs are normalized internally. Evaluated as `atan2(|a×b|, a·b)`, which
/// equals `acos(a·b)` for unit vectors and keeps full precision near 0° and 180°.
pub fn angular_error(est: &Vector3<f64>, gt: &Vector3<f64>) -> Result<f64> {
    let (ne, ng) = (est.norm(), gt.norm());
    if ne == 0.0 || ng == 0.0 || !ne.is_finite() || !ng.is_finite() {
        return Err(Error::InvalidArgument(
            "angular error needs finite non-zero vectors".into(),
        ));
    }
    let (a, b) = (est / ne, gt / ng);
    let cos = a.dot(&b).clamp(-1.0, 1.0);
    let sin = a.cross(&b).norm();
    Ok(sin.atan2(cos).to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: &Vector3<f64>, b: &Vector3<f64>, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn principal_point_is_optical_axis() {
        let s = SensorConfig::default();
        let r = pixel_to_camera_ray(s.cx, s.cy, &s);
        assert_eq!(r.v, Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn one_focal_length_right_is_45_degrees() {
        let s = SensorConfig::default();
        let r = pixel_to_camera_ray(s.cx + s.fx, s.cy, &s);
        assert!(close(&r.v, &Vector3::new(1.0, 0.0, 1.0), 1e-15));
    }

    #[test]
    fn tilt_raises_principal_ray() {
        let out = camera_to_platform(&BearingVector::camera(0.0, 0.0, 1.0), 0.0, 35.0);
        let (s, c) = 35f64.to_radians().sin_cos();
        assert!(close(&out.v, &Vector3::new(0.0, s, c), 1e-15));
        assert_eq!(out.frame, Frame::Platform);
    }

    #[test]
    fn quarter_turn_points_along_x() {
        let out = camera_to_platform(&BearingVector::camera(0.0, 0.0, 1.0), FRAC_PI_2, 0.0);
        assert!(close(&out.v, &Vector3::new(1.0, 0.0, 0.0), 1e-15));
    }

    #[test]
    fn identity_pose_flips_camera_x_exactly() {
        let z = camera_to_platform(&BearingVector::camera(0.0, 0.0, 1.0), 0.0, 0.0);
        assert_eq!(z.v, Vector3::new(0.0, 0.0, 1.0));
        let x = camera_to_platform(&BearingVector::camera(1.0, 0.0, 0.0), 0.0, 0.0);
        assert_eq!(x.v, Vector3::new(-1.0, 0.0, 0.0));
    }

    #[test]
    fn spherical_reference_cases() {
        let s = to_spherical(&BearingVector::platform(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((s.azimuth_deg, s.elevation_deg), (0.0, 0.0));

        let pole = to_spherical(&BearingVector::platform(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(pole.azimuth_deg, 0.0);
        assert!((pole.elevation_deg - 90.0).abs() < 1e-12);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q3 = to_spherical(&BearingVector::platform(-h, 0.0, -h)).unwrap();
        assert!((q3.azimuth_deg + 135.0).abs() < 1e-12);
        assert_eq!(q3.elevation_deg, 0.0);
    }

    #[test]
    fn azimuth_behind_is_plus_180() {
        let s = to_spherical(&BearingVector::platform(-0.0, 0.0, -1.0)).unwrap();
        assert_eq!(s.azimuth_deg, 180.0);
        let s = to_spherical(&BearingVector::platform(0.0, 0.0, -1.0)).unwrap();
        assert_eq!(s.azimuth_deg, 180.0);
    }

    #[test]
    fn single_argument_arctan_agrees_in_front() {
        let v = BearingVector::platform(0.3, -0.2, 0.9);
        let s = to_spherical(&v).unwrap();
        assert!((s.azimuth_deg - (0.3f64 / 0.9).atan().to_degrees()).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_rejected() {
        assert!(to_spherical(&BearingVector::platform(0.0, 0.0, 0.0)).is_err());
        assert!(angular_error(&Vector3::zeros(), &Vector3::x()).is_err());
    }

    #[test]
    fn bearing_chain_reference_cases() {
        let s = SensorConfig::default();
        let pose = PlatformPose::default();
        let (_, b) = pixel_to_bearing(s.cx, s.cy, pose.t0, &s, &pose).unwrap();
        assert!(b.azimuth_deg.abs() < 1e-12);
        assert!((b.elevation_deg - 35.0).abs() < 1e-12);

        let flat = PlatformPose {
            tilt_deg: 0.0,
            ..pose
        };
        let quarter = (FRAC_PI_2 / flat.omega * 1e6).round() as u64;
        let (v, b) = pixel_to_bearing(s.cx, s.cy, quarter, &s, &flat).unwrap();
        assert!((b.azimuth_deg - 90.0).abs() < 1e-4);
        assert!(b.elevation_deg.abs() < 1e-12);
        assert!((v.v.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn angular_error_reference_cases() {
        let x = Vector3::x();
        assert_eq!(angular_error(&x, &x).unwrap(), 0.0);
        assert!((angular_error(&x, &Vector3::y()).unwrap() - 90.0).abs() < 1e-12);
        assert!((angular_error(&x, &-x).unwrap() - 180.0).abs() < 1e-12);
        // non-unit input is normalized
        assert!((angular_error(&(3.0 * x), &(0.5 * Vector3::y())).unwrap() - 90.0).abs() < 1e-12);
    }

    fn unit_vec() -> impl Strategy<Value = Vector3<f64>> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-degenerate", |(x, y, z)| x * x + y * y + z * z > 1e-3)
            .prop_map(|(x, y, z)| Vector3::new(x, y, z).normalize())
    }

    proptest! {
        #[test]
        fn back_projection_inverts_intrinsics(u in -500.0f64..1200.0, v in -500.0f64..1000.0) {
            let s = SensorConfig::default();
            let r = pixel_to_camera_ray(u, v, &s).v;
            let k = Matrix3::new(s.fx, 0.0, s.cx, 0.0, s.fy, s.cy, 0.0, 0.0, 1.0);
            let back = k * r;
            prop_assert!((back.x - u).abs() < 1e-12 * (1.0 + u.abs()));
            prop_assert!((back.y - v).abs() < 1e-12 * (1.0 + v.abs()));
            prop_assert_eq!(back.z, 1.0);
        }

        #[test]
        fn rotation_preserves_norm(x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0,
                                    theta in 0.0f64..7.0, tilt in 0.0f64..89.9) {
            let inp = BearingVector::camera(x, y, z);
            let out = camera_to_platform(&inp, theta, tilt);
            prop_assert!((out.v.norm() - inp.v.norm()).abs() < 1e-12);
        }

        #[test]
        fn spherical_scale_invariant(v in unit_vec(), scale in 1e-6f64..1e6) {
            let a = to_spherical(&BearingVector { v, frame: Frame::Platform }).unwrap();
            let b = to_spherical(&BearingVector { v: v * scale, frame: Frame::Platform }).unwrap();
            prop_assert!((a.azimuth_deg - b.azimuth_deg).abs() < 1e-9);
            prop_assert!((a.elevation_deg - b.elevation_deg).abs() < 1e-9);
        }

        #[test]
        fn spherical_round_trip(v in unit_vec()) {
            prop_assume!(v.y.abs() < 0.999_999);
            let s = to_spherical(&BearingVector { v, frame: Frame::Platform }).unwrap();
            prop_assert!((s.to_unit_vector() - v).amax() < 1e-12);
            prop_assert!(s.azimuth_deg > -180.0 && s.azimuth_deg <= 180.0);
        }

        #[test]
        fn angular_error_metric_properties(a in unit_vec(), b in unit_vec()) {
            let ab = angular_error(&a, &b).unwrap();
            let ba = angular_error(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=180.0).contains(&ab));
        }
    }
}
