//! Planar unicycle kinematics and the range-bearing landmark sensor.

use core::f64::consts::PI;

use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::evanescence::Landmark;

/// Wraps an angle into (-π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians in (-π, π].
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.heading)
    }
}

/// Turn in place, then advance along the new heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlStep {
    pub forward: f64,
    pub turn: f64,
}

impl ControlStep {
    pub fn new(forward: f64, turn: f64) -> Self {
        Self { forward, turn }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    /// Discretization length of roadmap edges, meters.
    pub step_length: f64,
    /// Process noise per meter travelled.
    pub noise_per_meter: Matrix3<f64>,
}

impl MotionModel {
    pub fn noise(&self, step: &ControlStep) -> Matrix3<f64> {
        self.noise_per_meter * step.forward
    }
}

impl Default for MotionModel {
    fn default() -> Self {
        let heading = 0.5f64.to_radians();
        Self {
            step_length: 1.0,
            noise_per_meter: Matrix3::from_diagonal(&Vector3::new(0.02 * 0.02, 0.02 * 0.02, heading * heading)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    /// Detection range; landmarks strictly closer than this are detected.
    pub max_range: f64,
    /// Range/bearing noise covariance used by the linearized update.
    pub noise: Matrix2<f64>,
}

impl Default for SensorModel {
    fn default() -> Self {
        let bearing = 1f64.to_radians();
        Self {
            max_range: 15.0,
            noise: Matrix2::new(0.1 * 0.1, 0.0, 0.0, bearing * bearing),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measurement {
    Detected { range: f64, bearing: f64 },
    Missed,
}

/// Unicycle step and its Jacobian with respect to the prior pose.
pub fn predict(pose: &Pose, step: &ControlStep) -> (Pose, Matrix3<f64>) {
    let heading = normalize_angle(pose.heading + step.turn);
    let (s, c) = heading.sin_cos();
    let next = Pose {
        x: pose.x + step.forward * c,
        y: pose.y + step.forward * s,
        heading,
    };
    let jacobian = Matrix3::new(
        1.0, 0.0, -step.forward * s,
        0.0, 1.0, step.forward * c,
        0.0, 0.0, 1.0,
    );
    (next, jacobian)
}

pub fn in_range(pose: &Pose, landmark: &Landmark, sensor: &SensorModel) -> bool {
    (landmark.position - pose.position()).norm() < sensor.max_range
}

/// The noiseless observation at the pose mean.
pub fn measure_ml(pose: &Pose, landmark: &Landmark, sensor: &SensorModel) -> Measurement {
    let d = landmark.position - pose.position();
    let range = d.norm();
    if range < sensor.max_range {
        Measurement::Detected {
            range,
            bearing: normalize_angle(d.y.atan2(d.x) - pose.heading),
        }
    } else {
        Measurement::Missed
    }
}

/// d(range, bearing) / d(x, y, heading).
pub fn meas_jacobian(pose: &Pose, landmark: &Landmark) -> Result<Matrix2x3<f64>> {
    let d = landmark.position - pose.position();
    let q = d.norm_squared();
    let r = q.sqrt();
    if r <= 1e-9 {
        return Err(Error::Singular);
    }
    Ok(Matrix2x3::new(
        -d.x / r, -d.y / r, 0.0,
        d.y / q, -d.x / q, -1.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn observe(pose: &Pose, landmark: &Landmark) -> Vector2<f64> {
        let d = landmark.position - pose.position();
        Vector2::new(d.norm(), normalize_angle(d.y.atan2(d.x) - pose.heading))
    }

    #[test]
    fn straight_and_turning_steps() {
        let (p, _) = predict(&Pose::new(0.0, 0.0, 0.0), &ControlStep::new(1.0, 0.0));
        assert_eq!((p.x, p.y, p.heading), (1.0, 0.0, 0.0));
        let (p, f) = predict(&Pose::new(0.0, 0.0, 0.0), &ControlStep::new(0.0, PI / 2.0));
        assert_eq!((p.x, p.y), (0.0, 0.0));
        assert!((p.heading - PI / 2.0).abs() < 1e-15);
        assert_eq!(f.fixed_view::<2, 2>(0, 0).into_owned(), Matrix2::identity());
    }

    #[test]
    fn predict_jacobian_matches_central_differences() {
        let pose = Pose::new(1.0, 2.0, 0.3);
        let step = ControlStep::new(1.0, 0.1);
        let (_, f) = predict(&pose, &step);
        let h = 1e-6;
        for j in 0..3 {
            let mut plus = pose.to_vector();
            let mut minus = pose.to_vector();
            plus[j] += h;
            minus[j] -= h;
            let (a, _) = predict(&Pose { x: plus[0], y: plus[1], heading: plus[2] }, &step);
            let (b, _) = predict(&Pose { x: minus[0], y: minus[1], heading: minus[2] }, &step);
            let mut diff = a.to_vector() - b.to_vector();
            diff[2] = normalize_angle(diff[2]);
            for i in 0..3 {
                assert!((diff[i] / (2.0 * h) - f[(i, j)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn ml_measurements() {
        let sensor = SensorModel { max_range: 10.0, ..SensorModel::default() };
        match measure_ml(&Pose::new(0.0, 0.0, 0.0), &Landmark::new("a", 3.0, 4.0), &sensor) {
            Measurement::Detected { range, bearing } => {
                assert!((range - 5.0).abs() < 1e-15);
                assert!((bearing - 0.927_295_218_001_612_2).abs() < 1e-12);
            }
            Measurement::Missed => panic!("expected detection"),
        }
        assert_eq!(
            measure_ml(&Pose::new(0.0, 0.0, 0.0), &Landmark::new("a", 12.0, 0.0), &sensor),
            Measurement::Missed
        );
        match measure_ml(&Pose::new(0.0, 0.0, PI / 2.0), &Landmark::new("a", 0.0, 5.0), &sensor) {
            Measurement::Detected { range, bearing } => {
                assert!((range - 5.0).abs() < 1e-15);
                assert!(bearing.abs() < 1e-15);
            }
            Measurement::Missed => panic!("expected detection"),
        }
        // exactly at the maximum range is not a detection
        assert_eq!(
            measure_ml(&Pose::new(0.0, 0.0, 0.0), &Landmark::new("a", 10.0, 0.0), &sensor),
            Measurement::Missed
        );
    }

    #[test]
    fn axis_aligned_measurement_jacobian() {
        let h = meas_jacobian(&Pose::new(0.0, 0.0, 0.0), &Landmark::new("a", 5.0, 0.0)).unwrap();
        assert_eq!(h[(0, 0)], -1.0);
        assert_eq!(h[(0, 1)], 0.0);
        assert_eq!(h[(1, 2)], -1.0);
    }

    #[test]
    fn measurement_jacobian_matches_central_differences() {
        let pose = Pose::new(1.0, 2.0, 0.3);
        let landmark = Landmark::new("a", 4.0, 6.0);
        let h = meas_jacobian(&pose, &landmark).unwrap();
        let eps = 1e-6;
        for j in 0..3 {
            let mut plus = pose.to_vector();
            let mut minus = pose.to_vector();
            plus[j] += eps;
            minus[j] -= eps;
            let a = observe(&Pose { x: plus[0], y: plus[1], heading: plus[2] }, &landmark);
            let b = observe(&Pose { x: minus[0], y: minus[1], heading: minus[2] }, &landmark);
            for i in 0..2 {
                assert!(((a[i] - b[i]) / (2.0 * eps) - h[(i, j)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn coincident_landmark_is_singular() {
        let pose = Pose::new(2.0, 3.0, 0.0);
        assert_eq!(meas_jacobian(&pose, &Landmark::new("a", 2.0, 3.0)), Err(Error::Singular));
    }

    #[test]
    fn angles_wrap_into_half_open_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
