//! EKF pose beliefs and the one-step edge transfer.
//!
//! Covariances are carried in the factored form `Σ = B C⁻¹`. Under that
//! factorization a process step acts linearly on the stacked factor `(B; C)`
//! through `[[F, Q F⁻ᵀ], [0, F⁻ᵀ]]` and a measurement through
//! `[[I, 0], [Hᵀ R⁻¹ H, I]]`, so the updates of a whole edge compose into a
//! single 6×6 matrix that is applied once per traversal.
//!
//! Along long, well-observed edges that product grows past 1e10 and `B C⁻¹`
//! loses digits in f64. Each transfer therefore also carries the same map as
//! `Σ ↦ W + Φ Σ (I + J Σ)⁻¹ Φᵀ`, composed step by step with the doubling
//! formulas, and [`apply_transfer`] evaluates that form.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{Matrix2x3, Matrix3, Matrix6, Vector2};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::evanescence::{Landmark, MapModel, PartialAssignment};
use crate::robot::{in_range, meas_jacobian, predict, ControlStep, MotionModel, Pose, SensorModel};

pub fn symmetrize(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: Pose,
    pub cov: Matrix3<f64>,
}

impl GaussianBelief {
    pub fn new(mean: Pose, cov: Matrix3<f64>) -> Self {
        Self {
            mean,
            cov: symmetrize(&cov),
        }
    }

    pub fn positional_cov(&self) -> nalgebra::Matrix2<f64> {
        self.cov.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// `mean ← predict(mean)`, `Σ ← F Σ Fᵀ + Q`.
    pub fn ekf_process(&self, step: &ControlStep, motion: &MotionModel) -> Self {
        let (mean, f) = predict(&self.mean, step);
        Self {
            mean,
            cov: symmetrize(&(f * self.cov * f.transpose() + motion.noise(step))),
        }
    }

    /// Measurement update with the maximum-likelihood observation: the
    /// innovation is zero, so only the covariance changes.
    pub fn ekf_measure(&self, landmark: &Landmark, sensor: &SensorModel) -> Result<Self> {
        let h = meas_jacobian(&self.mean, landmark)?;
        Ok(Self {
            mean: self.mean,
            cov: measured_cov(&self.cov, &h, sensor)?,
        })
    }
}

fn measured_cov(cov: &Matrix3<f64>, h: &Matrix2x3<f64>, sensor: &SensorModel) -> Result<Matrix3<f64>> {
    let pht = cov * h.transpose();
    let s = h * pht + sensor.noise;
    let s_inv = s
        .try_inverse()
        .ok_or(Error::Numerical("innovation covariance is singular"))?;
    Ok(symmetrize(&(cov - pht * s_inv * pht.transpose())))
}

/// One discretized step of a directed edge, linearized at the mean path.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackStep {
    /// Control relative to the edge heading (the first step's turn is zero;
    /// see [`EdgeTrack::controls_from`]).
    pub control: ControlStep,
    /// Mean pose after the step.
    pub pose: Pose,
    pub jacobian: Matrix3<f64>,
    pub noise: Matrix3<f64>,
    /// Landmarks in range of `pose`, ascending, with their measurement
    /// Jacobians at `pose`.
    pub visible: Vec<(usize, Matrix2x3<f64>)>,
}

/// Straight-line traversal of a directed edge, discretized into steps of the
/// motion model's step length (the last step may be shorter).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTrack {
    pub start: Vector2<f64>,
    pub heading: f64,
    pub steps: Vec<TrackStep>,
    /// Every landmark seen on the edge, ascending.
    pub visible: Vec<usize>,
    /// Every landmark seen on the edge in the order it is first seen.
    pub encounter_order: Vec<usize>,
}

impl EdgeTrack {
    pub fn new(
        from: Vector2<f64>,
        to: Vector2<f64>,
        map: &MapModel,
        motion: &MotionModel,
        sensor: &SensorModel,
    ) -> Result<Self> {
        if motion.step_length.is_nan() || motion.step_length <= 0.0 {
            return Err(invalid("motion step length must be positive"));
        }
        let delta = to - from;
        let length = delta.norm();
        let heading = if length > 0.0 { delta.y.atan2(delta.x) } else { 0.0 };
        let count = if length <= 1e-12 {
            0
        } else {
            ((length / motion.step_length) - 1e-9).ceil().max(1.0) as usize
        };

        let mut steps = Vec::with_capacity(count);
        let mut encounter_order: Vec<usize> = Vec::new();
        let mut pose = Pose::new(from.x, from.y, heading);
        for k in 0..count {
            let forward = if k + 1 == count {
                length - motion.step_length * k as f64
            } else {
                motion.step_length
            };
            let control = ControlStep::new(forward, 0.0);
            let (mut next, jacobian) = predict(&pose, &control);
            if k + 1 == count {
                next.x = to.x;
                next.y = to.y;
            }
            let mut visible = Vec::new();
            for (i, landmark) in map.landmarks().iter().enumerate() {
                if in_range(&next, landmark, sensor) {
                    visible.push((i, meas_jacobian(&next, landmark)?));
                    if !encounter_order.contains(&i) {
                        encounter_order.push(i);
                    }
                }
            }
            steps.push(TrackStep {
                control,
                pose: next,
                jacobian,
                noise: motion.noise(&control),
                visible,
            });
            pose = next;
        }
        let mut visible = encounter_order.clone();
        visible.sort_unstable();
        Ok(Self {
            start: from,
            heading,
            steps,
            visible,
            encounter_order,
        })
    }

    /// Mean pose at the end of the edge. A zero-length edge keeps `incoming`.
    pub fn end_pose(&self, incoming: &Pose) -> Pose {
        self.steps.last().map_or(*incoming, |s| s.pose)
    }

    /// Controls that drive a robot arriving with `heading` along the edge:
    /// the heading snaps to the edge direction on the first step.
    pub fn controls_from(&self, heading: f64) -> Vec<ControlStep> {
        self.steps
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let turn = if k == 0 {
                    crate::robot::normalize_angle(self.heading - heading)
                } else {
                    0.0
                };
                ControlStep::new(s.control.forward, turn)
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// The composed covariance update of one edge traversal under a fixed
/// presence assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTransfer {
    pub psi: Matrix6<f64>,
    /// The map of `psi` as `Σ ↦ W + Φ Σ (I + J Σ)⁻¹ Φᵀ`.
    pub riccati: Riccati,
    pub mean_path: Vec<Pose>,
    pub end_mean: Option<Pose>,
}

impl EdgeTransfer {
    pub fn identity() -> Self {
        Self {
            psi: Matrix6::identity(),
            riccati: Riccati::identity(),
            mean_path: Vec::new(),
            end_mean: None,
        }
    }

    /// The transfer of traversing `self` and then `next`.
    pub fn then(&self, next: &EdgeTransfer) -> Result<Self> {
        let mut mean_path = self.mean_path.clone();
        mean_path.extend_from_slice(&next.mean_path);
        Ok(Self {
            psi: next.psi * self.psi,
            riccati: self.riccati.then(&next.riccati)?,
            mean_path,
            end_mean: next.end_mean.or(self.end_mean),
        })
    }
}

/// Motion `phi`, gathered information `info` and gathered noise `noise` of a
/// covariance map `Σ ↦ noise + phi Σ (I + info Σ)⁻¹ phiᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riccati {
    pub phi: Matrix3<f64>,
    pub info: Matrix3<f64>,
    pub noise: Matrix3<f64>,
}

impl Riccati {
    pub fn identity() -> Self {
        Self {
            phi: Matrix3::identity(),
            info: Matrix3::zeros(),
            noise: Matrix3::zeros(),
        }
    }

    pub fn process(f: &Matrix3<f64>, q: &Matrix3<f64>) -> Self {
        Self {
            phi: *f,
            info: Matrix3::zeros(),
            noise: *q,
        }
    }

    pub fn measurement(h: &Matrix2x3<f64>, sensor: &SensorModel) -> Result<Self> {
        let r_inv = sensor
            .noise
            .try_inverse()
            .ok_or(Error::Numerical("sensor noise covariance is singular"))?;
        Ok(Self {
            phi: Matrix3::identity(),
            info: symmetrize(&(h.transpose() * r_inv * h)),
            noise: Matrix3::zeros(),
        })
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Riccati) -> Result<Self> {
        let i = Matrix3::identity();
        let left = (i + self.noise * next.info)
            .try_inverse()
            .ok_or(Error::Numerical("transfer composition is singular"))?;
        // (I + J₂ W₁)⁻¹ = ((I + W₁ J₂)⁻¹)ᵀ for symmetric W₁, J₂
        let phi_left = next.phi * left;
        Ok(Self {
            phi: phi_left * self.phi,
            info: symmetrize(&(self.info + self.phi.transpose() * left.transpose() * next.info * self.phi)),
            noise: symmetrize(&(next.noise + phi_left * self.noise * next.phi.transpose())),
        })
    }

    pub fn apply(&self, cov: &Matrix3<f64>) -> Result<Matrix3<f64>> {
        let denom = (Matrix3::identity() + self.info * cov)
            .try_inverse()
            .ok_or(Error::Numerical("transfer denominator is singular"))?;
        Ok(symmetrize(&(self.noise + self.phi * cov * denom * self.phi.transpose())))
    }
}

pub fn process_block(f: &Matrix3<f64>, q: &Matrix3<f64>) -> Result<Matrix6<f64>> {
    let f_inv_t = f
        .try_inverse()
        .ok_or(Error::Numerical("process Jacobian is singular"))?
        .transpose();
    let mut psi = Matrix6::zeros();
    psi.fixed_view_mut::<3, 3>(0, 0).copy_from(f);
    psi.fixed_view_mut::<3, 3>(0, 3).copy_from(&(q * f_inv_t));
    psi.fixed_view_mut::<3, 3>(3, 3).copy_from(&f_inv_t);
    Ok(psi)
}

pub fn measurement_block(h: &Matrix2x3<f64>, sensor: &SensorModel) -> Result<Matrix6<f64>> {
    let r_inv = sensor
        .noise
        .try_inverse()
        .ok_or(Error::Numerical("sensor noise covariance is singular"))?;
    let mut psi = Matrix6::identity();
    psi.fixed_view_mut::<3, 3>(3, 0).copy_from(&(h.transpose() * r_inv * h));
    Ok(psi)
}

/// Composes every step of `track`, measuring the landmarks `presence` marks
/// present. `presence` must assign every landmark visible on the track.
pub fn build_edge_transfer(
    track: &EdgeTrack,
    presence: &PartialAssignment,
    sensor: &SensorModel,
) -> Result<EdgeTransfer> {
    let mut psi = Matrix6::identity();
    let mut riccati = Riccati::identity();
    for step in &track.steps {
        psi = process_block(&step.jacobian, &step.noise)? * psi;
        riccati = riccati.then(&Riccati::process(&step.jacobian, &step.noise))?;
        for (landmark, h) in &step.visible {
            match presence.get(*landmark) {
                Some(true) => {
                    psi = measurement_block(h, sensor)? * psi;
                    riccati = riccati.then(&Riccati::measurement(h, sensor)?)?;
                }
                Some(false) => {}
                None => {
                    return Err(invalid(format!(
                        "presence of landmark {landmark} is required to build the edge transfer"
                    )))
                }
            }
        }
    }
    Ok(EdgeTransfer {
        psi,
        riccati,
        mean_path: track.steps.iter().map(|s| s.pose).collect(),
        end_mean: track.steps.last().map(|s| s.pose),
    })
}

/// `(B; C) = ψ (Σ; I)`, returns `B C⁻¹`, evaluated through the equivalent
/// [`Riccati`] form.
pub fn apply_transfer(transfer: &EdgeTransfer, cov: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    transfer.riccati.apply(cov)
}

/// [`apply_transfer`] computed literally from the 6×6 factor product.
pub fn apply_psi(psi: &Matrix6<f64>, cov: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let b = psi.fixed_view::<3, 3>(0, 0) * cov + psi.fixed_view::<3, 3>(0, 3);
    let c = psi.fixed_view::<3, 3>(3, 0) * cov + psi.fixed_view::<3, 3>(3, 3);
    let c_inv = c
        .try_inverse()
        .ok_or(Error::Numerical("transfer denominator is singular"))?;
    Ok(symmetrize(&(b * c_inv)))
}

/// Edge transfers keyed by directed edge and the presence bits of the
/// landmarks visible on that edge.
#[derive(Debug, Default)]
pub struct TransferCache {
    entries: BTreeMap<(usize, PartialAssignment), Arc<EdgeTransfer>>,
    hits: usize,
    misses: usize,
}

impl TransferCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// `presence` may carry bits for landmarks off the edge; they are ignored.
    pub fn get_or_build(
        &mut self,
        edge: usize,
        track: &EdgeTrack,
        presence: &PartialAssignment,
        sensor: &SensorModel,
    ) -> Result<Arc<EdgeTransfer>> {
        let key = (edge, presence.restricted_to(&track.visible));
        if let Some(t) = self.entries.get(&key) {
            self.hits += 1;
            return Ok(Arc::clone(t));
        }
        self.misses += 1;
        let transfer = Arc::new(build_edge_transfer(track, &key.1, sensor)?);
        self.entries.insert(key, Arc::clone(&transfer));
        Ok(transfer)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn misses(&self) -> usize {
        self.misses
    }
}
