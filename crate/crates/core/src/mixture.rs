//! Rao-Blackwellized Gaussian-mixture belief over pose and landmark presence.
//!
//! Every particle stands for a consistent set: all configurations that agree
//! with its partial assignment. Its weight is the probability of that set and
//! its Gaussian is the pose belief conditioned on it. All particles share the
//! mean, because observations are taken at the shared mean; only covariances
//! and weights differ.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix2, Matrix3};
use num_traits::Float;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::evanescence::{ln_add_exp, Lepd, MapModel, PartialAssignment};
use crate::gaussian::{apply_transfer, EdgeTrack, EdgeTransfer, GaussianBelief, TransferCache};
use crate::robot::{ControlStep, MotionModel, Pose, SensorModel};
use crate::sampling::sample_without_replacement_ln;

/// Children lighter than this are dropped when a particle splits.
pub const MIN_CHILD_WEIGHT: f64 = 1e-15;

/// Landmark budget of [`exact_mixture`].
pub const MAX_EXACT_LANDMARKS: usize = 12;

/// Most angular nodes the disk-mass quadrature uses over [0, 2π).
pub const DISK_QUADRATURE_POINTS: usize = 512;

/// Successive quadrature levels agreeing this closely end the refinement.
const DISK_QUADRATURE_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum CovState {
    Realized(Matrix3<f64>),
    /// `base` followed by transfers not yet applied.
    Deferred {
        base: Matrix3<f64>,
        pending: Vec<Arc<EdgeTransfer>>,
    },
}

impl CovState {
    pub fn realize(&self) -> Result<Matrix3<f64>> {
        match self {
            CovState::Realized(cov) => Ok(*cov),
            CovState::Deferred { base, pending } => pending
                .iter()
                .try_fold(*base, |cov, t| apply_transfer(t, &cov)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub assignment: PartialAssignment,
    pub log_weight: f64,
    pub cov: CovState,
}

impl Particle {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }
}

/// Disk of the given radius around the belief mean, in position space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSpec {
    radius: f64,
}

impl RegionSpec {
    pub fn new(radius: f64) -> Result<Self> {
        if radius > 0.0 && radius.is_finite() {
            Ok(Self { radius })
        } else {
            Err(invalid("region radius must be positive and finite"))
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureBelief {
    mean: Pose,
    particles: Vec<Particle>,
}

impl MixtureBelief {
    pub fn from_gaussian(belief: &GaussianBelief) -> Self {
        Self {
            mean: belief.mean,
            particles: vec![Particle {
                assignment: PartialAssignment::new(),
                log_weight: 0.0,
                cov: CovState::Realized(belief.cov),
            }],
        }
    }

    pub fn from_parts(mean: Pose, particles: Vec<Particle>) -> Result<Self> {
        if particles.is_empty() {
            return Err(invalid("a mixture needs at least one particle"));
        }
        for (i, p) in particles.iter().enumerate() {
            if particles[..i].iter().any(|q| q.assignment == p.assignment) {
                return Err(invalid("particle assignments must be distinct"));
            }
        }
        Ok(Self { mean, particles })
    }

    pub fn mean(&self) -> &Pose {
        &self.mean
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.particles.iter().map(Particle::weight).collect()
    }

    /// Component `i` as a plain Gaussian.
    pub fn component(&self, i: usize) -> Result<GaussianBelief> {
        Ok(GaussianBelief::new(self.mean, self.particles[i].cov.realize()?))
    }

    pub fn realize(&self) -> Result<Self> {
        let particles = self
            .particles
            .iter()
            .map(|p| {
                Ok(Particle {
                    cov: CovState::Realized(p.cov.realize()?),
                    ..p.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mean: self.mean,
            particles,
        })
    }

    /// EKF process update of every component; weights are untouched.
    pub fn process_update(&self, step: &ControlStep, motion: &MotionModel) -> Result<Self> {
        let mut mean = self.mean;
        let mut particles = Vec::with_capacity(self.particles.len());
        for p in &self.particles {
            let next = GaussianBelief {
                mean: self.mean,
                cov: p.cov.realize()?,
            }
            .ekf_process(step, motion);
            mean = next.mean;
            particles.push(Particle {
                cov: CovState::Realized(next.cov),
                ..p.clone()
            });
        }
        Ok(Self { mean, particles })
    }

    /// Observation of landmark `landmark` at the shared mean. Particles that
    /// have not yet conditioned on the landmark split into an absent child
    /// (unchanged) and a present child (EKF-updated).
    pub fn measurement_update(
        &self,
        landmark: usize,
        map: &MapModel,
        sensor: &SensorModel,
        lepd: &Lepd,
    ) -> Result<Self> {
        self.measurement_update_with(landmark, map, sensor, lepd, MIN_CHILD_WEIGHT)
    }

    fn measurement_update_with(
        &self,
        landmark: usize,
        map: &MapModel,
        sensor: &SensorModel,
        lepd: &Lepd,
        min_weight: f64,
    ) -> Result<Self> {
        let lm = map.get(landmark).ok_or(Error::Dimension {
            expected: map.len(),
            got: landmark + 1,
        })?;
        if !crate::robot::in_range(&self.mean, lm, sensor) {
            return Ok(self.clone());
        }
        let measured = |p: &Particle| -> Result<Matrix3<f64>> {
            Ok(GaussianBelief {
                mean: self.mean,
                cov: p.cov.realize()?,
            }
            .ekf_measure(lm, sensor)?
            .cov)
        };
        let mut particles = Vec::with_capacity(self.particles.len() * 2);
        let mut dropped = false;
        for p in &self.particles {
            match p.assignment.get(landmark) {
                Some(false) => particles.push(p.clone()),
                Some(true) => particles.push(Particle {
                    cov: CovState::Realized(measured(p)?),
                    ..p.clone()
                }),
                None => {
                    let q = lepd.conditional(landmark, &p.assignment)?;
                    let absent = p.log_weight + (-q).ln_1p();
                    let present = p.log_weight + q.ln();
                    if absent.exp() >= min_weight && absent > f64::neg_infinity() {
                        particles.push(Particle {
                            assignment: p.assignment.with(landmark, false),
                            log_weight: absent,
                            cov: p.cov.clone(),
                        });
                    } else {
                        dropped = true;
                    }
                    if present.exp() >= min_weight && present > f64::neg_infinity() {
                        particles.push(Particle {
                            assignment: p.assignment.with(landmark, true),
                            log_weight: present,
                            cov: CovState::Realized(measured(p)?),
                        });
                    } else {
                        dropped = true;
                    }
                }
            }
        }
        if particles.is_empty() {
            return Err(Error::Numerical("every mixture component was pruned"));
        }
        if dropped {
            normalize(&mut particles);
        }
        Ok(Self {
            mean: self.mean,
            particles,
        })
    }

    /// Traverses a directed edge: splits on every landmark seen along the
    /// edge, keeps at most `cap` particles, then applies the cached one-step
    /// transfer of each survivor's presence bits.
    #[allow(clippy::too_many_arguments)]
    pub fn propagate_edge<R: Rng + ?Sized>(
        &self,
        edge: usize,
        track: &EdgeTrack,
        lepd: &Lepd,
        sensor: &SensorModel,
        cap: usize,
        rng: &mut R,
        cache: &mut TransferCache,
    ) -> Result<Self> {
        if cap < 1 {
            return Err(invalid("particle budget must be at least 1"));
        }
        let offset = (track.start - self.mean.position()).norm();
        if offset > 1e-9 * (1.0 + track.start.norm()) {
            return Err(invalid("edge does not start at the belief mean"));
        }

        let mut children = Vec::with_capacity(self.particles.len());
        let mut dropped = false;
        for p in &self.particles {
            let base = p.cov.realize()?;
            let mut frontier = vec![(p.assignment.clone(), p.log_weight)];
            for &landmark in &track.encounter_order {
                if p.assignment.get(landmark).is_some() {
                    continue;
                }
                let mut next = Vec::with_capacity(frontier.len() * 2);
                for (assignment, lw) in frontier {
                    let q = lepd.conditional(landmark, &assignment)?;
                    for (present, child_lw) in [(false, lw + (-q).ln_1p()), (true, lw + q.ln())] {
                        if child_lw > f64::neg_infinity() && child_lw.exp() >= MIN_CHILD_WEIGHT {
                            next.push((assignment.with(landmark, present), child_lw));
                        } else {
                            dropped = true;
                        }
                    }
                }
                frontier = next;
            }
            children.extend(frontier.into_iter().map(|(assignment, log_weight)| Particle {
                assignment,
                log_weight,
                cov: CovState::Deferred {
                    base,
                    pending: Vec::new(),
                },
            }));
        }
        if children.is_empty() {
            return Err(Error::Numerical("every mixture component was pruned"));
        }
        if dropped {
            normalize(&mut children);
        }

        let mut particles = if children.len() > cap {
            let ln_weights: Vec<f64> = children.iter().map(|p| p.log_weight).collect();
            let keep = sample_without_replacement_ln(&ln_weights, cap, rng);
            let mut kept: Vec<Particle> = children
                .into_iter()
                .enumerate()
                .filter(|(i, _)| keep.binary_search(i).is_ok())
                .map(|(_, p)| p)
                .collect();
            normalize(&mut kept);
            kept
        } else {
            children
        };
        for p in &mut particles {
            let transfer = cache.get_or_build(edge, track, &p.assignment, sensor)?;
            if let CovState::Deferred { base, pending } = &p.cov {
                let cov = pending
                    .iter()
                    .chain(core::iter::once(&transfer))
                    .try_fold(*base, |cov, t| apply_transfer(t, &cov))?;
                p.cov = CovState::Realized(cov);
            }
        }
        Ok(Self {
            mean: track.end_pose(&self.mean),
            particles,
        })
    }

    /// Expected probability mass inside the disk around the mean.
    pub fn mass(&self, region: &RegionSpec) -> Result<f64> {
        let mut total = 0.0;
        for p in &self.particles {
            let cov = p.cov.realize()?;
            total += p.weight() * gauss_disk_mass(&cov.fixed_view::<2, 2>(0, 0).into_owned(), region.radius())?;
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// Weighted trace of the component covariances.
    pub fn weighted_trace(&self) -> Result<f64> {
        let mut total = 0.0;
        for p in &self.particles {
            total += p.weight() * p.cov.realize()?.trace();
        }
        Ok(total)
    }

    /// Keeps `n` particles drawn without replacement by weight and
    /// renormalizes the survivors.
    pub fn downsample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Self> {
        if n < 1 {
            return Err(invalid("downsample size must be at least 1"));
        }
        if self.particles.len() <= n {
            return Ok(self.clone());
        }
        let ln_weights: Vec<f64> = self.particles.iter().map(|p| p.log_weight).collect();
        let keep = sample_without_replacement_ln(&ln_weights, n, rng);
        let mut particles: Vec<Particle> = keep.into_iter().map(|i| self.particles[i].clone()).collect();
        normalize(&mut particles);
        Ok(Self {
            mean: self.mean,
            particles,
        })
    }
}

fn normalize(particles: &mut [Particle]) {
    let total = particles
        .iter()
        .fold(f64::neg_infinity(), |acc, p| ln_add_exp(acc, p.log_weight));
    for p in particles {
        p.log_weight -= total;
    }
}

/// Mass of a zero-mean bivariate normal inside the origin-centred disk of
/// radius `radius`.
///
/// In the principal axes (λ₁, λ₂) the radial integral has a closed form,
/// leaving `(2π√(λ₁λ₂))⁻¹ ∫ (1 − exp(−ρ² s(φ)/2)) / s(φ) dφ` with
/// `s(φ) = cos²φ/λ₁ + sin²φ/λ₂`, integrated by the periodic trapezoid rule
/// with the node count doubled until successive levels agree. The integrand
/// has period π and is even, so a quarter of the nodes suffice.
pub fn gauss_disk_mass(cov: &Matrix2<f64>, radius: f64) -> Result<f64> {
    if !radius.is_finite() || radius < 0.0 {
        return Err(invalid("disk radius must be finite and nonnegative"));
    }
    let (a, d) = (cov[(0, 0)], cov[(1, 1)]);
    let b = 0.5 * (cov[(0, 1)] + cov[(1, 0)]);
    let scale = a.abs().max(d.abs()).max(f64::min_positive_value());
    if (cov[(0, 1)] - cov[(1, 0)]).abs() > 1e-9 * scale || !(a.is_finite() && d.is_finite() && b.is_finite()) {
        return Err(invalid("disk mass needs a symmetric covariance"));
    }
    let half_gap = (0.5 * (a - d)).hypot(b);
    let l1 = 0.5 * (a + d) + half_gap;
    let det = a * d - b * b;
    if !(l1 > 0.0 && det > 0.0) {
        return Err(invalid("disk mass needs a positive definite covariance"));
    }
    let l2 = det / l1;
    if radius == 0.0 {
        return Ok(0.0);
    }

    let c = 0.5 * radius * radius;
    let integrand = |cos2: f64| {
        let s = cos2 / l1 + (1.0 - cos2) / l2;
        -(-c * s).exp_m1() / s
    };
    let norm = (l1 * l2).sqrt();
    let ends = integrand(1.0) + integrand(0.0);
    // n nodes φ_k = 2πk/n; cos²φ_k = (1 + cos 2φ_k) / 2. Doubling n adds the
    // odd k of the finer grid, whose 2φ angles are stepped by rotation.
    let mut n = 8usize;
    let mut interior = integrand(0.5);
    let mut mass = (ends + 2.0 * interior) / ((n / 2) as f64 * norm);
    // (sin, cos) of the 4π/n step between new nodes; halved each level
    let (mut rs, mut rc) = (1.0f64, 0.0f64);
    while n < DISK_QUADRATURE_POINTS {
        let half_c = (0.5 * (1.0 + rc)).sqrt();
        let (first_s, first_c) = (rs / (2.0 * half_c), half_c);
        let (mut sn, mut cs) = (first_s, first_c);
        for _ in 0..n / 4 {
            interior += integrand(0.5 * (1.0 + cs));
            let next_c = cs * rc - sn * rs;
            sn = sn * rc + cs * rs;
            cs = next_c;
        }
        (rs, rc) = (first_s, first_c);
        n *= 2;
        let refined = (ends + 2.0 * interior) / ((n / 2) as f64 * norm);
        let change = (refined - mass).abs();
        mass = refined;
        if n >= 32 && change <= DISK_QUADRATURE_TOLERANCE {
            break;
        }
    }
    Ok(mass.clamp(0.0, 1.0))
}

/// The unbounded mixture after traversing `tracks` from `start`, computed step
/// by step with [`MixtureBelief::process_update`] and
/// [`MixtureBelief::measurement_update`]. Only impossible consistent sets are
/// dropped.
pub fn exact_mixture(
    start: &GaussianBelief,
    tracks: &[&EdgeTrack],
    map: &MapModel,
    lepd: &Lepd,
    motion: &MotionModel,
    sensor: &SensorModel,
) -> Result<MixtureBelief> {
    let mut seen: Vec<usize> = tracks.iter().flat_map(|t| t.visible.iter().copied()).collect();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() > MAX_EXACT_LANDMARKS {
        return Err(Error::Capacity {
            what: "landmarks encountered by an exact mixture",
            got: seen.len(),
            max: MAX_EXACT_LANDMARKS,
        });
    }
    let mut belief = MixtureBelief::from_gaussian(start);
    for track in tracks {
        let controls = track.controls_from(belief.mean.heading);
        for (step, control) in track.steps.iter().zip(controls) {
            belief = belief.process_update(&control, motion)?;
            for (landmark, _) in &step.visible {
                belief = belief.measurement_update_with(*landmark, map, sensor, lepd, 0.0)?;
            }
        }
        belief.mean = track.end_pose(&belief.mean);
    }
    Ok(belief)
}
