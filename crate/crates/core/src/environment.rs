//! Random environments: landmark layouts, their evanescence model, and the
//! grid roadmap the robot plans over.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector2};
use rand::Rng;

use crate::error::{invalid, Result};
use crate::evanescence::{Landmark, Lepd, MapModel};
use crate::gaussian::GaussianBelief;
use crate::roadmap::{gen_grid_roadmap, Roadmap};
use crate::robot::Pose;

#[derive(Debug, Clone, PartialEq)]
pub enum SpatialKind {
    /// `count` landmarks uniform over the whole region.
    Diffuse { count: usize },
    /// `clusters` centers uniform over the region (kept a half box away from
    /// its border), `per_cluster` landmarks uniform in the axis-aligned square
    /// of side `box_size` around each center.
    Clustered {
        clusters: usize,
        per_cluster: usize,
        box_size: f64,
    },
}

/// How landmarks share a latent wipe variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentGrouping {
    /// One latent for the whole map.
    Single,
    /// Landmark `i` belongs to class `i % classes`; one latent per class.
    Classes(usize),
    /// One latent per spatial cluster (diffuse maps fall back to `Single`).
    Clusters,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvanescenceKind {
    /// Consecutive landmarks form groups of `group_size` (the last group may
    /// be smaller); exactly one per group is present, uniformly.
    Mutex { group_size: usize },
    Latent {
        p_z: f64,
        p_l: f64,
        grouping: LatentGrouping,
    },
    Independent { p_l: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    /// Side of the square region `[0, extent]²`.
    pub extent: f64,
    pub spacing: f64,
    pub spatial: SpatialKind,
    pub evanescence: EvanescenceKind,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("{name} must be in [0, 1], got {p}")));
    }
    Ok(())
}

impl EnvironmentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(invalid("extent must be positive"));
        }
        match self.spatial {
            SpatialKind::Diffuse { count } if count < 1 => {
                return Err(invalid("landmark count must be at least 1"))
            }
            SpatialKind::Clustered {
                clusters,
                per_cluster,
                box_size,
            } => {
                if clusters < 1 || per_cluster < 1 {
                    return Err(invalid("cluster count and size must be at least 1"));
                }
                if !(box_size > 0.0 && box_size <= self.extent) {
                    return Err(invalid("cluster box must be positive and fit the region"));
                }
            }
            _ => {}
        }
        match self.evanescence {
            EvanescenceKind::Mutex { group_size } if group_size < 1 => {
                return Err(invalid("group size must be at least 1"))
            }
            EvanescenceKind::Latent { p_z, p_l, grouping } => {
                check_probability("p_z", p_z)?;
                check_probability("p_l", p_l)?;
                if grouping == LatentGrouping::Classes(0) {
                    return Err(invalid("class count must be at least 1"));
                }
            }
            EvanescenceKind::Independent { p_l } => check_probability("p_l", p_l)?,
            _ => {}
        }
        gen_grid_roadmap(self.extent, self.spacing).map(|_| ())
    }

    pub fn landmark_count(&self) -> usize {
        match self.spatial {
            SpatialKind::Diffuse { count } => count,
            SpatialKind::Clustered {
                clusters, per_cluster, ..
            } => clusters * per_cluster,
        }
    }
}

/// Everything one planning problem needs besides the robot models.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub map: MapModel,
    pub lepd: Lepd,
    pub roadmap: Roadmap,
    pub start: usize,
    pub goal: usize,
}

impl Environment {
    pub fn new(map: MapModel, lepd: Lepd, roadmap: Roadmap, start: usize, goal: usize) -> Result<Self> {
        if lepd.landmark_count() != map.len() {
            return Err(invalid(format!(
                "evanescence model covers {} landmarks but the map has {}",
                lepd.landmark_count(),
                map.len()
            )));
        }
        if start >= roadmap.node_count() || goal >= roadmap.node_count() {
            return Err(invalid("start and goal must be roadmap nodes"));
        }
        Ok(Self {
            map,
            lepd,
            roadmap,
            start,
            goal,
        })
    }

    /// Belief at the start node with the given covariance, heading zero.
    pub fn start_belief(&self, cov: Matrix3<f64>) -> GaussianBelief {
        let p = self.roadmap.position(self.start);
        GaussianBelief::new(Pose::new(p.x, p.y, 0.0), cov)
    }

    pub fn goal_reachable(&self) -> bool {
        self.roadmap.is_reachable(self.start, self.goal)
    }
}

fn groups_of(indices: impl Iterator<Item = usize>, size: usize) -> Vec<Vec<usize>> {
    let all: Vec<usize> = indices.collect();
    all.chunks(size).map(|c| c.to_vec()).collect()
}

/// Samples a landmark layout and builds its LEPD.
pub fn gen_environment<R: Rng + ?Sized>(spec: &EnvironmentSpec, rng: &mut R) -> Result<(MapModel, Lepd)> {
    spec.validate()?;
    let extent = spec.extent;
    let n = spec.landmark_count();
    let mut positions: Vec<Vector2<f64>> = Vec::with_capacity(n);
    let mut cluster_of: Vec<usize> = Vec::with_capacity(n);
    match spec.spatial {
        SpatialKind::Diffuse { count } => {
            for _ in 0..count {
                positions.push(Vector2::new(
                    rng.random::<f64>() * extent,
                    rng.random::<f64>() * extent,
                ));
                cluster_of.push(0);
            }
        }
        SpatialKind::Clustered {
            clusters,
            per_cluster,
            box_size,
        } => {
            let half = box_size / 2.0;
            for c in 0..clusters {
                let center = Vector2::new(
                    half + rng.random::<f64>() * (extent - box_size),
                    half + rng.random::<f64>() * (extent - box_size),
                );
                for _ in 0..per_cluster {
                    positions.push(Vector2::new(
                        center.x - half + rng.random::<f64>() * box_size,
                        center.y - half + rng.random::<f64>() * box_size,
                    ));
                    cluster_of.push(c);
                }
            }
        }
    }
    let landmarks = positions
        .iter()
        .enumerate()
        .map(|(i, p)| Landmark::new(format!("l{i}"), p.x, p.y))
        .collect();
    let map = MapModel::new(landmarks)?;

    let lepd = match spec.evanescence {
        EvanescenceKind::Mutex { group_size } => Lepd::mutex_uniform(n, groups_of(0..n, group_size))?,
        EvanescenceKind::Independent { p_l } => Lepd::independent(alloc::vec![p_l; n])?,
        EvanescenceKind::Latent { p_z, p_l, grouping } => {
            let groups: Vec<Vec<usize>> = match grouping {
                LatentGrouping::Single => alloc::vec![(0..n).collect()],
                LatentGrouping::Classes(k) => (0..k.min(n))
                    .map(|c| (c..n).step_by(k).collect())
                    .collect(),
                LatentGrouping::Clusters => {
                    let count = cluster_of.iter().copied().max().map_or(0, |m| m + 1);
                    (0..count)
                        .map(|c| (0..n).filter(|&i| cluster_of[i] == c).collect())
                        .collect()
                }
            };
            Lepd::latent_groups(n, groups, p_z, p_l)?
        }
    };
    Ok((map, lepd))
}

/// The four simulated environment types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Archetype {
    /// Diffuse landmarks, each present independently.
    Independent,
    /// Diffuse landmarks in mutually exclusive triples.
    Mutex,
    /// Diffuse landmarks in classes; each class shares a wipe event.
    Semantic,
    /// Clustered landmarks; each cluster shares a wipe event.
    Spatial,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [
        Archetype::Independent,
        Archetype::Mutex,
        Archetype::Semantic,
        Archetype::Spatial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Independent => "independent",
            Archetype::Mutex => "mutex",
            Archetype::Semantic => "semantic",
            Archetype::Spatial => "spatial",
        }
    }

    /// Environments of this type in the default batch.
    pub fn default_count(self) -> usize {
        match self {
            Archetype::Independent => 10,
            Archetype::Mutex => 6,
            Archetype::Semantic => 30,
            Archetype::Spatial => 20,
        }
    }

    /// Default spec on the 100 m grid with 10 m spacing.
    pub fn spec(self, p_z: f64, p_l: f64) -> EnvironmentSpec {
        let (spatial, evanescence) = match self {
            Archetype::Independent => (SpatialKind::Diffuse { count: 12 }, EvanescenceKind::Independent { p_l }),
            Archetype::Mutex => (SpatialKind::Diffuse { count: 12 }, EvanescenceKind::Mutex { group_size: 3 }),
            Archetype::Semantic => (
                SpatialKind::Diffuse { count: 12 },
                EvanescenceKind::Latent {
                    p_z,
                    p_l,
                    grouping: LatentGrouping::Classes(3),
                },
            ),
            Archetype::Spatial => (
                SpatialKind::Clustered {
                    clusters: 4,
                    per_cluster: 3,
                    box_size: 10.0,
                },
                EvanescenceKind::Latent {
                    p_z,
                    p_l,
                    grouping: LatentGrouping::Clusters,
                },
            ),
        };
        EnvironmentSpec {
            extent: 100.0,
            spacing: 10.0,
            spatial,
            evanescence,
        }
    }
}

impl core::str::FromStr for Archetype {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| invalid(format!("unknown archetype {s:?}")))
    }
}

/// Grid roadmap for `spec` with start and goal at opposite corners.
pub fn corner_environment(spec: &EnvironmentSpec, map: MapModel, lepd: Lepd) -> Result<Environment> {
    let roadmap = gen_grid_roadmap(spec.extent, spec.spacing)?;
    let goal = roadmap.node_count() - 1;
    Environment::new(map, lepd, roadmap, 0, goal)
}
