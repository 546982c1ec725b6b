//! Roadmap search over beliefs.
//!
//! All planners share one breadth-first search with per-node dominance
//! pruning: an arrival at a node survives only if its uncertainty score beats
//! the best earlier arrival there by more than the dominance tolerance. The
//! objective is terminal only: maximize the probability mass near the goal.
//!
//! * [`plan_brm`]: single Gaussian belief under one fixed configuration (the
//!   optimistic planner uses all-present, the privileged one the true
//!   configuration).
//! * [`plan_brule`]: mixture belief over consistent sets with a particle cap.
//! * [`plan_brule_e`]: BRM per sampled configuration, then the candidate path
//!   with the best mean goal mass over the same samples.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::evanescence::{Configuration, Lepd, MapModel, PartialAssignment};
use crate::gaussian::{apply_transfer, EdgeTrack, GaussianBelief, TransferCache};
use crate::mixture::{gauss_disk_mass, MixtureBelief, RegionSpec};
use crate::robot::{MotionModel, SensorModel};
use crate::roadmap::Roadmap;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Models {
    pub motion: MotionModel,
    pub sensor: SensorModel,
}

/// Scalar uncertainty used for dominance pruning and goal selection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum UncertaintyMetric {
    /// Expected probability mass within the region radius (higher is better).
    #[default]
    Mass,
    /// Weighted covariance trace (lower is better).
    Trace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Particle budget for the mixture planner.
    pub max_particles: usize,
    pub region_radius: f64,
    pub dominance_tolerance: f64,
    /// Maximum path length in edges; `None` uses four times the roadmap
    /// diameter.
    pub depth_limit: Option<usize>,
    /// Configurations drawn when a path is evaluated by sampling.
    pub eval_samples: usize,
    pub metric: UncertaintyMetric,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            max_particles: 100,
            region_radius: 1.0,
            dominance_tolerance: 1e-6,
            depth_limit: None,
            eval_samples: 1000,
            metric: UncertaintyMetric::Mass,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_particles < 1 {
            return Err(invalid("max_particles must be at least 1"));
        }
        RegionSpec::new(self.region_radius)?;
        if self.dominance_tolerance.is_nan() || self.dominance_tolerance < 0.0 {
            return Err(invalid("dominance_tolerance must be nonnegative"));
        }
        if self.eval_samples < 1 {
            return Err(invalid("eval_samples must be at least 1"));
        }
        Ok(())
    }

    pub fn region(&self) -> Result<RegionSpec> {
        RegionSpec::new(self.region_radius)
    }
}

/// Node sequence from start to goal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    nodes: Vec<usize>,
}

impl Path {
    pub fn new(nodes: Vec<usize>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(invalid("a path needs at least one node"));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn start(&self) -> usize {
        self.nodes[0]
    }

    pub fn goal(&self) -> usize {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn visits(&self, node: usize) -> bool {
        self.nodes.contains(&node)
    }

    /// Directed edge ids along the path.
    pub fn directed_edges(&self, roadmap: &Roadmap) -> Result<Vec<usize>> {
        self.nodes
            .windows(2)
            .map(|w| {
                if w[0] >= roadmap.node_count() || w[1] >= roadmap.node_count() {
                    return Err(invalid(format!("path references missing node {}", w[0].max(w[1]))));
                }
                roadmap
                    .directed_edge(w[0], w[1])
                    .ok_or_else(|| invalid(format!("nodes {} and {} are not adjacent", w[0], w[1])))
            })
            .collect()
    }

    /// Total ordering for ties: fewer edges, then lexicographic node order.
    fn tie_key(&self) -> (usize, &[usize]) {
        (self.nodes.len(), &self.nodes)
    }
}

/// A planner's answer and its own score of the goal belief.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub path: Path,
    pub score: f64,
}

/// Roadmap, map and models with every directed edge discretized once.
#[derive(Debug, Clone)]
pub struct PlanningContext<'a> {
    pub roadmap: &'a Roadmap,
    pub map: &'a MapModel,
    pub models: &'a Models,
    tracks: Vec<EdgeTrack>,
    diameter: usize,
}

impl<'a> PlanningContext<'a> {
    pub fn new(roadmap: &'a Roadmap, map: &'a MapModel, models: &'a Models) -> Result<Self> {
        let mut tracks = Vec::with_capacity(2 * roadmap.edge_count());
        for d in 0..2 * roadmap.edge_count() {
            let (a, b) = roadmap.endpoints(d);
            tracks.push(EdgeTrack::new(
                roadmap.position(a),
                roadmap.position(b),
                map,
                &models.motion,
                &models.sensor,
            )?);
        }
        Ok(Self {
            roadmap,
            map,
            models,
            tracks,
            diameter: roadmap.diameter(),
        })
    }

    pub fn track(&self, directed: usize) -> &EdgeTrack {
        &self.tracks[directed]
    }

    pub fn diameter(&self) -> usize {
        self.diameter
    }

    fn depth_limit(&self, pcfg: &PlannerConfig) -> Result<usize> {
        let limit = pcfg.depth_limit.unwrap_or(4 * self.diameter);
        if limit < self.diameter {
            return Err(invalid(format!(
                "depth limit {limit} is below the roadmap diameter {}",
                self.diameter
            )));
        }
        Ok(limit)
    }

    fn check_endpoints(&self, belief: &GaussianBelief, start: usize, goal: usize) -> Result<()> {
        let n = self.roadmap.node_count();
        if start >= n || goal >= n {
            return Err(invalid(format!("start {start} or goal {goal} is not a roadmap node")));
        }
        let p = self.roadmap.position(start);
        if (belief.mean.position() - p).norm() > 1e-9 * (1.0 + p.norm()) {
            return Err(invalid("start belief mean is not at the start node"));
        }
        Ok(())
    }
}

struct SearchNode {
    node: usize,
    parent: Option<usize>,
    depth: usize,
}

fn search<B>(
    ctx: &PlanningContext<'_>,
    initial: B,
    start: usize,
    goal: usize,
    pcfg: &PlannerConfig,
    mut expand: impl FnMut(&B, usize) -> Result<B>,
    score: impl Fn(&B) -> Result<f64>,
) -> Result<Plan> {
    let depth_limit = ctx.depth_limit(pcfg)?;
    let tolerance = pcfg.dominance_tolerance;
    let mut best = alloc::vec![f64::neg_infinity(); ctx.roadmap.node_count()];
    let mut arena = alloc::vec![SearchNode {
        node: start,
        parent: None,
        depth: 0,
    }];
    let initial_score = score(&initial)?;
    best[start] = initial_score;
    let mut at_goal = (start == goal).then_some((0usize, initial_score));
    let mut queue = VecDeque::new();
    queue.push_back((0usize, initial, initial_score));

    while let Some((idx, belief, s)) = queue.pop_front() {
        let (node, depth) = (arena[idx].node, arena[idx].depth);
        // a strictly better arrival has been recorded since this one
        if s < best[node] || depth >= depth_limit {
            continue;
        }
        for &(next, edge) in ctx.roadmap.neighbors(node) {
            let child = expand(&belief, edge)?;
            let cs = score(&child)?;
            if cs > best[next] + tolerance {
                best[next] = cs;
                arena.push(SearchNode {
                    node: next,
                    parent: Some(idx),
                    depth: depth + 1,
                });
                let child_idx = arena.len() - 1;
                if next == goal {
                    at_goal = Some((child_idx, cs));
                }
                queue.push_back((child_idx, child, cs));
            }
        }
    }

    let (mut idx, score) = at_goal.ok_or(Error::NoPath { start, goal })?;
    let mut nodes = alloc::vec![arena[idx].node];
    while let Some(parent) = arena[idx].parent {
        nodes.push(arena[parent].node);
        idx = parent;
    }
    nodes.reverse();
    Ok(Plan {
        path: Path { nodes },
        score,
    })
}

fn gaussian_score(belief: &GaussianBelief, pcfg: &PlannerConfig) -> Result<f64> {
    match pcfg.metric {
        UncertaintyMetric::Mass => gauss_disk_mass(&belief.positional_cov(), pcfg.region_radius),
        UncertaintyMetric::Trace => Ok(-belief.cov.trace()),
    }
}

fn advance_gaussian(
    ctx: &PlanningContext<'_>,
    belief: &GaussianBelief,
    edge: usize,
    presence: &PartialAssignment,
    cache: &mut TransferCache,
) -> Result<GaussianBelief> {
    let track = ctx.track(edge);
    let transfer = cache.get_or_build(edge, track, presence, &ctx.models.sensor)?;
    Ok(GaussianBelief {
        mean: track.end_pose(&belief.mean),
        cov: apply_transfer(&transfer, &belief.cov)?,
    })
}

/// Belief roadmap search with a single Gaussian under a known configuration.
pub fn plan_brm(
    ctx: &PlanningContext<'_>,
    config: &Configuration,
    start_belief: &GaussianBelief,
    start: usize,
    goal: usize,
    pcfg: &PlannerConfig,
    cache: &mut TransferCache,
) -> Result<Plan> {
    pcfg.validate()?;
    ctx.check_endpoints(start_belief, start, goal)?;
    if config.len() != ctx.map.len() {
        return Err(Error::Dimension {
            expected: ctx.map.len(),
            got: config.len(),
        });
    }
    let presence = PartialAssignment::from_configuration(config);
    search(
        ctx,
        start_belief.clone(),
        start,
        goal,
        pcfg,
        |b, edge| advance_gaussian(ctx, b, edge, &presence, cache),
        |b| gaussian_score(b, pcfg),
    )
}

/// Belief roadmap search over Gaussian-mixture beliefs of landmark presence.
#[allow(clippy::too_many_arguments)]
pub fn plan_brule<R: Rng + ?Sized>(
    ctx: &PlanningContext<'_>,
    lepd: &Lepd,
    start_belief: &GaussianBelief,
    start: usize,
    goal: usize,
    pcfg: &PlannerConfig,
    rng: &mut R,
    cache: &mut TransferCache,
) -> Result<Plan> {
    pcfg.validate()?;
    ctx.check_endpoints(start_belief, start, goal)?;
    check_lepd(ctx, lepd)?;
    let region = pcfg.region()?;
    search(
        ctx,
        MixtureBelief::from_gaussian(start_belief),
        start,
        goal,
        pcfg,
        |b, edge| {
            b.propagate_edge(
                edge,
                ctx.track(edge),
                lepd,
                &ctx.models.sensor,
                pcfg.max_particles,
                rng,
                cache,
            )
        },
        |b| match pcfg.metric {
            UncertaintyMetric::Mass => b.mass(&region),
            UncertaintyMetric::Trace => b.weighted_trace().map(|t| -t),
        },
    )
}

/// Plans with the BRM on `samples` sampled configurations and keeps the
/// candidate with the highest mean goal mass over those same samples.
#[allow(clippy::too_many_arguments)]
pub fn plan_brule_e<R: Rng + ?Sized>(
    ctx: &PlanningContext<'_>,
    lepd: &Lepd,
    start_belief: &GaussianBelief,
    start: usize,
    goal: usize,
    pcfg: &PlannerConfig,
    samples: usize,
    rng: &mut R,
    cache: &mut TransferCache,
) -> Result<Plan> {
    if samples < 1 {
        return Err(invalid("sample count must be at least 1"));
    }
    check_lepd(ctx, lepd)?;
    let configs: Vec<Configuration> = (0..samples).map(|_| lepd.sample(rng)).collect();
    // one BRM run per sample; repeated configurations only share rollouts
    let mut counts: BTreeMap<&Configuration, usize> = BTreeMap::new();
    for config in &configs {
        *counts.entry(config).or_insert(0) += 1;
    }
    let mut candidates: Vec<Path> = Vec::new();
    for config in &configs {
        let plan = plan_brm(ctx, config, start_belief, start, goal, pcfg, cache)?;
        if !candidates.contains(&plan.path) {
            candidates.push(plan.path);
        }
    }
    let region = pcfg.region()?;
    let mut best: Option<Plan> = None;
    for path in candidates {
        let mut total = 0.0;
        for (config, &count) in &counts {
            total += count as f64 * rollout_mass(ctx, &path, config, start_belief, &region, cache)?;
        }
        let score = total / samples as f64;
        let better = match &best {
            None => true,
            Some(b) => score > b.score || (score == b.score && path.tie_key() < b.path.tie_key()),
        };
        if better {
            best = Some(Plan { path, score });
        }
    }
    best.ok_or(Error::NoPath { start, goal })
}

fn check_lepd(ctx: &PlanningContext<'_>, lepd: &Lepd) -> Result<()> {
    if lepd.landmark_count() != ctx.map.len() {
        return Err(Error::Dimension {
            expected: ctx.map.len(),
            got: lepd.landmark_count(),
        });
    }
    Ok(())
}

/// Deterministic EKF traversal of `path` with landmarks present per `config`.
pub fn rollout(
    ctx: &PlanningContext<'_>,
    path: &Path,
    config: &Configuration,
    start_belief: &GaussianBelief,
    cache: &mut TransferCache,
) -> Result<GaussianBelief> {
    ctx.check_endpoints(start_belief, path.start(), path.goal())?;
    let presence = PartialAssignment::from_configuration(config);
    let mut belief = start_belief.clone();
    for edge in path.directed_edges(ctx.roadmap)? {
        belief = advance_gaussian(ctx, &belief, edge, &presence, cache)?;
    }
    Ok(belief)
}

pub fn rollout_mass(
    ctx: &PlanningContext<'_>,
    path: &Path,
    config: &Configuration,
    start_belief: &GaussianBelief,
    region: &RegionSpec,
    cache: &mut TransferCache,
) -> Result<f64> {
    let end = rollout(ctx, path, config, start_belief, cache)?;
    gauss_disk_mass(&end.positional_cov(), region.radius())
}

/// Where [`evaluate_path`] gets its configurations.
#[derive(Debug, Clone, Copy)]
pub enum EvalConfigs<'c> {
    Explicit(&'c [Configuration]),
    Sampled(usize),
}

/// Mean goal mass of `path` over a configuration set.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_path<R: Rng + ?Sized>(
    ctx: &PlanningContext<'_>,
    path: &Path,
    lepd: &Lepd,
    start_belief: &GaussianBelief,
    region: &RegionSpec,
    configs: EvalConfigs<'_>,
    rng: &mut R,
    cache: &mut TransferCache,
) -> Result<f64> {
    check_lepd(ctx, lepd)?;
    path.directed_edges(ctx.roadmap)?;
    let drawn;
    let configs = match configs {
        EvalConfigs::Explicit(c) => c,
        EvalConfigs::Sampled(n) => {
            drawn = (0..n).map(|_| lepd.sample(rng)).collect::<Vec<_>>();
            &drawn[..]
        }
    };
    if configs.is_empty() {
        return Err(invalid("evaluation needs at least one configuration"));
    }
    let mut memo: BTreeMap<&Configuration, f64> = BTreeMap::new();
    let mut total = 0.0;
    for config in configs {
        if config.len() != ctx.map.len() {
            return Err(Error::Dimension {
                expected: ctx.map.len(),
                got: config.len(),
            });
        }
        let m = match memo.get(config) {
            Some(&m) => m,
            None => {
                let m = rollout_mass(ctx, path, config, start_belief, region, cache)?;
                memo.insert(config, m);
                m
            }
        };
        total += m;
    }
    Ok(total / configs.len() as f64)
}
