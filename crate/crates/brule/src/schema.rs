//! JSON documents: environments, environment specs, paths, configuration
//! lists and run configurations. Unknown keys are rejected everywhere.

use std::fs;
use std::path::Path as FsPath;

use brule_core::environment::{
    Archetype, Environment, EnvironmentSpec, EvanescenceKind, LatentGrouping, SpatialKind,
};
use brule_core::evanescence::{Configuration, Landmark, Lepd, LepdModel, MapModel};
use brule_core::planner::{Models, Path, PlannerConfig, UncertaintyMetric};
use brule_core::roadmap::{gen_grid_roadmap, Roadmap};
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};
use crate::format::round_sig;

pub fn read_json<T: DeserializeOwned>(path: &FsPath) -> AppResult<T> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &FsPath, value: &T) -> AppResult<()> {
    fs::write(path, to_json_string(value)).map_err(|e| AppError::io(path, e))
}

fn check_probability(field: &str, p: f64) -> AppResult<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(AppError::field(field, format!("must be in [0, 1], got {p}")))
    }
}

fn check_positive(field: &str, x: f64) -> AppResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(AppError::field(field, format!("must be positive, got {x}")))
    }
}

fn check_nonnegative(field: &str, x: f64) -> AppResult<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(AppError::field(field, format!("must be nonnegative, got {x}")))
    }
}

fn check_count(field: &str, n: usize) -> AppResult<()> {
    if n >= 1 {
        Ok(())
    } else {
        Err(AppError::field(field, "must be at least 1"))
    }
}

fn tag(field: &str) -> impl Fn(brule_core::Error) -> AppError + '_ {
    move |e| AppError::field(field, e)
}

// ---------------------------------------------------------------- environment

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkJson {
    pub id: String,
    pub pos: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitRow {
    /// Presence bits, landmark 0 first, e.g. `"101"`.
    pub config: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LepdJson {
    Explicit {
        table: Vec<ExplicitRow>,
    },
    /// `weights` defaults to uniform within each group.
    Mutex {
        groups: Vec<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<Vec<f64>>>,
    },
    /// `groups` defaults to one group holding every landmark.
    Latent {
        p_z: f64,
        p_l: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        groups: Option<Vec<Vec<usize>>>,
    },
    Independent {
        p: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RoadmapJson {
    Grid { extent: f64, spacing: f64 },
    Explicit { nodes: Vec<[f64; 2]>, edges: Vec<[usize; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvFile {
    pub landmarks: Vec<LandmarkJson>,
    pub lepd: LepdJson,
    pub roadmap: RoadmapJson,
    pub start: usize,
    pub goal: usize,
}

impl LepdJson {
    pub fn from_lepd(lepd: &Lepd) -> Self {
        match lepd.model() {
            LepdModel::Explicit(table) => LepdJson::Explicit {
                table: table
                    .iter()
                    .map(|(c, p)| ExplicitRow {
                        config: c.to_string(),
                        p: round_sig(*p),
                    })
                    .collect(),
            },
            LepdModel::Mutex { groups, weights } => {
                let uniform = groups
                    .iter()
                    .zip(weights)
                    .all(|(g, w)| w.iter().all(|&x| x == 1.0 / g.len() as f64));
                LepdJson::Mutex {
                    groups: groups.clone(),
                    weights: (!uniform).then(|| {
                        weights
                            .iter()
                            .map(|w| w.iter().map(|&x| round_sig(x)).collect())
                            .collect()
                    }),
                }
            }
            LepdModel::Latent { groups, p_z, p_l } => LepdJson::Latent {
                p_z: round_sig(*p_z),
                p_l: round_sig(*p_l),
                groups: (groups.len() != 1).then(|| groups.clone()),
            },
            LepdModel::Independent(p) => LepdJson::Independent {
                p: p.iter().map(|&x| round_sig(x)).collect(),
            },
        }
    }

    pub fn to_lepd(&self, n: usize) -> AppResult<Lepd> {
        match self {
            LepdJson::Explicit { table } => {
                let mut rows = Vec::with_capacity(table.len());
                for (i, row) in table.iter().enumerate() {
                    let config: Configuration = row
                        .config
                        .parse()
                        .map_err(tag(&format!("lepd.table[{i}].config")))?;
                    check_probability(&format!("lepd.table[{i}].p"), row.p)?;
                    rows.push((config, row.p));
                }
                Lepd::explicit(n, rows).map_err(tag("lepd.table"))
            }
            LepdJson::Mutex { groups, weights } => match weights {
                None => Lepd::mutex_uniform(n, groups.clone()).map_err(tag("lepd.groups")),
                Some(w) => {
                    for (g, ws) in w.iter().enumerate() {
                        for (k, &x) in ws.iter().enumerate() {
                            check_probability(&format!("lepd.weights[{g}][{k}]"), x)?;
                        }
                    }
                    Lepd::mutex(n, groups.clone(), w.clone()).map_err(tag("lepd.weights"))
                }
            },
            LepdJson::Latent { p_z, p_l, groups } => {
                check_probability("lepd.p_z", *p_z)?;
                check_probability("lepd.p_l", *p_l)?;
                match groups {
                    None => Lepd::latent(n, *p_z, *p_l).map_err(tag("lepd")),
                    Some(g) => Lepd::latent_groups(n, g.clone(), *p_z, *p_l).map_err(tag("lepd.groups")),
                }
            }
            LepdJson::Independent { p } => {
                if p.len() != n {
                    return Err(AppError::field(
                        "lepd.p",
                        format!("has {} entries for {n} landmarks", p.len()),
                    ));
                }
                for (i, &x) in p.iter().enumerate() {
                    check_probability(&format!("lepd.p[{i}]"), x)?;
                }
                Lepd::independent(p.clone()).map_err(tag("lepd.p"))
            }
        }
    }
}

impl RoadmapJson {
    pub fn to_roadmap(&self) -> AppResult<Roadmap> {
        match self {
            RoadmapJson::Grid { extent, spacing } => {
                check_positive("roadmap.extent", *extent)?;
                check_positive("roadmap.spacing", *spacing)?;
                gen_grid_roadmap(*extent, *spacing).map_err(tag("roadmap"))
            }
            RoadmapJson::Explicit { nodes, edges } => {
                for (i, p) in nodes.iter().enumerate() {
                    if !(p[0].is_finite() && p[1].is_finite()) {
                        return Err(AppError::field(&format!("roadmap.nodes[{i}]"), "must be finite"));
                    }
                }
                Roadmap::new(
                    nodes.iter().map(|p| Vector2::new(p[0], p[1])).collect(),
                    edges.iter().map(|e| (e[0], e[1])).collect(),
                )
                .map_err(tag("roadmap.edges"))
            }
        }
    }
}

impl EnvFile {
    pub fn from_environment(env: &Environment, roadmap: RoadmapJson) -> Self {
        Self {
            landmarks: env
                .map
                .landmarks()
                .iter()
                .map(|l| LandmarkJson {
                    id: l.id.clone(),
                    pos: [round_sig(l.position.x), round_sig(l.position.y)],
                })
                .collect(),
            lepd: LepdJson::from_lepd(&env.lepd),
            roadmap,
            start: env.start,
            goal: env.goal,
        }
    }

    pub fn to_environment(&self) -> AppResult<Environment> {
        let mut landmarks = Vec::with_capacity(self.landmarks.len());
        for (i, l) in self.landmarks.iter().enumerate() {
            if !(l.pos[0].is_finite() && l.pos[1].is_finite()) {
                return Err(AppError::field(&format!("landmarks[{i}].pos"), "must be finite"));
            }
            landmarks.push(Landmark::new(l.id.clone(), l.pos[0], l.pos[1]));
        }
        let map = MapModel::new(landmarks).map_err(tag("landmarks"))?;
        let lepd = self.lepd.to_lepd(map.len())?;
        let roadmap = self.roadmap.to_roadmap()?;
        for (field, node) in [("start", self.start), ("goal", self.goal)] {
            if node >= roadmap.node_count() {
                return Err(AppError::field(
                    field,
                    format!("node {node} is not in the roadmap ({} nodes)", roadmap.node_count()),
                ));
            }
        }
        Environment::new(map, lepd, roadmap, self.start, self.goal).map_err(tag("environment"))
    }
}

// ----------------------------------------------------------- environment spec

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpatialJson {
    Diffuse {
        count: usize,
    },
    Clustered {
        clusters: usize,
        per_cluster: usize,
        #[serde(default = "default_box_size")]
        box_size: f64,
    },
}

fn default_box_size() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GroupingJson {
    #[default]
    Single,
    Clusters,
    Classes(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EvanescenceJson {
    Mutex {
        group_size: usize,
    },
    Latent {
        p_z: f64,
        p_l: f64,
        #[serde(default)]
        grouping: GroupingJson,
    },
    Independent {
        p_l: f64,
    },
}

/// Input of `gen-env`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default = "default_extent")]
    pub extent: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    pub spatial: SpatialJson,
    pub evanescence: EvanescenceJson,
    /// Start node; defaults to the lattice corner at the origin.
    #[serde(default)]
    pub start: Option<usize>,
    /// Goal node; defaults to the opposite corner.
    #[serde(default)]
    pub goal: Option<usize>,
    /// Used when `--seed` is not given.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_extent() -> f64 {
    100.0
}

fn default_spacing() -> f64 {
    10.0
}

impl SpecFile {
    pub fn to_spec(&self) -> AppResult<EnvironmentSpec> {
        check_positive("extent", self.extent)?;
        check_positive("spacing", self.spacing)?;
        gen_grid_roadmap(self.extent, self.spacing).map_err(tag("spacing"))?;
        let spatial = match self.spatial {
            SpatialJson::Diffuse { count } => {
                check_count("spatial.count", count)?;
                SpatialKind::Diffuse { count }
            }
            SpatialJson::Clustered {
                clusters,
                per_cluster,
                box_size,
            } => {
                check_count("spatial.clusters", clusters)?;
                check_count("spatial.per_cluster", per_cluster)?;
                check_positive("spatial.box_size", box_size)?;
                if box_size > self.extent {
                    return Err(AppError::field("spatial.box_size", "must not exceed the extent"));
                }
                SpatialKind::Clustered {
                    clusters,
                    per_cluster,
                    box_size,
                }
            }
        };
        let evanescence = match self.evanescence {
            EvanescenceJson::Mutex { group_size } => {
                check_count("evanescence.group_size", group_size)?;
                EvanescenceKind::Mutex { group_size }
            }
            EvanescenceJson::Latent { p_z, p_l, grouping } => {
                check_probability("evanescence.p_z", p_z)?;
                check_probability("evanescence.p_l", p_l)?;
                let grouping = match grouping {
                    GroupingJson::Single => LatentGrouping::Single,
                    GroupingJson::Clusters => LatentGrouping::Clusters,
                    GroupingJson::Classes(k) => {
                        check_count("evanescence.grouping.classes", k)?;
                        LatentGrouping::Classes(k)
                    }
                };
                EvanescenceKind::Latent { p_z, p_l, grouping }
            }
            EvanescenceJson::Independent { p_l } => {
                check_probability("evanescence.p_l", p_l)?;
                EvanescenceKind::Independent { p_l }
            }
        };
        let spec = EnvironmentSpec {
            extent: self.extent,
            spacing: self.spacing,
            spatial,
            evanescence,
        };
        spec.validate().map_err(tag("spec"))?;
        Ok(spec)
    }

    pub fn from_spec(spec: &EnvironmentSpec) -> Self {
        let spatial = match spec.spatial {
            SpatialKind::Diffuse { count } => SpatialJson::Diffuse { count },
            SpatialKind::Clustered {
                clusters,
                per_cluster,
                box_size,
            } => SpatialJson::Clustered {
                clusters,
                per_cluster,
                box_size,
            },
        };
        let evanescence = match spec.evanescence {
            EvanescenceKind::Mutex { group_size } => EvanescenceJson::Mutex { group_size },
            EvanescenceKind::Latent { p_z, p_l, grouping } => EvanescenceJson::Latent {
                p_z,
                p_l,
                grouping: match grouping {
                    LatentGrouping::Single => GroupingJson::Single,
                    LatentGrouping::Clusters => GroupingJson::Clusters,
                    LatentGrouping::Classes(k) => GroupingJson::Classes(k),
                },
            },
            EvanescenceKind::Independent { p_l } => EvanescenceJson::Independent { p_l },
        };
        Self {
            extent: spec.extent,
            spacing: spec.spacing,
            spatial,
            evanescence,
            start: None,
            goal: None,
            seed: None,
        }
    }
}

// ------------------------------------------------------- paths, configurations

/// A path document. `plan` fills in the optional fields; `eval` only needs
/// `nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub nodes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planner: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// The planner's own goal score.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl PathFile {
    pub fn to_path(&self) -> AppResult<Path> {
        Path::new(self.nodes.clone()).map_err(tag("nodes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigurationsFile {
    pub configurations: Vec<String>,
}

impl ConfigurationsFile {
    pub fn to_configurations(&self, n: usize) -> AppResult<Vec<Configuration>> {
        if self.configurations.is_empty() {
            return Err(AppError::field("configurations", "must not be empty"));
        }
        self.configurations
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let field = format!("configurations[{i}]");
                let c: Configuration = s.parse().map_err(tag(&field))?;
                if c.len() != n {
                    return Err(AppError::field(&field, format!("has {} bits for {n} landmarks", c.len())));
                }
                Ok(c)
            })
            .collect()
    }
}

// ---------------------------------------------------------------- run config

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionJson {
    /// Edge discretization, meters.
    pub step_length: f64,
    /// Position noise standard deviation per √meter travelled.
    pub xy_std_per_sqrt_m: f64,
    /// Heading noise standard deviation per √meter travelled, degrees.
    pub heading_std_deg_per_sqrt_m: f64,
}

impl Default for MotionJson {
    fn default() -> Self {
        Self {
            step_length: 1.0,
            xy_std_per_sqrt_m: 0.02,
            heading_std_deg_per_sqrt_m: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorJson {
    pub max_range: f64,
    pub range_std: f64,
    pub bearing_std_deg: f64,
}

impl Default for SensorJson {
    fn default() -> Self {
        Self {
            max_range: 15.0,
            range_std: 0.1,
            bearing_std_deg: 1.0,
        }
    }
}

/// Initial pose uncertainty at the start node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialJson {
    pub position_std: f64,
    pub heading_std_deg: f64,
}

impl Default for InitialJson {
    fn default() -> Self {
        Self {
            position_std: 0.5,
            heading_std_deg: 3.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsJson {
    pub motion: MotionJson,
    pub sensor: SensorJson,
    pub initial: InitialJson,
}

impl ModelsJson {
    pub fn to_models(&self) -> AppResult<Models> {
        let m = &self.motion;
        check_positive("models.motion.step_length", m.step_length)?;
        check_nonnegative("models.motion.xy_std_per_sqrt_m", m.xy_std_per_sqrt_m)?;
        check_nonnegative("models.motion.heading_std_deg_per_sqrt_m", m.heading_std_deg_per_sqrt_m)?;
        let s = &self.sensor;
        check_nonnegative("models.sensor.max_range", s.max_range)?;
        check_positive("models.sensor.range_std", s.range_std)?;
        check_positive("models.sensor.bearing_std_deg", s.bearing_std_deg)?;
        let (q, h) = (m.xy_std_per_sqrt_m, m.heading_std_deg_per_sqrt_m.to_radians());
        let bearing = s.bearing_std_deg.to_radians();
        let mut models = Models::default();
        models.motion.step_length = m.step_length;
        models.motion.noise_per_meter = Matrix3::from_diagonal(&Vector3::new(q * q, q * q, h * h));
        models.sensor.max_range = s.max_range;
        models.sensor.noise = Matrix2::new(s.range_std * s.range_std, 0.0, 0.0, bearing * bearing);
        Ok(models)
    }

    pub fn initial_cov(&self) -> AppResult<Matrix3<f64>> {
        let i = &self.initial;
        check_positive("models.initial.position_std", i.position_std)?;
        check_positive("models.initial.heading_std_deg", i.heading_std_deg)?;
        let (p, h) = (i.position_std, i.heading_std_deg.to_radians());
        Ok(Matrix3::from_diagonal(&Vector3::new(p * p, p * p, h * h)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricJson {
    #[default]
    Mass,
    Trace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerJson {
    /// Radius of the goal disk, meters.
    pub region_radius: f64,
    pub dominance_tolerance: f64,
    /// Maximum path length in edges; four times the roadmap diameter if unset.
    pub depth_limit: Option<usize>,
    pub metric: MetricJson,
}

impl Default for PlannerJson {
    fn default() -> Self {
        let d = PlannerConfig::default();
        Self {
            region_radius: d.region_radius,
            dominance_tolerance: d.dominance_tolerance,
            depth_limit: d.depth_limit,
            metric: MetricJson::Mass,
        }
    }
}

impl PlannerJson {
    /// Planner configuration with the given particle budget and evaluation
    /// sample count.
    pub fn to_config(&self, max_particles: usize, eval_samples: usize) -> AppResult<PlannerConfig> {
        check_positive("planner.region_radius", self.region_radius)?;
        check_nonnegative("planner.dominance_tolerance", self.dominance_tolerance)?;
        if self.depth_limit == Some(0) {
            return Err(AppError::field("planner.depth_limit", "must be at least 1"));
        }
        let cfg = PlannerConfig {
            max_particles,
            region_radius: self.region_radius,
            dominance_tolerance: self.dominance_tolerance,
            depth_limit: self.depth_limit,
            eval_samples,
            metric: match self.metric {
                MetricJson::Mass => UncertaintyMetric::Mass,
                MetricJson::Trace => UncertaintyMetric::Trace,
            },
        };
        cfg.validate().map_err(tag("planner"))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchEntry {
    pub archetype: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    /// `brm-optimistic`, `brm-privileged`, `brule` or `brule-e`.
    pub name: String,
    /// Particle caps (`brule`) or sample counts (`brule-e`); ignored by the
    /// BRM planners.
    #[serde(default)]
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentJson {
    pub batch: Vec<BatchEntry>,
    /// Cycled over the environments of each archetype.
    pub p_z: Vec<f64>,
    pub p_l: Vec<f64>,
    pub extent: f64,
    pub spacing: f64,
    pub roster: Vec<RosterEntry>,
    /// Shared evaluation configurations per environment.
    pub eval_samples: usize,
    /// When false every wall time is written as 0 so the CSV is reproducible
    /// byte for byte.
    pub record_wall_time: bool,
    pub csv_name: String,
    pub summary_name: String,
}

impl Default for ExperimentJson {
    fn default() -> Self {
        Self {
            batch: Archetype::ALL
                .iter()
                .map(|a| BatchEntry {
                    archetype: a.name().to_string(),
                    count: a.default_count(),
                })
                .collect(),
            p_z: vec![0.0, 0.25, 0.5],
            p_l: vec![0.5, 0.75],
            extent: 100.0,
            spacing: 10.0,
            roster: vec![
                RosterEntry {
                    name: "brm-optimistic".into(),
                    sizes: vec![],
                },
                RosterEntry {
                    name: "brm-privileged".into(),
                    sizes: vec![],
                },
                RosterEntry {
                    name: "brule".into(),
                    sizes: vec![10, 100, 1000],
                },
                RosterEntry {
                    name: "brule-e".into(),
                    sizes: vec![10, 100, 1000],
                },
            ],
            eval_samples: 1000,
            record_wall_time: true,
            csv_name: "results.csv".into(),
            summary_name: "summary.json".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub models: ModelsJson,
    pub planner: PlannerJson,
    pub experiment: ExperimentJson,
    /// Used when `--seed` is not given.
    pub seed: Option<u64>,
}
