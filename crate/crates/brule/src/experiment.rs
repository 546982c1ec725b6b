//! Batch trials over generated environments with regret against a
//! privileged planner that knows each evaluation configuration.
//!
//! Work runs in two parallel stages. Stage one generates every environment,
//! draws its shared evaluation configurations and computes the privileged
//! masses. Stage two plans and evaluates each (environment, planner, size)
//! trial. Every random draw comes from a substream seeded by the master seed
//! and the trial's identity, and results are collected in a fixed order, so
//! the output does not depend on the thread count.

use std::collections::BTreeMap;
use std::time::Instant;

use brule_core::environment::{corner_environment, gen_environment, Archetype, Environment};
use brule_core::evanescence::Configuration;
use brule_core::gaussian::{GaussianBelief, TransferCache};
use brule_core::mixture::RegionSpec;
use brule_core::planner::{
    plan_brm, plan_brule, plan_brule_e, rollout_mass, Models, Path, PlannerConfig, PlanningContext,
};
use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{AppError, AppResult};
use crate::format::{fmt_sig, round_sig};
use crate::schema::{PlannerJson, RunConfig};

const MAX_ENV_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlannerKind {
    BrmOptimistic,
    BrmPrivileged,
    Brule,
    BruleE,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::BrmOptimistic => "brm-optimistic",
            PlannerKind::BrmPrivileged => "brm-privileged",
            PlannerKind::Brule => "brule",
            PlannerKind::BruleE => "brule-e",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            PlannerKind::BrmOptimistic,
            PlannerKind::BrmPrivileged,
            PlannerKind::Brule,
            PlannerKind::BruleE,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }

    fn is_sized(self) -> bool {
        matches!(self, PlannerKind::Brule | PlannerKind::BruleE)
    }
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub models: Models,
    pub initial_cov: Matrix3<f64>,
    pub planner: PlannerJson,
    pub batch: Vec<(Archetype, usize)>,
    pub p_z: Vec<f64>,
    pub p_l: Vec<f64>,
    pub extent: f64,
    pub spacing: f64,
    /// Trials per environment as `(planner, size)`; BRM planners use size 1.
    pub trials: Vec<(PlannerKind, usize)>,
    pub eval_samples: usize,
    pub record_wall_time: bool,
    pub seed: u64,
}

impl ExperimentSetup {
    pub fn from_config(cfg: &RunConfig, seed: u64) -> AppResult<Self> {
        let x = &cfg.experiment;
        let mut batch = Vec::with_capacity(x.batch.len());
        for (i, b) in x.batch.iter().enumerate() {
            let a: Archetype = b
                .archetype
                .parse()
                .map_err(|e| AppError::field(&format!("experiment.batch[{i}].archetype"), e))?;
            batch.push((a, b.count));
        }
        if batch.iter().all(|&(_, n)| n == 0) {
            return Err(AppError::field("experiment.batch", "must contain at least one environment"));
        }
        for (field, list) in [("experiment.p_z", &x.p_z), ("experiment.p_l", &x.p_l)] {
            if list.is_empty() {
                return Err(AppError::field(field, "must not be empty"));
            }
            for (i, &p) in list.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) {
                    return Err(AppError::field(&format!("{field}[{i}]"), format!("must be in [0, 1], got {p}")));
                }
            }
        }
        if x.roster.is_empty() {
            return Err(AppError::field("experiment.roster", "must name at least one planner"));
        }
        let mut trials = Vec::new();
        for (i, r) in x.roster.iter().enumerate() {
            let kind = PlannerKind::parse(&r.name).ok_or_else(|| {
                AppError::field(&format!("experiment.roster[{i}].name"), format!("unknown planner {:?}", r.name))
            })?;
            if kind.is_sized() {
                if r.sizes.is_empty() {
                    return Err(AppError::field(&format!("experiment.roster[{i}].sizes"), "must not be empty"));
                }
                for &s in &r.sizes {
                    if s == 0 {
                        return Err(AppError::field(&format!("experiment.roster[{i}].sizes"), "must be at least 1"));
                    }
                    trials.push((kind, s));
                }
            } else {
                trials.push((kind, 1));
            }
        }
        trials.sort_unstable_by(|a, b| (a.0.name(), a.1).cmp(&(b.0.name(), b.1)));
        trials.dedup();
        if x.eval_samples == 0 {
            return Err(AppError::field("experiment.eval_samples", "must be at least 1"));
        }
        // checks the grid and the planner section up front
        for &(a, _) in &batch {
            let mut spec = a.spec(x.p_z[0], x.p_l[0]);
            spec.extent = x.extent;
            spec.spacing = x.spacing;
            spec.validate().map_err(|e| AppError::field("experiment", e))?;
        }
        cfg.planner.to_config(1, x.eval_samples)?;
        Ok(Self {
            models: cfg.models.to_models()?,
            initial_cov: cfg.models.initial_cov()?,
            planner: cfg.planner.clone(),
            batch,
            p_z: x.p_z.clone(),
            p_l: x.p_l.clone(),
            extent: x.extent,
            spacing: x.spacing,
            trials,
            eval_samples: x.eval_samples,
            record_wall_time: x.record_wall_time,
            seed,
        })
    }

    pub fn env_count(&self) -> usize {
        self.batch.iter().map(|&(_, n)| n).sum()
    }

    fn planner_config(&self, size: usize) -> AppResult<PlannerConfig> {
        self.planner.to_config(size, self.eval_samples)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of the substream identified by `parts` under `master`.
pub fn substream_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(master), |h, &p| splitmix64(h ^ p))
}

fn tag(name: &str) -> u64 {
    fnv1a(name)
}

/// One generated environment and its provenance.
#[derive(Debug, Clone)]
pub struct GeneratedEnv {
    pub index: usize,
    pub archetype: Archetype,
    pub p_z: f64,
    pub p_l: f64,
    pub seed: u64,
    pub env: Environment,
}

/// Generates the batch in order. Environments with an unreachable goal are
/// redrawn from the next substream.
pub fn generate_batch(setup: &ExperimentSetup) -> AppResult<Vec<GeneratedEnv>> {
    let mut out = Vec::with_capacity(setup.env_count());
    for &(archetype, count) in &setup.batch {
        for k in 0..count {
            let index = out.len();
            let (p_z, p_l) = (setup.p_z[k % setup.p_z.len()], setup.p_l[k % setup.p_l.len()]);
            let mut spec = archetype.spec(p_z, p_l);
            spec.extent = setup.extent;
            spec.spacing = setup.spacing;
            let mut generated = None;
            for attempt in 0..MAX_ENV_ATTEMPTS {
                let seed = substream_seed(setup.seed, &[tag("env"), index as u64, attempt]);
                let (map, lepd) = gen_environment(&spec, &mut ChaCha8Rng::seed_from_u64(seed))?;
                let env = corner_environment(&spec, map, lepd)?;
                if env.goal_reachable() {
                    generated = Some((seed, env));
                    break;
                }
                eprintln!("environment {index}: goal unreachable on attempt {attempt}, resampling");
            }
            let (seed, env) = generated.ok_or_else(|| {
                AppError::Planning(format!("environment {index}: goal unreachable after {MAX_ENV_ATTEMPTS} attempts"))
            })?;
            out.push(GeneratedEnv {
                index,
                archetype,
                p_z,
                p_l,
                seed,
                env,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub env_id: usize,
    pub planner: String,
    pub size: usize,
    /// Expected goal mass over the evaluation configurations.
    pub mass: f64,
    pub regret: f64,
    pub wall_time_s: f64,
    pub seed: u64,
}

struct EnvStage {
    configs: Vec<Configuration>,
    privileged: Vec<f64>,
    privileged_time: f64,
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn compensated_mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

fn path_masses(
    ctx: &PlanningContext<'_>,
    path: &Path,
    configs: &[Configuration],
    start: &GaussianBelief,
    region: &RegionSpec,
    cache: &mut TransferCache,
) -> AppResult<Vec<f64>> {
    let mut memo: BTreeMap<&Configuration, f64> = BTreeMap::new();
    configs
        .iter()
        .map(|c| {
            if let Some(&m) = memo.get(c) {
                return Ok(m);
            }
            let m = rollout_mass(ctx, path, c, start, region, cache)?;
            memo.insert(c, m);
            Ok(m)
        })
        .collect()
}

fn env_stage(setup: &ExperimentSetup, g: &GeneratedEnv) -> AppResult<EnvStage> {
    let env = &g.env;
    let ctx = PlanningContext::new(&env.roadmap, &env.map, &setup.models)?;
    let pcfg = setup.planner_config(1)?;
    let region = pcfg.region()?;
    let start = env.start_belief(setup.initial_cov);
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(setup.seed, &[tag("eval"), g.index as u64]));
    let configs: Vec<Configuration> = (0..setup.eval_samples).map(|_| env.lepd.sample(&mut rng)).collect();

    let clock = Instant::now();
    let mut cache = TransferCache::new();
    let mut memo: BTreeMap<&Configuration, f64> = BTreeMap::new();
    let mut privileged = Vec::with_capacity(configs.len());
    for c in &configs {
        let m = match memo.get(c) {
            Some(&m) => m,
            None => {
                let plan = plan_brm(&ctx, c, &start, env.start, env.goal, &pcfg, &mut cache)?;
                let m = rollout_mass(&ctx, &plan.path, c, &start, &region, &mut cache)?;
                memo.insert(c, m);
                m
            }
        };
        privileged.push(m);
    }
    let privileged_time = clock.elapsed().as_secs_f64() / memo.len() as f64;
    Ok(EnvStage {
        configs,
        privileged,
        privileged_time,
    })
}

fn run_trial(
    setup: &ExperimentSetup,
    g: &GeneratedEnv,
    stage: &EnvStage,
    kind: PlannerKind,
    size: usize,
) -> AppResult<TrialResult> {
    let env = &g.env;
    let seed = substream_seed(setup.seed, &[tag("trial"), g.index as u64, tag(kind.name()), size as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = PlanningContext::new(&env.roadmap, &env.map, &setup.models)?;
    let pcfg = setup.planner_config(size)?;
    let region = pcfg.region()?;
    let start = env.start_belief(setup.initial_cov);
    let mut cache = TransferCache::new();

    let (masses, wall) = if kind == PlannerKind::BrmPrivileged {
        (stage.privileged.clone(), stage.privileged_time)
    } else {
        let clock = Instant::now();
        let plan = match kind {
            PlannerKind::BrmOptimistic => {
                let all = Configuration::all_present(env.map.len());
                plan_brm(&ctx, &all, &start, env.start, env.goal, &pcfg, &mut cache)?
            }
            PlannerKind::Brule => plan_brule(&ctx, &env.lepd, &start, env.start, env.goal, &pcfg, &mut rng, &mut cache)?,
            PlannerKind::BruleE => {
                plan_brule_e(&ctx, &env.lepd, &start, env.start, env.goal, &pcfg, size, &mut rng, &mut cache)?
            }
            PlannerKind::BrmPrivileged => unreachable!(),
        };
        let wall = clock.elapsed().as_secs_f64();
        let masses = path_masses(&ctx, &plan.path, &stage.configs, &start, &region, &mut cache)?;
        (masses, wall)
    };
    let gaps: Vec<f64> = stage.privileged.iter().zip(&masses).map(|(p, m)| p - m).collect();
    Ok(TrialResult {
        env_id: g.index,
        planner: kind.name().to_string(),
        size,
        mass: compensated_mean(&masses).clamp(0.0, 1.0),
        regret: compensated_mean(&gaps),
        wall_time_s: if setup.record_wall_time { wall } else { 0.0 },
        seed,
    })
}

/// Runs every trial on `jobs` worker threads. Results are ordered by
/// environment, planner name and size.
pub fn run_experiment(setup: &ExperimentSetup, envs: &[GeneratedEnv], jobs: usize) -> AppResult<Vec<TrialResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| AppError::Validation(format!("jobs: {e}")))?;
    pool.install(|| {
        let stages: Vec<EnvStage> = envs
            .par_iter()
            .map(|g| env_stage(setup, g))
            .collect::<AppResult<_>>()?;
        let work: Vec<(usize, PlannerKind, usize)> = (0..envs.len())
            .flat_map(|e| setup.trials.iter().map(move |&(k, s)| (e, k, s)))
            .collect();
        work.par_iter()
            .map(|&(e, k, s)| run_trial(setup, &envs[e], &stages[e], k, s))
            .collect()
    })
}

pub fn write_csv<W: std::io::Write>(trials: &[TrialResult], out: W) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| AppError::Validation(format!("csv: {e}"));
    w.write_record(["env_id", "planner", "size", "mass", "regret", "wall_time_s", "seed"])
        .map_err(csv_err)?;
    for t in trials {
        w.write_record([
            t.env_id.to_string(),
            t.planner.clone(),
            t.size.to_string(),
            fmt_sig(t.mass),
            fmt_sig(t.regret),
            fmt_sig(t.wall_time_s),
            t.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| AppError::Validation(format!("csv: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            min: round_sig(v[0]),
            q1: round_sig(quantile(&v, 0.25)),
            median: round_sig(quantile(&v, 0.5)),
            q3: round_sig(quantile(&v, 0.75)),
            max: round_sig(v[v.len() - 1]),
            mean: round_sig(compensated_mean(&v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannerSummary {
    pub planner: String,
    pub size: usize,
    pub trials: usize,
    pub mean_mass: f64,
    pub regret: Quartiles,
    pub wall_time_s: Quartiles,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvSummary {
    pub env_id: usize,
    pub archetype: String,
    pub p_z: f64,
    pub p_l: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub eval_samples: usize,
    /// Landmark counts, group sizes, cluster layout and the p_z/p_l sweep
    /// are defaults of this tool, not measured values.
    pub parameters_are_defaults: bool,
    pub wall_time_recorded: bool,
    pub environments: Vec<EnvSummary>,
    pub planners: Vec<PlannerSummary>,
}

pub fn summarize(setup: &ExperimentSetup, envs: &[GeneratedEnv], trials: &[TrialResult], defaults: bool) -> Summary {
    let mut groups: BTreeMap<(&str, usize), Vec<&TrialResult>> = BTreeMap::new();
    for t in trials {
        groups.entry((t.planner.as_str(), t.size)).or_default().push(t);
    }
    let planners = groups
        .into_iter()
        .map(|((planner, size), ts)| {
            let regret: Vec<f64> = ts.iter().map(|t| t.regret).collect();
            let wall: Vec<f64> = ts.iter().map(|t| t.wall_time_s).collect();
            let mass: Vec<f64> = ts.iter().map(|t| t.mass).collect();
            PlannerSummary {
                planner: planner.to_string(),
                size,
                trials: ts.len(),
                mean_mass: round_sig(compensated_mean(&mass)),
                regret: Quartiles::of(&regret),
                wall_time_s: Quartiles::of(&wall),
            }
        })
        .collect();
    Summary {
        seed: setup.seed,
        eval_samples: setup.eval_samples,
        parameters_are_defaults: defaults,
        wall_time_recorded: setup.record_wall_time,
        environments: envs
            .iter()
            .map(|g| EnvSummary {
                env_id: g.index,
                archetype: g.archetype.name().to_string(),
                p_z: g.p_z,
                p_l: g.p_l,
                seed: g.seed,
            })
            .collect(),
        planners,
    }
}
