//! `brule` subcommands. Every command takes `--seed` (default 0).

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use brule_core::environment::{corner_environment, gen_environment, Environment};
use brule_core::evanescence::Configuration;
use brule_core::gaussian::TransferCache;
use brule_core::planner::{evaluate_path, plan_brm, plan_brule, plan_brule_e, EvalConfigs, PlanningContext};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AppError, AppResult};
use crate::experiment::{generate_batch, run_experiment, summarize, write_csv, ExperimentSetup};
use crate::format::{fmt_sig, round_sig};
use crate::schema::{
    read_json, write_json, ConfigurationsFile, EnvFile, PathFile, RoadmapJson, RunConfig, SpecFile,
};

#[derive(Debug, Parser)]
#[command(name = "brule", version, about = "Belief roadmap planning under uncertain landmark evanescence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlannerArg {
    /// Single-Gaussian belief roadmap; all landmarks present unless
    /// `--presence` is given.
    Brm,
    Brule,
    BruleE,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an environment (landmarks, evanescence model, grid roadmap).
    GenEnv {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan a path and write it as JSON.
    Plan {
        #[arg(long)]
        env: PathBuf,
        #[arg(long, value_enum)]
        planner: PlannerArg,
        /// Particle cap (brule) or sample count (brule-e).
        #[arg(long, default_value_t = 100)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Run configuration (models, planner settings).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Presence bits for brm, e.g. `1011`.
        #[arg(long)]
        presence: Option<String>,
    },
    /// Print the expected goal mass of a path.
    Eval {
        #[arg(long)]
        env: PathBuf,
        #[arg(long)]
        path: PathBuf,
        /// Configurations drawn from the evaluation model; ignored with
        /// `--configs`. Defaults to the run configuration's sample count.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON list of configurations to evaluate on instead of sampling.
        #[arg(long)]
        configs: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a batch experiment; writes a CSV of trials and a JSON summary.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides the configuration's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: &Option<PathBuf>) -> AppResult<RunConfig> {
    path.as_ref().map_or_else(|| Ok(RunConfig::default()), |p| read_json(p))
}

pub fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::GenEnv { spec, seed, out } => gen_env(&spec, seed, &out),
        Command::Plan {
            env,
            planner,
            size,
            seed,
            out,
            config,
            presence,
        } => {
            let cfg = load_config(&config)?;
            let file = plan(&read_json::<EnvFile>(&env)?, planner, size, seed, &cfg, presence.as_deref())?;
            write_json(&out, &file)?;
            println!(
                "{}",
                file.nodes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ")
            );
            Ok(())
        }
        Command::Eval {
            env,
            path,
            samples,
            seed,
            configs,
            config,
        } => {
            let cfg = load_config(&config)?;
            let configs = match configs {
                Some(p) => Some(read_json::<ConfigurationsFile>(&p)?),
                None => None,
            };
            let mass = eval(&read_json(&env)?, &read_json(&path)?, samples, seed, configs.as_ref(), &cfg)?;
            println!("{}", fmt_sig(mass));
            Ok(())
        }
        Command::Experiment {
            config,
            out,
            jobs,
            seed,
        } => experiment(&read_json(&config)?, seed, &out, jobs),
    }
}

pub fn gen_env(spec_path: &std::path::Path, seed: Option<u64>, out: &std::path::Path) -> AppResult<()> {
    let file: SpecFile = read_json(spec_path)?;
    let env = gen_env_file(&file, seed)?;
    write_json(out, &env)
}

/// Environment document for a spec; `seed` overrides the spec's own.
pub fn gen_env_file(file: &SpecFile, seed: Option<u64>) -> AppResult<EnvFile> {
    let spec = file.to_spec()?;
    let seed = seed.or(file.seed).unwrap_or(0);
    let (map, lepd) = gen_environment(&spec, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let mut env = corner_environment(&spec, map, lepd)?;
    let n = env.roadmap.node_count();
    for (field, node) in [("start", file.start), ("goal", file.goal)] {
        if let Some(node) = node {
            if node >= n {
                return Err(AppError::field(field, format!("node {node} is not in the roadmap ({n} nodes)")));
            }
        }
    }
    env.start = file.start.unwrap_or(env.start);
    env.goal = file.goal.unwrap_or(env.goal);
    Ok(EnvFile::from_environment(
        &env,
        RoadmapJson::Grid {
            extent: spec.extent,
            spacing: spec.spacing,
        },
    ))
}

fn reachable(env: &Environment) -> AppResult<()> {
    if env.goal_reachable() {
        Ok(())
    } else {
        Err(AppError::Planning(format!(
            "no path from node {} to node {}",
            env.start, env.goal
        )))
    }
}

pub fn plan(
    file: &EnvFile,
    planner: PlannerArg,
    size: usize,
    seed: u64,
    cfg: &RunConfig,
    presence: Option<&str>,
) -> AppResult<PathFile> {
    let env = file.to_environment()?;
    reachable(&env)?;
    if size == 0 {
        return Err(AppError::field("size", "must be at least 1"));
    }
    let models = cfg.models.to_models()?;
    let start = env.start_belief(cfg.models.initial_cov()?);
    let pcfg = cfg.planner.to_config(size, cfg.experiment.eval_samples.max(1))?;
    let ctx = PlanningContext::new(&env.roadmap, &env.map, &models)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache = TransferCache::new();
    let clock = Instant::now();
    let result = match planner {
        PlannerArg::Brm => {
            let config = match presence {
                Some(bits) => {
                    let c: Configuration = bits.parse().map_err(|e| AppError::field("presence", e))?;
                    if c.len() != env.map.len() {
                        return Err(AppError::field(
                            "presence",
                            format!("has {} bits for {} landmarks", c.len(), env.map.len()),
                        ));
                    }
                    c
                }
                None => Configuration::all_present(env.map.len()),
            };
            plan_brm(&ctx, &config, &start, env.start, env.goal, &pcfg, &mut cache)?
        }
        PlannerArg::Brule => plan_brule(&ctx, &env.lepd, &start, env.start, env.goal, &pcfg, &mut rng, &mut cache)?,
        PlannerArg::BruleE => {
            plan_brule_e(&ctx, &env.lepd, &start, env.start, env.goal, &pcfg, size, &mut rng, &mut cache)?
        }
    };
    let wall = clock.elapsed().as_secs_f64();
    Ok(PathFile {
        nodes: result.path.nodes().to_vec(),
        planner: Some(planner.to_possible_value().expect("named").get_name().to_string()),
        size: Some(size),
        seed: Some(seed),
        score: Some(round_sig(result.score)),
        wall_time_s: Some(round_sig(wall)),
    })
}

pub fn eval(
    file: &EnvFile,
    path: &PathFile,
    samples: Option<usize>,
    seed: u64,
    configs: Option<&ConfigurationsFile>,
    cfg: &RunConfig,
) -> AppResult<f64> {
    let env = file.to_environment()?;
    let path = path.to_path()?;
    if path.start() != env.start {
        return Err(AppError::field(
            "nodes",
            format!("path starts at node {} but the environment starts at {}", path.start(), env.start),
        ));
    }
    let models = cfg.models.to_models()?;
    let start = env.start_belief(cfg.models.initial_cov()?);
    let pcfg = cfg.planner.to_config(1, cfg.experiment.eval_samples.max(1))?;
    let ctx = PlanningContext::new(&env.roadmap, &env.map, &models)?;
    let explicit = configs.map(|c| c.to_configurations(env.map.len())).transpose()?;
    let source = match &explicit {
        Some(c) => EvalConfigs::Explicit(c),
        None => {
            let n = samples.unwrap_or(pcfg.eval_samples);
            if n == 0 {
                return Err(AppError::field("samples", "must be at least 1"));
            }
            EvalConfigs::Sampled(n)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(evaluate_path(
        &ctx,
        &path,
        &env.lepd,
        &start,
        &pcfg.region()?,
        source,
        &mut rng,
        &mut TransferCache::new(),
    )?)
}

fn is_default_batch(cfg: &RunConfig) -> bool {
    let d = RunConfig::default().experiment;
    let x = &cfg.experiment;
    x.batch == d.batch && x.p_z == d.p_z && x.p_l == d.p_l
}

pub fn experiment(cfg: &RunConfig, seed: Option<u64>, out: &std::path::Path, jobs: usize) -> AppResult<()> {
    if jobs == 0 {
        return Err(AppError::field("jobs", "must be at least 1"));
    }
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let setup = ExperimentSetup::from_config(cfg, seed)?;
    let envs = generate_batch(&setup)?;
    let trials = run_experiment(&setup, &envs, jobs)?;
    fs::create_dir_all(out).map_err(|e| AppError::io(out, e))?;
    let csv_path = out.join(&cfg.experiment.csv_name);
    let f = fs::File::create(&csv_path).map_err(|e| AppError::io(&csv_path, e))?;
    write_csv(&trials, std::io::BufWriter::new(f))?;
    let summary = summarize(&setup, &envs, &trials, is_default_batch(cfg));
    write_json(&out.join(&cfg.experiment.summary_name), &summary)?;
    eprintln!(
        "{} environments, {} trials -> {}",
        envs.len(),
        trials.len(),
        csv_path.display()
    );
    Ok(())
}
