use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use swarmplan_battle::HeuristicKind;
use swarmplan_core::scoring::Checkpoint;
use swarmplan_core::Inference;
use swarmplan_harness::{
    evaluate_policy, generalization_sweep, hyperparameter_search, standard_eval_seeds, train_experiment,
    write_sweep_csv, EnvKind, EvalSeeds, ExperimentConfig, HarnessError, LearnedPolicy, Policy, Report, Result,
    RunDir, Scenario, SearchFile,
};
use swarmplan_learner::EvalNoise;
use swarmplan_rescue::{closest_baseline, mvr_exact, RescueConfig, RescueEnv};

#[derive(Parser)]
#[command(name = "swarmplan", version, about = "Train and evaluate learned multi-agent task assignment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration into a fresh run directory.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a checkpoint on a scenario.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        scenario: String,
        /// JSON list of seeds, or {"standard": N}. Defaults to the 1000 standard seeds.
        #[arg(long)]
        seeds_file: Option<PathBuf>,
        /// Override the inference procedure stored in the checkpoint.
        #[arg(long)]
        inference: Option<String>,
        /// Evaluate greedily instead of with the training exploration.
        #[arg(long)]
        no_noise: bool,
    },
    /// Random hyperparameter search.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Evaluate a rescue checkpoint zero-shot on larger sizes.
    Generalize {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "2x4")]
        train: String,
        #[arg(long, value_delimiter = ',', default_value = "2x4,5x10,8x15")]
        test: Vec<String>,
        #[arg(long)]
        seeds_file: Option<PathBuf>,
        #[arg(long)]
        inference: Option<String>,
        #[arg(long)]
        no_noise: bool,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one instance with the reference policies.
    Oracle {
        #[arg(long, value_enum, default_value_t = OracleEnv::Rescue)]
        env: OracleEnv,
        #[arg(long)]
        size: String,
        #[arg(long)]
        seed: u64,
    },
    /// Win rates of a battle policy as CSV.
    BattleBench {
        #[arg(long)]
        scenario: String,
        /// c, wc, wcnok, wcnoknc, wcnoks, rand_nc or checkpoint.
        #[arg(long)]
        policy: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        inference: Option<String>,
        #[arg(long)]
        seeds_file: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleEnv {
    Rescue,
}

fn seeds(file: Option<&PathBuf>, default: usize) -> Result<Vec<u64>> {
    match file {
        Some(f) => EvalSeeds::from_file(f),
        None => Ok(standard_eval_seeds(default)),
    }
}

fn parse_inference(s: Option<&str>) -> Result<Option<Inference>> {
    s.map(|s| Inference::parse(s).ok_or_else(|| HarnessError::Config(format!("unknown inference procedure {s:?}"))))
        .transpose()
}

fn learned(checkpoint: &PathBuf, inference: Option<&str>, no_noise: bool) -> Result<LearnedPolicy> {
    let ck = Checkpoint::load(checkpoint)?;
    let mut p = LearnedPolicy::from_checkpoint(&ck, parse_inference(inference)?)?;
    if no_noise {
        p.noise = EvalNoise::OFF;
    }
    Ok(p)
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let name = config.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string();
            let dir = RunDir::create(&cfg.output_dir, &name)?;
            let out = train_experiment(&cfg, &dir)?;
            let scenario = cfg.scenario()?;
            let policy = Policy::Learned(LearnedPolicy::from_checkpoint(&Checkpoint::load(&out.checkpoint)?, None)?);
            eprintln!("run directory {}", out.run_dir.display());
            print_json(&Report::new(&policy, &scenario, &out.eval))
        }
        Command::Eval { checkpoint, scenario, seeds_file, inference, no_noise } => {
            let scenario = Scenario::parse(EnvKind::infer(&scenario), &scenario)?;
            let policy = Policy::Learned(learned(&checkpoint, inference.as_deref(), no_noise)?);
            let s = evaluate_policy(&policy, &scenario, &seeds(seeds_file.as_ref(), 1000)?)?;
            print_json(&Report::new(&policy, &scenario, &s))
        }
        Command::Sweep { spec } => {
            let f = SearchFile::load(&spec)?;
            let out = hyperparameter_search(&f.search, &f.base, &f.base.output_dir)?;
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["rank", "run_dir", "mean_return", "headline", "lr_value", "lr_policy", "sigma", "p", "n_steps", "lambda", "optimizer", "error"])?;
            for (rank, r) in out.ranked.iter().enumerate() {
                let opt = serde_json::to_value(r.a2c.optimizer)?;
                w.write_record([
                    (rank + 1).to_string(),
                    r.run_dir.display().to_string(),
                    r.score().map(|x| x.to_string()).unwrap_or_default(),
                    r.outcome.as_ref().map(|o| o.eval.headline().to_string()).unwrap_or_default(),
                    r.a2c.lr_value.to_string(),
                    r.a2c.lr_policy.to_string(),
                    r.a2c.sigma.to_string(),
                    r.a2c.p.to_string(),
                    r.a2c.n_steps.to_string(),
                    r.a2c.lambda.to_string(),
                    opt.as_str().unwrap_or_default().to_string(),
                    r.error.clone().unwrap_or_default(),
                ])?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Generalize { checkpoint, train, test, seeds_file, inference, no_noise, out } => {
            let policy = learned(&checkpoint, inference.as_deref(), no_noise)?;
            let train = Scenario::parse(EnvKind::Rescue, &train)?;
            let tests = test.iter().map(|t| Scenario::parse(EnvKind::Rescue, t)).collect::<Result<Vec<_>>>()?;
            let rows = generalization_sweep(&policy, &train, &tests, &seeds(seeds_file.as_ref(), 1000)?)?;
            match out {
                Some(path) => write_sweep_csv(&rows, std::fs::File::create(path)?),
                None => write_sweep_csv(&rows, std::io::stdout()),
            }
        }
        Command::Oracle { env: OracleEnv::Rescue, size, seed } => {
            let Scenario::Rescue { n, m } = Scenario::parse(EnvKind::Rescue, &size)? else { unreachable!() };
            let cfg = RescueConfig::new(n, m, seed);
            let mut env = RescueEnv::new(cfg.clone())?;
            let initial = env.state().clone();
            let baseline = env.run(closest_baseline)?;
            let mut env = RescueEnv::new(cfg)?;
            let plan = mvr_exact(env.state())?;
            let topline = env.run(|s| plan.assignment(s))?;
            print_json(&serde_json::json!({
                "size": format!("{n}x{m}"),
                "seed": seed,
                "state": initial,
                "baseline_episode_length": baseline,
                "topline_episode_length": topline,
                "topline_makespan": plan.makespan,
                "topline_routes": plan.routes,
            }))
        }
        Command::BattleBench { scenario, policy, checkpoint, inference, seeds_file, episodes } => {
            let scenario = Scenario::parse(EnvKind::Battle, &scenario)?;
            let policy = if policy == "checkpoint" {
                let path = checkpoint
                    .ok_or_else(|| HarnessError::Config("--policy checkpoint needs --checkpoint".into()))?;
                Policy::Learned(learned(&path, inference.as_deref(), false)?)
            } else {
                Policy::Heuristic(
                    HeuristicKind::parse(&policy)
                        .ok_or_else(|| HarnessError::Config(format!("unknown battle policy {policy:?}")))?,
                )
            };
            let s = evaluate_policy(&policy, &scenario, &seeds(seeds_file.as_ref(), episodes)?)?;
            let r = Report::new(&policy, &scenario, &s);
            let mut out = std::io::stdout().lock();
            writeln!(out, "scenario,policy,episodes,win_rate,mean_return,mean_windows,timeouts")?;
            writeln!(
                out,
                "{},{},{},{:.4},{:.6},{:.2},{}",
                r.scenario,
                r.policy,
                r.episodes,
                r.win_rate.unwrap_or(0.0),
                r.mean_return,
                r.mean_length,
                r.failures
            )?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
