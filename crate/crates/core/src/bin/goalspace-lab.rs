use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::bail;
use clap::{Args, Parser, Subcommand};

use goalspace_lab::envs::oracle_suite;
use goalspace_lab::experiment::{
    compare, epochs_to_threshold, final_success, run_experiment, run_scan, write_compare,
    write_experiment, write_scan, ExperimentConfig, ExperimentResult,
};
use goalspace_lab::nn::gradcheck::random_suite;

#[derive(Parser)]
#[command(name = "goalspace-lab", version, about = "HER/HAC goal-space perturbation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(ExperimentArgs),
    /// Sweep a rotation angle or noise sigma (needs a [scan] section).
    Scan(ExperimentArgs),
    /// Eight goal-space conditions under both HER and HAC.
    Compare(ExperimentArgs),
    /// Analytic vs finite-difference gradients on random networks.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Scripted controller on both tasks.
    Oracle {
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Base seed; trial i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Parallel trial workers.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl ExperimentArgs {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(e) = self.epochs {
            cfg.epochs = e;
        }
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn report(result: &ExperimentResult) {
    let agg = &result.aggregate;
    let e80 = epochs_to_threshold(&agg.medians(), 0.8)
        .map_or_else(|| "never".to_string(), |e| format!("{e:.1}"));
    println!(
        "{:<40} final median {:.3}  epochs to 0.8: {e80}  trials {}/{}",
        result.config.label(),
        final_success(agg),
        result.completed().count(),
        result.trials.len()
    );
    for t in result.trials.iter().filter(|t| t.aborted.is_some()) {
        println!("  trial {} (seed {}) aborted: {}", t.trial, t.seed, t.aborted.as_deref().unwrap_or(""));
    }
}

fn wrote(paths: &[PathBuf], out: &Path) {
    println!("wrote {} files to {}", paths.len(), out.display());
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let result = run_experiment(&cfg, args.jobs)?;
            report(&result);
            let stem = cfg.name.clone();
            wrote(&write_experiment(&result, &args.out, &stem)?, &args.out);
        }
        Command::Scan(args) => {
            let cfg = args.load()?;
            let scan = cfg.scan_config()?;
            let points = run_scan(&scan, args.jobs)?;
            for p in &points {
                print!("{}={:<8.4} ", scan.kind.parameter_name(), p.value);
                report(&p.result);
            }
            wrote(&write_scan(&points, &scan.kind, &args.out)?, &args.out);
        }
        Command::Compare(args) => {
            let cfg = args.load()?;
            let results = compare(&cfg, args.jobs)?;
            for (_, _, r) in &results {
                report(r);
            }
            wrote(&write_compare(&results, &args.out)?, &args.out);
        }
        Command::Gradcheck { instances, seed } => {
            let report = random_suite(instances, seed)?;
            let worst = report.max_relative_error();
            println!("instances: {instances}");
            println!("max relative error: {worst:.3e}");
            if !(worst < 1e-4) {
                println!("gradient check FAILED (tolerance 1e-4)");
                return Ok(false);
            }
        }
        Command::Oracle { episodes, seed } => {
            if episodes == 0 {
                bail!("episodes must be positive");
            }
            let r = oracle_suite(episodes, seed);
            println!("reach:      {}/{}", r.reach_successes, episodes);
            println!("pick_place: {}/{}", r.pick_place_successes, episodes);
            let ok = r.reach_successes == episodes && r.pick_place_successes * 100 >= 95 * episodes;
            if !ok {
                println!("oracle suite FAILED");
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
