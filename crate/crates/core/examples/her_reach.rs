//! Single-level DDPG with hindsight relabeling on reach.
//!
//! cargo run --release --example her_reach

use goalspace_lab::experiment::{epochs_to_threshold, run_experiment, ExperimentConfig};
use goalspace_lab::hac::Algorithm;

fn main() -> goalspace_lab::Result<()> {
    let mut cfg = ExperimentConfig::new(Algorithm::Her);
    cfg.trials = 3;
    cfg.epochs = 25;
    cfg.episodes_per_epoch = 10;
    cfg.hyper.batch_size = 64;
    cfg.hyper.hidden_layers = vec![32, 32];

    let result = run_experiment(&cfg, 1)?;
    for t in &result.trials {
        println!("trial {} seed {} ({:.1}s): {:?}", t.trial, t.seed, t.wall_time_secs, t.success_rates);
    }
    for e in &result.aggregate.epochs {
        println!(
            "epoch {:2} steps {:6}  median {:.2}  [{:.2}, {:.2}]",
            e.epoch, e.env_steps, e.median, e.q25, e.q75
        );
    }
    println!("median reaches 0.8 at epoch {:?}", epochs_to_threshold(&result.aggregate.medians(), 0.8));
    Ok(())
}
