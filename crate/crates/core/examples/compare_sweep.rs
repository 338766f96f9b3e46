//! The eight goal-space conditions under HER and HAC, written as CSV and SVG.
//!
//! cargo run --release --example compare_sweep -- [out-dir]

use std::path::PathBuf;

use goalspace_lab::experiment::{compare, epochs_to_threshold, final_success, write_compare, ExperimentConfig};
use goalspace_lab::hac::Algorithm;

fn main() -> goalspace_lab::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "compare-out".into()));
    let mut base = ExperimentConfig::new(Algorithm::Her);
    base.trials = 2;
    base.epochs = 15;
    base.episodes_per_epoch = 10;
    base.eval_episodes = 10;
    base.hyper.batch_size = 64;
    base.hyper.hidden_layers = vec![32, 32];

    let results = compare(&base, 1)?;
    for (alg, cond, r) in &results {
        println!(
            "{:<4} {:<28} final {:.2}  e80 {:?}",
            alg.name(),
            cond.legend,
            final_success(&r.aggregate),
            epochs_to_threshold(&r.aggregate.medians(), 0.8)
        );
    }
    let files = write_compare(&results, &out)?;
    println!("wrote {} files under {}", files.len(), out.display());
    Ok(())
}
