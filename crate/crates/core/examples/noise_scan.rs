//! HER under goal-space noise swept by signal-to-noise ratio.
//!
//! cargo run --release --example noise_scan

use goalspace_lab::envs::EnvConfig;
use goalspace_lab::experiment::{final_success, run_many, ExperimentConfig};
use goalspace_lab::goalspace::{sigma_for_snr_db, signal_power, TransformSpec};
use goalspace_lab::hac::Algorithm;
use rand::SeedableRng;

fn main() -> goalspace_lab::Result<()> {
    let env = EnvConfig::default();
    let mut rng = goalspace_lab::LabRng::seed_from_u64(0);
    let goals: Vec<Vec<f64>> = (0..20_000).map(|_| env.reset(&mut rng).1 .0.to_vec()).collect();
    let power = signal_power(&goals)?;

    let mut base = ExperimentConfig::new(Algorithm::Her);
    base.trials = 3;
    base.epochs = 30;
    base.episodes_per_epoch = 10;
    base.hyper.batch_size = 64;
    base.hyper.hidden_layers = vec![32, 32];

    let snrs = [18.75, 12.73, 6.71];
    let configs: Vec<ExperimentConfig> = snrs
        .iter()
        .map(|&db| base.clone().with_transform(TransformSpec::noise(sigma_for_snr_db(power, db))))
        .collect();
    for (db, r) in snrs.iter().zip(run_many(&configs, 1)?) {
        println!("{db:5.2} dB ({}): final median {:.2}", r.config.f_s.label(), final_success(&r.aggregate));
    }
    Ok(())
}
