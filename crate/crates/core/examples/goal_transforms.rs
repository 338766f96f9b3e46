//! Goal-space transforms: rotation, unused factors, noise, and their SNR.
//!
//! cargo run --release --example goal_transforms

use std::f64::consts::FRAC_PI_4;

use goalspace_lab::envs::{distance, EnvConfig};
use goalspace_lab::goalspace::{sigma_for_snr_db, signal_power, snr_db, Plane, TransformSpec};
use rand::SeedableRng;

fn main() -> goalspace_lab::Result<()> {
    let mut rng = goalspace_lab::LabRng::seed_from_u64(0);
    let g = [0.9, 0.5, 0.2];
    let specs = [
        TransformSpec::rotation(Plane::Xy, FRAC_PI_4),
        TransformSpec::extra_factors(1, 0.0),
        TransformSpec::noise(0.01),
        TransformSpec::compose(vec![
            TransformSpec::rotation(Plane::Xy, FRAC_PI_4),
            TransformSpec::extra_factors(1, 0.0),
            TransformSpec::noise(0.01),
        ]),
    ];
    for spec in &specs {
        let out = spec.apply(&g, &mut rng)?;
        println!("{:<36} {:?} -> {:.4?}", spec.label(), g, out);
    }

    let rot = &specs[0];
    let (a, b) = ([0.1, 0.2, 0.3], [0.7, 0.4, 0.9]);
    println!(
        "distance before {:.6}, after rotation {:.6}",
        distance(&a, &b),
        distance(&rot.apply(&a, &mut rng)?, &rot.apply(&b, &mut rng)?)
    );

    let env = EnvConfig::default();
    let goals: Vec<Vec<f64>> = (0..50_000).map(|_| env.reset(&mut rng).1 .0.to_vec()).collect();
    let power = signal_power(&goals)?;
    println!("goal signal power {power:.4}");
    for db in [18.75, 12.73, 6.71] {
        let sigma = sigma_for_snr_db(power, db);
        let back = snr_db(&TransformSpec::noise(sigma), &goals)?;
        println!("{db:5.2} dB <-> sigma {sigma:.4} ({back:.2} dB)");
    }
    println!("sigma 0.01 on these goals: {:.2} dB", snr_db(&TransformSpec::noise(0.01), &goals)?);
    Ok(())
}
