//! HAC under progressive rotation of one goal-space plane.
//!
//! cargo run --release --example rotation_scan -- [xy|yz|xz]

use std::f64::consts::FRAC_PI_4;

use goalspace_lab::experiment::{final_success, run_scan, spearman, ExperimentConfig, ScanConfig, ScanKind};
use goalspace_lab::goalspace::Plane;
use goalspace_lab::hac::Algorithm;

fn main() -> goalspace_lab::Result<()> {
    let plane = match std::env::args().nth(1).as_deref() {
        Some("yz") => Plane::Yz,
        Some("xz") => Plane::Xz,
        _ => Plane::Xy,
    };
    let mut base = ExperimentConfig::new(Algorithm::Hac);
    base.trials = 3;
    base.epochs = 40;
    base.episodes_per_epoch = 10;
    base.hyper.batch_size = 64;
    base.hyper.hidden_layers = vec![32, 32];
    let scan = ScanConfig {
        kind: ScanKind::RotationAngle {
            plane,
            n_points: 5,
            start: 0.0,
            end: FRAC_PI_4,
        },
        base,
    };
    let points = run_scan(&scan, 1)?;
    let finals: Vec<f64> = points.iter().map(|p| final_success(&p.result.aggregate)).collect();
    for (p, f) in points.iter().zip(&finals) {
        println!("{plane} angle {:.3}: final median {f:.2}", p.value);
    }
    let angles: Vec<f64> = points.iter().map(|p| p.value).collect();
    println!("spearman(angle, final) = {:+.2}", spearman(&angles, &finals)?);
    Ok(())
}
