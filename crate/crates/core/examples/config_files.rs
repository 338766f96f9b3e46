//! Loading, overriding and saving experiment files.
//!
//! cargo run --release --example config_files

use goalspace_lab::experiment::ExperimentConfig;

fn main() -> goalspace_lab::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .expect("configs directory")
        .map(|e| e.expect("entry").path())
        .collect();
    names.sort();
    for path in names {
        let cfg = ExperimentConfig::load(&path)?;
        let scan = cfg.scan.as_ref().map_or(String::new(), |s| format!(" scan over {} points", s.n_points()));
        println!("{:<32} {}{scan}", path.file_name().unwrap().to_string_lossy(), cfg.label());
    }

    let mut cfg = ExperimentConfig::load(format!("{dir}/reach_hac_rotated.toml"))?;
    cfg.trials = 2;
    let text = cfg.to_toml_string()?;
    assert_eq!(ExperimentConfig::from_toml_str(&text)?, cfg);
    println!("\n{text}");
    Ok(())
}
