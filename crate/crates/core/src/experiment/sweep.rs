use std::f64::consts::FRAC_PI_4;

use super::config::{ExperimentConfig, ScanConfig};
use super::trial::{run_many, ExperimentResult};
use crate::error::Result;
use crate::goalspace::{Plane, TransformSpec};
use crate::hac::Algorithm;

/// A goal-space perturbation applied identically to both levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    /// File-name friendly, e.g. `rotation_noise`.
    pub id: String,
    /// Legend text, e.g. `(v) rotation + noise`.
    pub legend: String,
    pub spec: TransformSpec,
}

/// Baseline, the three single perturbations and their four combinations.
pub fn compare_conditions() -> Vec<Condition> {
    let rot = TransformSpec::rotation(Plane::Xy, FRAC_PI_4);
    let noise = TransformSpec::noise(0.01);
    let extra = TransformSpec::extra_factors(1, 0.0);
    let table: [(&str, &[&TransformSpec]); 8] = [
        ("baseline", &[]),
        ("rotation", &[&rot]),
        ("noise", &[&noise]),
        ("extra", &[&extra]),
        ("rotation_noise", &[&rot, &noise]),
        ("rotation_extra", &[&rot, &extra]),
        ("noise_extra", &[&extra, &noise]),
        ("rotation_noise_extra", &[&rot, &extra, &noise]),
    ];
    const ROMAN: [&str; 8] = ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii"];
    table
        .iter()
        .zip(ROMAN)
        .map(|((id, parts), numeral)| Condition {
            id: id.to_string(),
            legend: format!("({numeral}) {}", id.replace('_', " + ")),
            spec: TransformSpec::compose(parts.iter().map(|p| (*p).clone()).collect()),
        })
        .collect()
}

/// Every condition under both algorithms, HER first.
pub fn compare(base: &ExperimentConfig, jobs: usize) -> Result<Vec<(Algorithm, Condition, ExperimentResult)>> {
    let mut keys = Vec::new();
    let mut configs = Vec::new();
    for alg in [Algorithm::Her, Algorithm::Hac] {
        for cond in compare_conditions() {
            let mut cfg = base.clone().with_transform(cond.spec.clone());
            cfg.algorithm = alg;
            cfg.scan = None;
            cfg.name = format!("{}_{}", alg.name(), cond.id);
            configs.push(cfg);
            keys.push((alg, cond));
        }
    }
    let results = run_many(&configs, jobs)?;
    Ok(keys
        .into_iter()
        .zip(results)
        .map(|((a, c), r)| (a, c, r))
        .collect())
}

#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub value: f64,
    pub result: ExperimentResult,
}

/// One full experiment per scan value, all sharing the base seeds.
pub fn run_scan(scan: &ScanConfig, jobs: usize) -> Result<Vec<ScanPoint>> {
    scan.validate()?;
    let values = scan.kind.values();
    let configs: Vec<ExperimentConfig> = values.iter().map(|&v| scan.kind.apply(&scan.base, v)).collect();
    let results = run_many(&configs, jobs)?;
    Ok(values
        .into_iter()
        .zip(results)
        .map(|(value, result)| ScanPoint { value, result })
        .collect())
}
