use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::EnvConfig;
use crate::error::{Error, Result};
use crate::goalspace::{Plane, TransformSpec};
use crate::hac::{Algorithm, HacConfig};
use crate::rl::{DdpgHyper, HerStrategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HacSettings {
    pub horizon: usize,
    pub subgoal_test_rate: f64,
    pub subgoal_penalty: f64,
    pub master_offset_bound: f64,
}

impl Default for HacSettings {
    fn default() -> Self {
        Self {
            horizon: 10,
            subgoal_test_rate: 0.3,
            subgoal_penalty: -10.0,
            master_offset_bound: 0.1,
        }
    }
}

/// Parameter swept by a scan; points are evenly spaced over `[start, end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScanKind {
    RotationAngle {
        plane: Plane,
        n_points: usize,
        start: f64,
        end: f64,
    },
    NoiseSigma {
        n_points: usize,
        start: f64,
        end: f64,
    },
}

impl ScanKind {
    pub fn n_points(&self) -> usize {
        match self {
            ScanKind::RotationAngle { n_points, .. } | ScanKind::NoiseSigma { n_points, .. } => *n_points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let (n, a, b) = match *self {
            ScanKind::RotationAngle { n_points, start, end, .. } => (n_points, start, end),
            ScanKind::NoiseSigma { n_points, start, end } => (n_points, start, end),
        };
        (0..n)
            .map(|i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect()
    }

    pub fn parameter_name(&self) -> &'static str {
        match self {
            ScanKind::RotationAngle { .. } => "angle",
            ScanKind::NoiseSigma { .. } => "sigma",
        }
    }

    /// Substitutes `value` into both goal-space transforms.
    pub fn apply(&self, base: &ExperimentConfig, value: f64) -> ExperimentConfig {
        let mut cfg = base.clone();
        match *self {
            ScanKind::RotationAngle { plane, .. } => {
                cfg.f_m = cfg.f_m.with_rotation(plane, value);
                cfg.f_s = cfg.f_s.with_rotation(plane, value);
            }
            ScanKind::NoiseSigma { .. } => {
                cfg.f_m = cfg.f_m.with_noise(value);
                cfg.f_s = cfg.f_s.with_noise(value);
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points() < 2 {
            return Err(Error::config("a scan needs at least 2 points"));
        }
        let (a, b) = match *self {
            ScanKind::RotationAngle { start, end, .. } | ScanKind::NoiseSigma { start, end, .. } => (start, end),
        };
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::config("scan range must be finite"));
        }
        if matches!(self, ScanKind::NoiseSigma { .. }) && (a < 0.0 || b < 0.0) {
            return Err(Error::config("noise sigma must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub kind: ScanKind,
    pub base: ExperimentConfig,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        self.base.validate()
    }
}

fn default_name() -> String {
    "experiment".to_string()
}

fn default_trials() -> usize {
    10
}

fn default_epochs() -> usize {
    60
}

fn default_episodes() -> usize {
    50
}

fn default_eval() -> usize {
    20
}

/// One file fully specifies an experiment. Goal-space transforms are lists of
/// primitives applied in order; an empty list is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub algorithm: Algorithm,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_episodes")]
    pub episodes_per_epoch: usize,
    #[serde(default = "default_eval")]
    pub eval_episodes: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub hyper: DdpgHyper,
    #[serde(default)]
    pub her: HerStrategy,
    #[serde(default)]
    pub hac: HacSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanKind>,
    #[serde(default, with = "transform_list")]
    pub f_m: TransformSpec,
    #[serde(default, with = "transform_list")]
    pub f_s: TransformSpec,
}

mod transform_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::goalspace::TransformSpec;

    pub fn serialize<S: Serializer>(spec: &TransformSpec, s: S) -> Result<S::Ok, S::Error> {
        spec.primitives().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TransformSpec, D::Error> {
        Ok(TransformSpec::compose(Vec::deserialize(d)?))
    }
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            name: default_name(),
            algorithm,
            trials: default_trials(),
            epochs: default_epochs(),
            episodes_per_epoch: default_episodes(),
            eval_episodes: default_eval(),
            base_seed: 0,
            env: EnvConfig::default(),
            hyper: DdpgHyper::default(),
            her: HerStrategy::default(),
            hac: HacSettings::default(),
            scan: None,
            f_m: TransformSpec::Identity,
            f_s: TransformSpec::Identity,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("trials", self.trials),
            ("epochs", self.epochs),
            ("episodes_per_epoch", self.episodes_per_epoch),
            ("eval_episodes", self.eval_episodes),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        self.env.validate()?;
        self.hyper.validate()?;
        self.her.validate()?;
        self.hac_config().validate()?;
        if let Some(scan) = &self.scan {
            scan.validate()?;
        }
        Ok(())
    }

    pub fn seed_for(&self, trial_index: usize) -> u64 {
        self.base_seed.wrapping_add(trial_index as u64)
    }

    pub fn hac_config(&self) -> HacConfig {
        HacConfig {
            levels: self.algorithm.levels(),
            horizon: self.hac.horizon,
            subgoal_test_rate: self.hac.subgoal_test_rate,
            subgoal_penalty: self.hac.subgoal_penalty,
            master_offset_bound: self.hac.master_offset_bound,
            f_m: self.f_m.clone(),
            f_s: self.f_s.clone(),
        }
    }

    /// Same goal-space perturbation in both levels.
    pub fn with_transform(mut self, spec: TransformSpec) -> Self {
        self.f_m = spec.clone();
        self.f_s = spec;
        self
    }

    pub fn scan_config(&self) -> Result<ScanConfig> {
        let kind = self
            .scan
            .clone()
            .ok_or_else(|| Error::config("config has no [scan] section"))?;
        let mut base = self.clone();
        base.scan = None;
        Ok(ScanConfig { kind, base })
    }

    /// `her/baseline`, `hac/rot(xy,0.785)`, ...
    pub fn label(&self) -> String {
        let f = if self.f_m == self.f_s {
            self.f_s.label()
        } else {
            format!("m:{} s:{}", self.f_m.label(), self.f_s.label())
        };
        format!("{}/{}", self.algorithm.name(), f)
    }
}
