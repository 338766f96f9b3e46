//! Goal-space modification functions applied to ground-truth goal factors:
//! plane rotations, additive Gaussian noise, appended constant factors, and
//! ordered compositions of those.

use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::envs::GoalVector;
use crate::error::{check_dim, Error, Result};

/// Center of the unit-cube workspace; default pivot of rotations.
pub const WORKSPACE_CENTER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    Xy,
    Yz,
    Xz,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Xy, Plane::Yz, Plane::Xz];

    pub fn axes(self) -> (usize, usize) {
        match self {
            Plane::Xy => (0, 1),
            Plane::Yz => (1, 2),
            Plane::Xz => (0, 2),
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Plane::Xy => "xy",
            Plane::Yz => "yz",
            Plane::Xz => "xz",
        })
    }
}

fn default_center() -> f64 {
    WORKSPACE_CENTER
}

fn default_extra_value() -> f64 {
    0.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformSpec {
    #[default]
    Identity,
    /// Rotation by `angle` radians within `plane`, pivoting on `center` in both axes.
    Rotation {
        plane: Plane,
        angle: f64,
        #[serde(default = "default_center")]
        center: f64,
    },
    /// Additive isotropic Gaussian noise, redrawn on every evaluation.
    Noise { sigma: f64 },
    /// Appends `count` copies of `value`.
    ExtraFactors {
        count: usize,
        #[serde(default = "default_extra_value")]
        value: f64,
    },
    /// Applied left to right.
    Compose { parts: Vec<TransformSpec> },
}

impl TransformSpec {
    pub fn rotation(plane: Plane, angle: f64) -> Self {
        TransformSpec::Rotation {
            plane,
            angle,
            center: WORKSPACE_CENTER,
        }
    }

    pub fn noise(sigma: f64) -> Self {
        TransformSpec::Noise { sigma }
    }

    pub fn extra_factors(count: usize, value: f64) -> Self {
        TransformSpec::ExtraFactors { count, value }
    }

    /// Composition of `parts`, collapsing trivial cases.
    pub fn compose(parts: Vec<TransformSpec>) -> Self {
        let mut flat: Vec<TransformSpec> = parts
            .into_iter()
            .flat_map(TransformSpec::into_primitives)
            .collect();
        match flat.len() {
            0 => TransformSpec::Identity,
            1 => flat.pop().expect("one element"),
            _ => TransformSpec::Compose { parts: flat },
        }
    }

    /// Flattened primitive list, identities dropped.
    pub fn into_primitives(self) -> Vec<TransformSpec> {
        match self {
            TransformSpec::Identity => Vec::new(),
            TransformSpec::Compose { parts } => parts
                .into_iter()
                .flat_map(TransformSpec::into_primitives)
                .collect(),
            other => vec![other],
        }
    }

    pub fn primitives(&self) -> Vec<TransformSpec> {
        self.clone().into_primitives()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TransformSpec::Identity => Ok(()),
            TransformSpec::Rotation { angle, center, .. } => {
                if !(0.0..TAU).contains(angle) {
                    return Err(Error::config(format!("rotation angle {angle} outside [0, 2pi)")));
                }
                if !center.is_finite() {
                    return Err(Error::config("rotation center must be finite"));
                }
                Ok(())
            }
            TransformSpec::Noise { sigma } => {
                if sigma.is_finite() && *sigma >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::config(format!("noise sigma must be finite and >= 0, got {sigma}")))
                }
            }
            TransformSpec::ExtraFactors { count, value } => {
                if *count == 0 {
                    return Err(Error::config("extra_factors count must be positive"));
                }
                if !value.is_finite() {
                    return Err(Error::config("extra factor value must be finite"));
                }
                Ok(())
            }
            TransformSpec::Compose { parts } => {
                if parts.is_empty() {
                    return Err(Error::config("composition must list at least one transform"));
                }
                parts.iter().try_for_each(TransformSpec::validate)
            }
        }
    }

    pub fn output_dim(&self, input_dim: usize) -> Result<usize> {
        if input_dim == 0 {
            return Err(Error::config("goal dimension must be positive"));
        }
        match self {
            TransformSpec::Identity | TransformSpec::Noise { .. } => Ok(input_dim),
            TransformSpec::Rotation { plane, .. } => {
                let (_, j) = plane.axes();
                if j >= input_dim {
                    return Err(Error::config(format!(
                        "rotation in the {plane} plane needs at least {} goal factors, got {input_dim}",
                        j + 1
                    )));
                }
                Ok(input_dim)
            }
            TransformSpec::ExtraFactors { count, .. } => Ok(input_dim + count),
            TransformSpec::Compose { parts } => parts
                .iter()
                .try_fold(input_dim, |d, part| part.output_dim(d)),
        }
    }

    /// `true` when no primitive draws noise, so equal inputs give equal outputs.
    pub fn is_deterministic(&self) -> bool {
        self.noise_sigma() == 0.0
    }

    /// Combined per-axis standard deviation of all noise primitives.
    pub fn noise_sigma(&self) -> f64 {
        self.primitives()
            .iter()
            .map(|p| match p {
                TransformSpec::Noise { sigma } => sigma * sigma,
                _ => 0.0,
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn apply<R: Rng + ?Sized>(&self, g: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let mut out = g.to_vec();
        self.apply_in_place(&mut out, rng)?;
        Ok(out)
    }

    pub fn apply_goal<R: Rng + ?Sized>(&self, g: &GoalVector, rng: &mut R) -> Result<Vec<f64>> {
        self.apply(g.as_slice(), rng)
    }

    fn apply_in_place<R: Rng + ?Sized>(&self, v: &mut Vec<f64>, rng: &mut R) -> Result<()> {
        match self {
            TransformSpec::Identity => {}
            TransformSpec::Rotation {
                plane,
                angle,
                center,
            } => {
                self.output_dim(v.len())?;
                let (i, j) = plane.axes();
                let (s, c) = angle.sin_cos();
                let (u, w) = (v[i] - center, v[j] - center);
                v[i] = center + c * u - s * w;
                v[j] = center + s * u + c * w;
            }
            TransformSpec::Noise { sigma } => {
                if *sigma > 0.0 {
                    for x in v.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *x += sigma * z;
                    }
                }
            }
            TransformSpec::ExtraFactors { count, value } => {
                v.extend(std::iter::repeat_n(*value, *count));
            }
            TransformSpec::Compose { parts } => {
                for part in parts {
                    part.apply_in_place(v, rng)?;
                }
            }
        }
        Ok(())
    }

    /// Replaces (or inserts) the rotation primitive, keeping the canonical
    /// order rotation, extra factors, noise.
    pub fn with_rotation(&self, plane: Plane, angle: f64) -> Self {
        let mut parts: Vec<_> = self
            .primitives()
            .into_iter()
            .filter(|p| !matches!(p, TransformSpec::Rotation { .. }))
            .collect();
        parts.insert(0, TransformSpec::rotation(plane, angle));
        TransformSpec::compose(parts)
    }

    /// Replaces (or appends) the noise primitive.
    pub fn with_noise(&self, sigma: f64) -> Self {
        let mut parts: Vec<_> = self
            .primitives()
            .into_iter()
            .filter(|p| !matches!(p, TransformSpec::Noise { .. }))
            .collect();
        parts.push(TransformSpec::noise(sigma));
        TransformSpec::compose(parts)
    }

    /// Short human-readable label, e.g. `rot(xy,0.785)+extra(1)+noise(0.01)`.
    pub fn label(&self) -> String {
        let parts = self.primitives();
        if parts.is_empty() {
            return "baseline".to_string();
        }
        parts
            .iter()
            .map(|p| match p {
                TransformSpec::Rotation { plane, angle, .. } => format!("rot({plane},{angle:.3})"),
                TransformSpec::Noise { sigma } => format!("noise({sigma})"),
                TransformSpec::ExtraFactors { count, value } if *value == 0.0 => {
                    format!("extra({count})")
                }
                TransformSpec::ExtraFactors { count, value } => format!("extra({count}x{value})"),
                TransformSpec::Identity | TransformSpec::Compose { .. } => unreachable!(),
            })
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Mean over axes of the unbiased per-axis sample variance.
pub fn signal_power(samples: &[Vec<f64>]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::UndefinedSnr("need at least two goal samples"));
    }
    let dim = samples[0].len();
    for s in samples {
        check_dim("goal sample", dim, s.len())?;
    }
    let n = samples.len() as f64;
    let mut total = 0.0;
    for axis in 0..dim {
        let mean = samples.iter().map(|s| s[axis]).sum::<f64>() / n;
        total += samples.iter().map(|s| (s[axis] - mean).powi(2)).sum::<f64>() / (n - 1.0);
    }
    Ok(total / dim as f64)
}

/// `10 log10(P_signal / sigma^2)` for the noise carried by `spec`.
pub fn snr_db(spec: &TransformSpec, goal_samples: &[Vec<f64>]) -> Result<f64> {
    let sigma = spec.noise_sigma();
    if sigma <= 0.0 {
        return Err(Error::UndefinedSnr("transform carries no noise"));
    }
    let p_signal = signal_power(goal_samples)?;
    if p_signal <= 0.0 {
        return Err(Error::UndefinedSnr("goal samples have zero variance"));
    }
    Ok(10.0 * (p_signal / (sigma * sigma)).log10())
}

/// Noise standard deviation giving `db` decibels against `signal_power`.
pub fn sigma_for_snr_db(signal_power: f64, db: f64) -> f64 {
    (signal_power / 10f64.powf(db / 10.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    fn origin_rotation(plane: Plane, angle: f64) -> TransformSpec {
        TransformSpec::Rotation {
            plane,
            angle,
            center: 0.0,
        }
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn output_dims() {
        assert_eq!(TransformSpec::Identity.output_dim(3).unwrap(), 3);
        assert_eq!(TransformSpec::extra_factors(1, 0.0).output_dim(3).unwrap(), 4);
        let all = TransformSpec::compose(vec![
            TransformSpec::rotation(Plane::Xy, FRAC_PI_4),
            TransformSpec::extra_factors(1, 0.0),
            TransformSpec::noise(0.01),
        ]);
        assert_eq!(all.output_dim(3).unwrap(), 4);
        assert!(TransformSpec::rotation(Plane::Yz, 0.1).output_dim(2).is_err());
        assert_eq!(TransformSpec::rotation(Plane::Xy, 0.1).output_dim(2).unwrap(), 2);
    }

    #[test]
    fn quarter_and_eighth_turns() {
        let q = origin_rotation(Plane::Xy, FRAC_PI_2)
            .apply(&[1.0, 0.0, 0.0], &mut rng())
            .unwrap();
        assert!(close(&q, &[0.0, 1.0, 0.0], 1e-15));
        let e = origin_rotation(Plane::Xy, FRAC_PI_4)
            .apply(&[1.0, 0.0, 0.0], &mut rng())
            .unwrap();
        assert!(close(&e, &[SQRT_2 / 2.0, SQRT_2 / 2.0, 0.0], 1e-15));
    }

    #[test]
    fn centered_rotation_fixes_workspace_center() {
        let c = TransformSpec::rotation(Plane::Xz, 1.0)
            .apply(&[0.5, 0.2, 0.5], &mut rng())
            .unwrap();
        assert!(close(&c, &[0.5, 0.2, 0.5], 1e-15));
    }

    #[test]
    fn extra_factor_appends() {
        let out = TransformSpec::extra_factors(1, 0.0)
            .apply(&[0.1, 0.2, 0.3], &mut rng())
            .unwrap();
        assert_eq!(out, vec![0.1, 0.2, 0.3, 0.0]);
    }

    #[test]
    fn identity_is_bitwise() {
        let g = [0.123456789, -0.0, 1e-300];
        let out = TransformSpec::Identity.apply(&g, &mut rng()).unwrap();
        assert!(out.iter().zip(&g).all(|(a, b)| a.to_bits() == b.to_bits()));
        let zero_noise = TransformSpec::noise(0.0).apply(&g, &mut rng()).unwrap();
        assert!(zero_noise.iter().zip(&g).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn noise_is_unbiased() {
        let spec = TransformSpec::noise(0.01);
        let g = [0.2, 0.5, 0.9];
        let n = 1_000_000;
        let mut r = rng();
        let mut sum = [0.0; 3];
        for _ in 0..n {
            let out = spec.apply(&g, &mut r).unwrap();
            for i in 0..3 {
                sum[i] += out[i];
            }
        }
        let tol = 3.0 * 0.01 / (n as f64).sqrt();
        for i in 0..3 {
            assert!((sum[i] / n as f64 - g[i]).abs() < tol);
        }
    }

    #[test]
    fn noise_squared_norm_mean() {
        let s = 0.02;
        let spec = TransformSpec::noise(s);
        let g = [0.4, 0.4, 0.4];
        let n = 100_000;
        let mut r = rng();
        let mean = (0..n)
            .map(|_| {
                let out = spec.apply(&g, &mut r).unwrap();
                out.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean / (3.0 * s * s) - 1.0).abs() < 0.05);
    }

    #[test]
    fn validation() {
        assert!(TransformSpec::rotation(Plane::Xy, TAU).validate().is_err());
        assert!(TransformSpec::rotation(Plane::Xy, -0.1).validate().is_err());
        assert!(TransformSpec::noise(f64::NAN).validate().is_err());
        assert!(TransformSpec::extra_factors(0, 0.0).validate().is_err());
        assert!(TransformSpec::Compose { parts: vec![] }.validate().is_err());
        assert!(TransformSpec::noise(0.0).validate().is_ok());
    }

    #[test]
    fn dimension_mismatch_on_apply() {
        assert!(TransformSpec::rotation(Plane::Xz, 0.3)
            .apply(&[0.1, 0.2], &mut rng())
            .is_err());
    }

    #[test]
    fn snr_examples() {
        // signal variance equal to noise variance
        let samples = vec![vec![-0.01, 0.01], vec![0.01, -0.01]];
        let p = signal_power(&samples).unwrap();
        let db = snr_db(&TransformSpec::noise(p.sqrt()), &samples).unwrap();
        assert!(db.abs() < 1e-12);

        // sigma 0.01 against per-axis signal std 0.0866
        let db = 10.0 * ((0.0866f64 * 0.0866) / (0.01 * 0.01)).log10();
        assert!((db - 18.75).abs() < 0.01, "{db}");
        assert!((sigma_for_snr_db(0.0866 * 0.0866, 18.75) - 0.01).abs() < 1e-4);

        let mut r = rng();
        let goals: Vec<Vec<f64>> = (0..100)
            .map(|_| vec![r.random(), r.random(), r.random()])
            .collect();
        let a = snr_db(&TransformSpec::noise(0.02), &goals).unwrap();
        let b = snr_db(&TransformSpec::noise(0.04), &goals).unwrap();
        assert!((a - b - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn snr_errors() {
        let flat = vec![vec![0.3, 0.3], vec![0.3, 0.3]];
        assert!(matches!(
            snr_db(&TransformSpec::noise(0.1), &flat),
            Err(Error::UndefinedSnr(_))
        ));
        assert!(snr_db(&TransformSpec::Identity, &[vec![0.0], vec![1.0]]).is_err());
        assert!(snr_db(&TransformSpec::noise(0.1), &[vec![0.0]]).is_err());
    }

    #[test]
    fn canonical_substitution() {
        let base = TransformSpec::compose(vec![
            TransformSpec::extra_factors(1, 0.0),
            TransformSpec::noise(0.01),
        ]);
        let rotated = base.with_rotation(Plane::Yz, 0.2);
        assert_eq!(
            rotated.primitives(),
            vec![
                TransformSpec::rotation(Plane::Yz, 0.2),
                TransformSpec::extra_factors(1, 0.0),
                TransformSpec::noise(0.01),
            ]
        );
        let renoised = rotated.with_noise(0.05);
        assert_eq!(renoised.noise_sigma(), 0.05);
        assert_eq!(renoised.primitives().len(), 3);
        assert_eq!(TransformSpec::Identity.with_noise(0.0), TransformSpec::noise(0.0));
    }

    proptest! {
        #[test]
        fn rotation_is_isometry(
            plane_idx in 0usize..3,
            angle in 0.0..TAU,
            a in prop::array::uniform3(-1.0f64..2.0),
            b in prop::array::uniform3(-1.0f64..2.0),
        ) {
            let spec = TransformSpec::rotation(Plane::ALL[plane_idx], angle);
            let ra = spec.apply(&a, &mut rng()).unwrap();
            let rb = spec.apply(&b, &mut rng()).unwrap();
            let before = crate::envs::distance(&a, &b);
            let after = crate::envs::distance(&ra, &rb);
            prop_assert!((before - after).abs() < 1e-9);
        }

        #[test]
        fn extra_factors_preserve_distance(
            count in 1usize..4,
            value in -2.0f64..2.0,
            a in prop::array::uniform3(0.0f64..1.0),
            b in prop::array::uniform3(0.0f64..1.0),
        ) {
            let spec = TransformSpec::extra_factors(count, value);
            let ea = spec.apply(&a, &mut rng()).unwrap();
            let eb = spec.apply(&b, &mut rng()).unwrap();
            prop_assert_eq!(crate::envs::distance(&a, &b), crate::envs::distance(&ea, &eb));
        }

        #[test]
        fn composed_dims_fold(count_a in 1usize..3, count_b in 1usize..3, d in 3usize..6) {
            let a = TransformSpec::extra_factors(count_a, 0.0);
            let b = TransformSpec::compose(vec![
                TransformSpec::rotation(Plane::Xz, 0.5),
                TransformSpec::extra_factors(count_b, 1.0),
            ]);
            let both = TransformSpec::compose(vec![a.clone(), b.clone()]);
            prop_assert_eq!(
                both.output_dim(d).unwrap(),
                b.output_dim(a.output_dim(d).unwrap()).unwrap()
            );
        }
    }
}
