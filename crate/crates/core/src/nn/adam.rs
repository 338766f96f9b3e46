use ndarray::Zip;

use super::mlp::MlpParams;
use crate::error::{Error, Result};

/// Adam moments plus hyperparameters for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step_count: u64,
    pub first_moment: MlpParams,
    pub second_moment: MlpParams,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(like: &MlpParams, learning_rate: f64) -> Self {
        let mut zeros = like.clone();
        zeros.values_mut().for_each(|v| *v = 0.0);
        Self {
            step_count: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "invalid Adam hyperparameters: lr={}, beta1={}, beta2={}, eps={}",
                self.learning_rate, self.beta1, self.beta2, self.epsilon
            )))
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut MlpParams, gradients: &MlpParams) -> Result<()> {
        if !params.same_shape(gradients) || !params.same_shape(&self.first_moment) {
            return Err(Error::config("Adam step on mismatched parameter shapes"));
        }
        if let Some((i, g)) = gradients.values().enumerate().find(|(_, g)| !g.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient entry {i} is {g} after {} Adam steps",
                self.step_count
            )));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        let lr_m = self.learning_rate / (1.0 - b1.powi(t));
        let corr_v = 1.0 / (1.0 - b2.powi(t));

        let layers = params
            .layers
            .iter_mut()
            .zip(&gradients.layers)
            .zip(self.first_moment.layers.iter_mut().zip(self.second_moment.layers.iter_mut()));
        for ((p, g), (m, v)) in layers {
            let update = |p: &mut f64, &g: &f64, m: &mut f64, v: &mut f64| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p -= lr_m * *m / ((*v * corr_v).sqrt() + eps);
            };
            Zip::from(&mut p.weight)
                .and(&g.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .for_each(update);
            Zip::from(&mut p.bias)
                .and(&g.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(update);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::mlp::{Activation, MlpSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_spec() -> MlpSpec {
        MlpSpec::new(vec![1, 1], Activation::Relu, Activation::Linear).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let spec = MlpSpec::new(vec![3, 5, 2], Activation::Tanh, Activation::Linear).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params = MlpParams::init(&spec, &mut rng);
        let before = params.clone();
        let zeros = MlpParams::zeros(&spec);
        let mut adam = AdamState::new(&params, 1e-2);
        for _ in 0..5 {
            adam.step(&mut params, &zeros).unwrap();
        }
        assert_eq!(params, before);
        assert_eq!(adam.step_count, 5);
        assert!(adam.second_moment.values().all(|v| v == 0.0));
    }

    #[test]
    fn moments_decay_under_zero_gradient() {
        let spec = scalar_spec();
        let mut params = MlpParams::zeros(&spec);
        let mut g = MlpParams::zeros(&spec);
        g.layers[0].weight[[0, 0]] = 1.0;
        let mut adam = AdamState::new(&params, 1e-3);
        adam.step(&mut params, &g).unwrap();
        let m0 = adam.first_moment.layers[0].weight[[0, 0]];
        let v0 = adam.second_moment.layers[0].weight[[0, 0]];
        adam.step(&mut params, &MlpParams::zeros(&spec)).unwrap();
        assert!((adam.first_moment.layers[0].weight[[0, 0]] - 0.9 * m0).abs() < 1e-15);
        assert!((adam.second_moment.layers[0].weight[[0, 0]] - 0.999 * v0).abs() < 1e-15);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let spec = scalar_spec();
        for g in [3.0, -0.02] {
            let mut params = MlpParams::zeros(&spec);
            let mut grads = MlpParams::zeros(&spec);
            grads.layers[0].weight[[0, 0]] = g;
            let mut adam = AdamState::new(&params, 0.01);
            adam.step(&mut params, &grads).unwrap();
            let delta = params.layers[0].weight[[0, 0]];
            assert!((delta + 0.01 * f64::signum(g)).abs() < 1e-6, "delta {delta}");
        }
    }

    #[test]
    fn minimizes_quadratic() {
        let spec = scalar_spec();
        let mut params = MlpParams::zeros(&spec);
        params.layers[0].weight[[0, 0]] = 1.0;
        let mut adam = AdamState::new(&params, 0.05);
        for _ in 0..100 {
            let w = params.layers[0].weight[[0, 0]];
            let mut grads = MlpParams::zeros(&spec);
            grads.layers[0].weight[[0, 0]] = 2.0 * w;
            adam.step(&mut params, &grads).unwrap();
        }
        assert!(params.layers[0].weight[[0, 0]].abs() < 0.1);
    }

    #[test]
    fn non_finite_gradient_is_fatal() {
        let spec = scalar_spec();
        let mut params = MlpParams::zeros(&spec);
        let mut grads = MlpParams::zeros(&spec);
        grads.layers[0].bias[0] = f64::NAN;
        let mut adam = AdamState::new(&params, 0.01);
        let err = adam.step(&mut params, &grads).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert_eq!(adam.step_count, 0);
    }
}
