//! Central finite-difference verification of [`Mlp::backward`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mlp::{Activation, Mlp, MlpSpec};
use crate::error::Result;

pub const DEFAULT_STEP: f64 = 1e-5;

/// Gradients smaller than this are compared in absolute rather than relative terms.
const RELATIVE_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

fn projected_output(net: &Mlp, input: &[f64], weights: &[f64]) -> Result<f64> {
    Ok(net
        .forward(input)?
        .iter()
        .zip(weights)
        .map(|(y, w)| y * w)
        .sum())
}

/// Max relative error between the analytic gradient of `output_gradient . net(input)`
/// and its central finite-difference estimate, over all parameters and inputs.
pub fn max_relative_error(net: &Mlp, input: &[f64], output_gradient: &[f64], h: f64) -> Result<f64> {
    let (param_grads, input_grad) = net.backward(input, output_gradient)?;
    let mut worst = 0.0_f64;

    let mut probe = net.clone();
    let analytic: Vec<f64> = param_grads.values().collect();
    for (k, &a) in analytic.iter().enumerate() {
        let original = *probe.params.values_mut().nth(k).expect("index in range");
        *probe.params.values_mut().nth(k).expect("index in range") = original + h;
        let plus = projected_output(&probe, input, output_gradient)?;
        *probe.params.values_mut().nth(k).expect("index in range") = original - h;
        let minus = projected_output(&probe, input, output_gradient)?;
        *probe.params.values_mut().nth(k).expect("index in range") = original;
        worst = worst.max(relative_error(a, (plus - minus) / (2.0 * h)));
    }

    let mut x = input.to_vec();
    for (k, &a) in input_grad.iter().enumerate() {
        let original = x[k];
        x[k] = original + h;
        let plus = projected_output(net, &x, output_gradient)?;
        x[k] = original - h;
        let minus = projected_output(net, &x, output_gradient)?;
        x[k] = original;
        worst = worst.max(relative_error(a, (plus - minus) / (2.0 * h)));
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct GradCheckInstance {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub instances: Vec<GradCheckInstance>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.instances
            .iter()
            .map(|i| i.max_relative_error)
            .fold(0.0, f64::max)
    }
}

/// Random networks with up to three hidden layers of at most 32 units.
pub fn random_suite(instances: usize, seed: u64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(instances);
    for _ in 0..instances {
        let hidden = rng.random_range(0..=3);
        let mut sizes = vec![rng.random_range(1..=8)];
        sizes.extend((0..hidden).map(|_| rng.random_range(1..=32)));
        sizes.push(rng.random_range(1..=4));
        let hidden_activation = if rng.random_bool(0.5) {
            Activation::Relu
        } else {
            Activation::Tanh
        };
        let output_activation = if rng.random_bool(0.5) {
            Activation::Linear
        } else {
            Activation::Tanh
        };
        let spec = MlpSpec::new(sizes.clone(), hidden_activation, output_activation)?;
        let net = Mlp::random(spec, &mut rng)?;
        let input: Vec<f64> = (0..net.input_dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let out_grad: Vec<f64> = (0..net.output_dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let err = max_relative_error(&net, &input, &out_grad, DEFAULT_STEP)?;
        out.push(GradCheckInstance {
            layer_sizes: sizes,
            hidden_activation,
            output_activation,
            max_relative_error: err,
        });
    }
    Ok(GradCheckReport { instances: out })
}
