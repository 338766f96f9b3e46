use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed in terms of the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

/// Layer widths and activations of a fully connected network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpSpec {
    pub fn new(
        layer_sizes: Vec<usize>,
        hidden_activation: Activation,
        output_activation: Activation,
    ) -> Result<Self> {
        let spec = Self {
            layer_sizes,
            hidden_activation,
            output_activation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::config("an MLP needs at least an input and an output layer"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::config("MLP layer sizes must be positive"));
        }
        if self.hidden_activation == Activation::Linear {
            return Err(Error::config("hidden activation must be relu or tanh"));
        }
        if self.output_activation == Activation::Relu {
            return Err(Error::config("output activation must be linear or tanh"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated spec")
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out x in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Weights and biases of every layer. Gradients and Adam moments reuse this type.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let layers = spec
            .layer_sizes
            .windows(2)
            .map(|w| Layer {
                weight: Array2::zeros((w[1], w[0])),
                bias: Array1::zeros(w[1]),
            })
            .collect();
        Self { layers }
    }

    /// He-uniform for relu layers, Xavier-uniform otherwise; zero biases.
    pub fn init<R: Rng + ?Sized>(spec: &MlpSpec, rng: &mut R) -> Self {
        let mut params = Self::zeros(spec);
        for (i, layer) in params.layers.iter_mut().enumerate() {
            let (fan_out, fan_in) = layer.weight.dim();
            let limit = match spec.activation(i) {
                Activation::Relu => (6.0 / fan_in as f64).sqrt(),
                _ => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            };
            layer
                .weight
                .mapv_inplace(|_| rng.random_range(-limit..=limit));
        }
        params
    }

    pub fn check_shape(&self, spec: &MlpSpec) -> Result<()> {
        check_dim("MLP layer count", spec.num_layers(), self.layers.len())?;
        for (layer, w) in self.layers.iter().zip(spec.layer_sizes.windows(2)) {
            check_dim("MLP weight rows", w[1], layer.weight.nrows())?;
            check_dim("MLP weight cols", w[0], layer.weight.ncols())?;
            check_dim("MLP bias length", w[1], layer.bias.len())?;
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weight.dim() == b.weight.dim() && a.bias.len() == b.bias.len()
            })
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    /// All entries in a fixed order: per layer, weights row-major then bias.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Elementwise `f(self, other)` over matching shapes.
    pub fn zip_mut_with(&mut self, other: &MlpParams, mut f: impl FnMut(&mut f64, f64)) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            Zip::from(&mut a.weight)
                .and(&b.weight)
                .for_each(|x, &y| f(x, y));
            Zip::from(&mut a.bias).and(&b.bias).for_each(|x, &y| f(x, y));
        }
    }
}

/// Activations recorded by a batched forward pass; row `i` belongs to sample `i`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    pub activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache holds at least the input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: MlpParams,
}

impl Mlp {
    pub fn new(spec: MlpSpec, params: MlpParams) -> Result<Self> {
        spec.validate()?;
        params.check_shape(&spec)?;
        Ok(Self { spec, params })
    }

    pub fn random<R: Rng + ?Sized>(spec: MlpSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let params = MlpParams::init(&spec, rng);
        Ok(Self { spec, params })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        check_dim("MLP input", self.input_dim(), input.len())?;
        let mut x: Array1<f64> = ArrayView1::from(input).to_owned();
        for (i, layer) in self.params.layers.iter().enumerate() {
            let act = self.spec.activation(i);
            let mut z = layer.weight.dot(&x);
            z += &layer.bias;
            z.mapv_inplace(|v| act.apply(v));
            x = z;
        }
        Ok(x.to_vec())
    }

    pub fn forward_batch(&self, input: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        check_dim("MLP batch input", self.input_dim(), input.ncols())?;
        let mut activations = Vec::with_capacity(self.params.layers.len() + 1);
        activations.push(input.to_owned());
        for (i, layer) in self.params.layers.iter().enumerate() {
            let act = self.spec.activation(i);
            let prev = activations.last().expect("non-empty");
            let mut z = prev.dot(&layer.weight.t());
            z += &layer.bias;
            z.mapv_inplace(|v| act.apply(v));
            activations.push(z);
        }
        Ok(ForwardCache { activations })
    }

    /// Reverse-mode pass for a single sample: returns parameter and input gradients
    /// of `output_gradient . forward(input)`.
    pub fn backward(&self, input: &[f64], output_gradient: &[f64]) -> Result<(MlpParams, Vec<f64>)> {
        check_dim("MLP input", self.input_dim(), input.len())?;
        check_dim("MLP output gradient", self.output_dim(), output_gradient.len())?;
        let x = ArrayView2::from_shape((1, input.len()), input).expect("contiguous slice");
        let cache = self.forward_batch(x)?;
        let dy = ArrayView2::from_shape((1, output_gradient.len()), output_gradient)
            .expect("contiguous slice");
        let (grads, dx) = self.backward_batch(&cache, dy)?;
        Ok((grads, dx.row(0).to_vec()))
    }

    /// Batched reverse pass; parameter gradients are summed over the batch.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        output_gradient: ArrayView2<'_, f64>,
    ) -> Result<(MlpParams, Array2<f64>)> {
        let mut grads = MlpParams::zeros(&self.spec);
        let dx = self.backward_impl(cache, output_gradient, Some(&mut grads))?;
        Ok((grads, dx))
    }

    /// Batched reverse pass that only propagates to the input.
    pub fn input_gradient_batch(
        &self,
        cache: &ForwardCache,
        output_gradient: ArrayView2<'_, f64>,
    ) -> Result<Array2<f64>> {
        self.backward_impl(cache, output_gradient, None)
    }

    fn backward_impl(
        &self,
        cache: &ForwardCache,
        output_gradient: ArrayView2<'_, f64>,
        mut grads: Option<&mut MlpParams>,
    ) -> Result<Array2<f64>> {
        let out = cache.output();
        check_dim("MLP output gradient", out.ncols(), output_gradient.ncols())?;
        check_dim("MLP output gradient rows", out.nrows(), output_gradient.nrows())?;
        let mut delta = output_gradient.to_owned();
        for i in (0..self.params.layers.len()).rev() {
            let act = self.spec.activation(i);
            if act != Activation::Linear {
                Zip::from(&mut delta)
                    .and(&cache.activations[i + 1])
                    .for_each(|d, &y| *d *= act.derivative_from_output(y));
            }
            let layer = &self.params.layers[i];
            if let Some(g) = grads.as_deref_mut() {
                g.layers[i].weight = delta.t().dot(&cache.activations[i]);
                g.layers[i].bias = delta.sum_axis(Axis(0));
            }
            delta = delta.dot(&layer.weight);
        }
        Ok(delta)
    }
}

/// `target <- (1 - tau) * target + tau * online`, elementwise.
pub fn soft_update(target: &mut MlpParams, online: &MlpParams, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::config(format!("soft update tau must lie in (0, 1], got {tau}")));
    }
    if !target.same_shape(online) {
        return Err(Error::config("soft update between networks of different shape"));
    }
    if tau == 1.0 {
        target.clone_from(online);
        return Ok(());
    }
    target.zip_mut_with(online, |t, o| *t = (1.0 - tau) * *t + tau * o);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear_spec(sizes: Vec<usize>) -> MlpSpec {
        MlpSpec {
            layer_sizes: sizes,
            hidden_activation: Activation::Relu,
            output_activation: Activation::Linear,
        }
    }

    #[test]
    fn zero_weights_return_bias() {
        let spec = linear_spec(vec![3, 2]);
        let mut params = MlpParams::zeros(&spec);
        params.layers[0].bias = array![0.25, -1.5];
        let net = Mlp::new(spec, params).unwrap();
        assert_eq!(net.forward(&[0.3, -2.0, 7.0]).unwrap(), vec![0.25, -1.5]);
    }

    #[test]
    fn identity_layer() {
        let spec = linear_spec(vec![2, 2]);
        let mut params = MlpParams::zeros(&spec);
        params.layers[0].weight = Array2::eye(2);
        let net = Mlp::new(spec, params).unwrap();
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn linear_backward_is_analytic() {
        let spec = linear_spec(vec![3, 1]);
        let mut params = MlpParams::zeros(&spec);
        params.layers[0].weight = array![[0.5, -1.0, 2.0]];
        let net = Mlp::new(spec, params).unwrap();
        let x = [3.0, 4.0, -5.0];
        let (g, dx) = net.backward(&x, &[1.0]).unwrap();
        assert_eq!(g.layers[0].weight.row(0).to_vec(), x.to_vec());
        assert_eq!(g.layers[0].bias.to_vec(), vec![1.0]);
        assert_eq!(dx, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn tanh_at_zero_passes_gradient() {
        let spec = MlpSpec {
            layer_sizes: vec![1, 1],
            hidden_activation: Activation::Relu,
            output_activation: Activation::Tanh,
        };
        let mut params = MlpParams::zeros(&spec);
        params.layers[0].weight = array![[1.0]];
        let net = Mlp::new(spec, params).unwrap();
        let (_, dx) = net.backward(&[0.0], &[0.7]).unwrap();
        assert_eq!(dx, vec![0.7]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::random(linear_spec(vec![4, 8, 2]), &mut rng).unwrap();
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(net.backward(&[0.0; 4], &[1.0]).is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(MlpSpec::new(vec![3], Activation::Relu, Activation::Linear).is_err());
        assert!(MlpSpec::new(vec![3, 0, 1], Activation::Relu, Activation::Linear).is_err());
        assert!(MlpSpec::new(vec![3, 1], Activation::Relu, Activation::Relu).is_err());
    }

    /// Plain nested-loop matrix arithmetic, independent of ndarray's `dot`.
    fn naive_forward(net: &Mlp, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        for (i, layer) in net.params.layers.iter().enumerate() {
            let (rows, cols) = layer.weight.dim();
            let mut y = vec![0.0; rows];
            for r in 0..rows {
                let mut acc = layer.bias[r];
                for c in 0..cols {
                    acc += layer.weight[[r, c]] * x[c];
                }
                y[r] = match net.spec.activation(i) {
                    Activation::Relu => acc.max(0.0),
                    Activation::Tanh => acc.tanh(),
                    Activation::Linear => acc,
                };
            }
            x = y;
        }
        x
    }

    #[test]
    fn forward_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for act in [Activation::Relu, Activation::Tanh] {
            let spec = MlpSpec::new(vec![5, 7, 6, 3], act, Activation::Tanh).unwrap();
            let net = Mlp::random(spec, &mut rng).unwrap();
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let got = net.forward(&x).unwrap();
            let want = naive_forward(&net, &x);
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn batch_forward_matches_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = MlpSpec::new(vec![4, 16, 16, 2], Activation::Relu, Activation::Linear).unwrap();
        let net = Mlp::random(spec, &mut rng).unwrap();
        let batch = Array2::from_shape_fn((9, 4), |_| rng.random_range(-1.0..1.0));
        let cache = net.forward_batch(batch.view()).unwrap();
        for (row, out) in batch.rows().into_iter().zip(cache.output().rows()) {
            let single = net.forward(row.as_slice().unwrap()).unwrap();
            for (a, b) in single.iter().zip(out.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn soft_update_cases() {
        let spec = linear_spec(vec![2, 3, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let online = MlpParams::init(&spec, &mut rng);
        let mut target = MlpParams::init(&spec, &mut rng);
        soft_update(&mut target, &online, 1.0).unwrap();
        assert_eq!(target, online);

        let mut zero = MlpParams::zeros(&spec);
        let mut twos = MlpParams::zeros(&spec);
        twos.values_mut().for_each(|v| *v = 2.0);
        soft_update(&mut zero, &twos, 0.5).unwrap();
        assert!(zero.values().all(|v| v == 1.0));

        assert!(soft_update(&mut zero, &twos, 0.0).is_err());
        assert!(soft_update(&mut zero, &twos, 1.5).is_err());
    }

    #[test]
    fn soft_update_converges_geometrically() {
        let spec = linear_spec(vec![3, 4, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let online = MlpParams::init(&spec, &mut rng);
        let start = MlpParams::init(&spec, &mut rng);
        let mut target = start.clone();
        let tau: f64 = 0.1;
        let n = 25;
        for _ in 0..n {
            soft_update(&mut target, &online, tau).unwrap();
        }
        // closed form: t_n = o + (1 - tau)^n (t_0 - o)
        let decay = (1.0 - tau).powi(n);
        for ((t, o), s) in target.values().zip(online.values()).zip(start.values()) {
            let expected = o + decay * (s - o);
            assert!((t - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_is_bitwise_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = MlpSpec::new(vec![6, 64, 64, 3], Activation::Relu, Activation::Tanh).unwrap();
        let net = Mlp::random(spec, &mut rng).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
