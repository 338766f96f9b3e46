//! Analytic backpropagation against central finite differences.
//!
//! cargo run --release --example gradcheck

use goalspace_lab::nn::gradcheck::random_suite;
use goalspace_lab::nn::{Activation, Mlp, MlpSpec};
use rand::SeedableRng;

fn main() -> goalspace_lab::Result<()> {
    let report = random_suite(20, 0)?;
    for inst in &report.instances {
        println!(
            "{:?} {:?}/{:?}  max rel err {:.2e}",
            inst.layer_sizes, inst.hidden_activation, inst.output_activation, inst.max_relative_error
        );
    }
    println!("worst: {:.2e}", report.max_relative_error());

    // one network by hand
    let mut rng = goalspace_lab::LabRng::seed_from_u64(3);
    let net = Mlp::random(MlpSpec::new(vec![6, 64, 64, 3], Activation::Relu, Activation::Tanh)?, &mut rng)?;
    let input = [0.1, -0.2, 0.3, 0.5, 0.0, -0.7];
    let err = goalspace_lab::nn::gradcheck::max_relative_error(&net, &input, &[1.0, -0.5, 0.25], 1e-5)?;
    println!("actor-shaped net {} params: {err:.2e}", net.params.num_params());
    Ok(())
}
