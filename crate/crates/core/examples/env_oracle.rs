//! The kinematic tasks and their scripted controller.
//!
//! cargo run --release --example env_oracle

use goalspace_lab::envs::{oracle_suite, EnvConfig, Task};
use rand::SeedableRng;

fn main() {
    let report = oracle_suite(100, 0);
    println!("reach {}/100, pick-place {}/100", report.reach_successes, report.pick_place_successes);

    let env = EnvConfig {
        task: Task::PickPlace,
        ..EnvConfig::default()
    };
    let mut rng = goalspace_lab::LabRng::seed_from_u64(5);
    let (mut obs, goal) = env.reset(&mut rng);
    println!("object {:?} -> goal {:?}", obs.object, goal.0);
    for t in 0..env.episode_length {
        let action = env.scripted_oracle_policy(&obs, &goal);
        obs = env.step(&obs, &action);
        if t % 5 == 0 {
            println!(
                "t={t:2} gripper {:.3?} grip {} object {:.3?}",
                obs.gripper, obs.grip_closed, obs.object
            );
        }
        if env.is_success(&obs, &goal) {
            println!("placed at t={t}");
            break;
        }
    }
}
