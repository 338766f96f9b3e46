//! Kinematic reach and pick-and-place tasks on the unit cube.
//!
//! The gripper moves by clipped position deltas; there are no dynamics. In
//! pick-and-place the object follows the gripper rigidly while the grip is
//! commanded closed and the object lies within `grasp_radius`, and stays where
//! it was released otherwise.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Reach,
    PickPlace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub task: Task,
    pub episode_length: usize,
    pub success_threshold: f64,
    pub a_max: f64,
    pub grasp_radius: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            task: Task::Reach,
            episode_length: 50,
            success_threshold: 0.1,
            a_max: 0.05,
            grasp_radius: 0.05,
        }
    }
}

/// Raw environment state. `grip_closed` and `object` are only meaningful for pick-and-place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvObservation {
    pub gripper: Vec3,
    pub grip_closed: f64,
    pub object: Vec3,
}

/// Ground-truth goal factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalVector(pub Vec3);

impl GoalVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvAction {
    pub delta: Vec3,
    pub grip_command: f64,
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `true` iff the Euclidean distance is strictly below `threshold`.
pub fn success(achieved: &[f64], desired: &[f64], threshold: f64) -> Result<bool> {
    check_dim("success goal dimension", desired.len(), achieved.len())?;
    Ok(distance(achieved, desired) < threshold)
}

fn clip_unit(p: Vec3) -> Vec3 {
    p.map(|v| v.clamp(0.0, 1.0))
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    [rng.random(), rng.random(), rng.random()]
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episode_length == 0 {
            return Err(Error::config("episode_length must be positive"));
        }
        for (name, v) in [
            ("success_threshold", self.success_threshold),
            ("a_max", self.a_max),
            ("grasp_radius", self.grasp_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn obs_dim(&self) -> usize {
        match self.task {
            Task::Reach => 3,
            Task::PickPlace => 7,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self.task {
            Task::Reach => 3,
            Task::PickPlace => 4,
        }
    }

    /// Per-component bound of the flat action vector.
    pub fn action_bounds(&self) -> Vec<f64> {
        let mut b = vec![self.a_max; 3];
        if self.task == Task::PickPlace {
            b.push(1.0);
        }
        b
    }

    /// Flat observation fed to policies.
    pub fn observation_vector(&self, obs: &EnvObservation) -> Vec<f64> {
        let mut v = obs.gripper.to_vec();
        if self.task == Task::PickPlace {
            v.push(obs.grip_closed);
            v.extend_from_slice(&obs.object);
        }
        v
    }

    pub fn action_from_slice(&self, a: &[f64]) -> Result<EnvAction> {
        check_dim("environment action", self.action_dim(), a.len())?;
        Ok(EnvAction {
            delta: [a[0], a[1], a[2]],
            grip_command: if self.task == Task::PickPlace { a[3] } else { 0.0 },
        })
    }

    /// Samples the start state and desired goal uniformly, resampling until the
    /// start is not already a success.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> (EnvObservation, GoalVector) {
        loop {
            let gripper = uniform_point(rng);
            let (object, grip_closed) = match self.task {
                Task::Reach => ([0.0; 3], 0.0),
                Task::PickPlace => (uniform_point(rng), 0.0),
            };
            let obs = EnvObservation {
                gripper,
                grip_closed,
                object,
            };
            let goal = GoalVector(uniform_point(rng));
            if distance(&self.ground_truth_goal(&obs).0, &goal.0) > self.success_threshold {
                return (obs, goal);
            }
        }
    }

    pub fn step(&self, state: &EnvObservation, action: &EnvAction) -> EnvObservation {
        let delta = action.delta.map(|d| d.clamp(-self.a_max, self.a_max));
        let moved = clip_unit([
            state.gripper[0] + delta[0],
            state.gripper[1] + delta[1],
            state.gripper[2] + delta[2],
        ]);
        match self.task {
            Task::Reach => EnvObservation {
                gripper: moved,
                ..*state
            },
            Task::PickPlace => {
                let grip = action.grip_command.clamp(-1.0, 1.0);
                let attached =
                    grip > 0.0 && distance(&state.gripper, &state.object) < self.grasp_radius;
                let object = if attached {
                    clip_unit([
                        state.object[0] + moved[0] - state.gripper[0],
                        state.object[1] + moved[1] - state.gripper[1],
                        state.object[2] + moved[2] - state.gripper[2],
                    ])
                } else {
                    state.object
                };
                EnvObservation {
                    gripper: moved,
                    grip_closed: if grip > 0.0 { 1.0 } else { 0.0 },
                    object,
                }
            }
        }
    }

    /// `g(obs)`: gripper position for reach, object position for pick-and-place.
    pub fn ground_truth_goal(&self, obs: &EnvObservation) -> GoalVector {
        match self.task {
            Task::Reach => GoalVector(obs.gripper),
            Task::PickPlace => GoalVector(obs.object),
        }
    }

    pub fn is_success(&self, obs: &EnvObservation, desired: &GoalVector) -> bool {
        distance(&self.ground_truth_goal(obs).0, &desired.0) < self.success_threshold
    }

    /// Hand-written controller used to show the tasks are solvable.
    pub fn scripted_oracle_policy(&self, obs: &EnvObservation, desired: &GoalVector) -> EnvAction {
        let toward = |from: &Vec3, to: &Vec3| -> Vec3 {
            [0, 1, 2].map(|i| (to[i] - from[i]).clamp(-self.a_max, self.a_max))
        };
        match self.task {
            Task::Reach => EnvAction {
                delta: toward(&obs.gripper, &desired.0),
                grip_command: 0.0,
            },
            Task::PickPlace => {
                let holding = distance(&obs.gripper, &obs.object) < self.grasp_radius;
                if holding {
                    EnvAction {
                        delta: toward(&obs.object, &desired.0),
                        grip_command: 1.0,
                    }
                } else {
                    EnvAction {
                        delta: toward(&obs.gripper, &obs.object),
                        grip_command: -1.0,
                    }
                }
            }
        }
    }

    /// Runs the scripted controller for one episode; returns whether it succeeded.
    pub fn run_scripted_episode<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        let (mut obs, goal) = self.reset(rng);
        for _ in 0..self.episode_length {
            let action = self.scripted_oracle_policy(&obs, &goal);
            obs = self.step(&obs, &action);
            if self.is_success(&obs, &goal) {
                return true;
            }
        }
        false
    }
}

/// Scripted-controller successes out of `episodes` per task, from seeded resets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleReport {
    pub episodes: usize,
    pub reach_successes: usize,
    pub pick_place_successes: usize,
}

pub fn oracle_suite(episodes: usize, seed: u64) -> OracleReport {
    let count = |task: Task, stream: u64| {
        let env = EnvConfig {
            task,
            ..EnvConfig::default()
        };
        let mut rng = crate::LabRng::seed_from_u64(seed);
        rng.set_stream(stream);
        (0..episodes).filter(|_| env.run_scripted_episode(&mut rng)).count()
    };
    OracleReport {
        episodes,
        reach_successes: count(Task::Reach, 0),
        pick_place_successes: count(Task::PickPlace, 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn pick_place() -> EnvConfig {
        EnvConfig {
            task: Task::PickPlace,
            ..EnvConfig::default()
        }
    }

    #[test]
    fn reset_is_deterministic_given_seed() {
        let cfg = pick_place();
        let a = cfg.reset(&mut ChaCha8Rng::seed_from_u64(9));
        let b = cfg.reset(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn reset_goal_mean_and_separation() {
        let cfg = EnvConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sum = [0.0; 3];
        let n = 10_000;
        for _ in 0..n {
            let (obs, goal) = cfg.reset(&mut rng);
            assert!(distance(&cfg.ground_truth_goal(&obs).0, &goal.0) > 0.1);
            for i in 0..3 {
                sum[i] += goal.0[i];
            }
        }
        for s in sum {
            assert!((s / n as f64 - 0.5).abs() < 0.02);
        }
    }

    #[test]
    fn zero_action_is_identity() {
        let cfg = pick_place();
        let (obs, _) = cfg.reset(&mut ChaCha8Rng::seed_from_u64(4));
        let next = cfg.step(
            &obs,
            &EnvAction {
                delta: [0.0; 3],
                grip_command: -1.0,
            },
        );
        assert_eq!(next, obs);
        assert_eq!(cfg.ground_truth_goal(&next), cfg.ground_truth_goal(&obs));
    }

    #[test]
    fn boundary_clip() {
        let cfg = EnvConfig::default();
        let obs = EnvObservation {
            gripper: [0.99, 0.5, 0.5],
            grip_closed: 0.0,
            object: [0.0; 3],
        };
        let next = cfg.step(
            &obs,
            &EnvAction {
                delta: [0.05, 0.0, 0.0],
                grip_command: 0.0,
            },
        );
        assert_eq!(next.gripper, [1.0, 0.5, 0.5]);
    }

    #[test]
    fn grasped_object_moves_rigidly() {
        let cfg = pick_place();
        let obs = EnvObservation {
            gripper: [0.5, 0.5, 0.5],
            grip_closed: 0.0,
            object: [0.5, 0.5, 0.5],
        };
        let d = [0.03, -0.04, 0.01];
        let next = cfg.step(
            &obs,
            &EnvAction {
                delta: d,
                grip_command: 1.0,
            },
        );
        for i in 0..3 {
            assert!((next.object[i] - obs.object[i] - d[i]).abs() < 1e-15);
            assert!((next.object[i] - next.gripper[i]).abs() < 1e-15);
        }
        // open grip leaves it behind
        let after = cfg.step(
            &next,
            &EnvAction {
                delta: d,
                grip_command: -1.0,
            },
        );
        assert_eq!(after.object, next.object);
    }

    #[test]
    fn ground_truth_goal_per_task() {
        let obs = EnvObservation {
            gripper: [0.2, 0.3, 0.4],
            grip_closed: 0.0,
            object: [0.7, 0.1, 0.0],
        };
        assert_eq!(EnvConfig::default().ground_truth_goal(&obs).0, [0.2, 0.3, 0.4]);
        assert_eq!(pick_place().ground_truth_goal(&obs).0, [0.7, 0.1, 0.0]);
    }

    #[test]
    fn success_threshold_cases() {
        assert!(success(&[0.3, 0.3, 0.3], &[0.3, 0.3, 0.3], 0.1).unwrap());
        assert!(success(&[0.05, 0.0, 0.0], &[0.0, 0.0, 0.0], 0.1).unwrap());
        assert!(!success(&[0.15, 0.0, 0.0], &[0.0, 0.0, 0.0], 0.1).unwrap());
        assert!(success(&[0.0; 3], &[0.0; 4], 0.1).is_err());
    }

    #[test]
    fn scripted_oracle_solves_reach() {
        let cfg = EnvConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let wins = (0..100).filter(|_| cfg.run_scripted_episode(&mut rng)).count();
        assert_eq!(wins, 100);
    }

    #[test]
    fn scripted_oracle_solves_pick_place() {
        let cfg = pick_place();
        let mut rng = ChaCha8Rng::seed_from_u64(200);
        let wins = (0..100).filter(|_| cfg.run_scripted_episode(&mut rng)).count();
        assert!(wins >= 95, "{wins}/100");
    }

    #[test]
    fn oracle_at_goal_stays() {
        let cfg = EnvConfig::default();
        let obs = EnvObservation {
            gripper: [0.4, 0.4, 0.4],
            grip_closed: 0.0,
            object: [0.0; 3],
        };
        let goal = GoalVector([0.42, 0.39, 0.4]);
        let a = cfg.scripted_oracle_policy(&obs, &goal);
        assert!(distance(&a.delta, &[0.0; 3]) <= cfg.a_max);
        assert!(cfg.is_success(&cfg.step(&obs, &a), &goal));
    }

    proptest! {
        #[test]
        fn states_stay_in_unit_cube(
            seed in any::<u64>(),
            actions in prop::collection::vec((prop::array::uniform3(-1.0f64..1.0), -1.0f64..1.0), 1..60),
        ) {
            let cfg = pick_place();
            let (mut obs, _) = cfg.reset(&mut ChaCha8Rng::seed_from_u64(seed));
            for (delta, grip) in actions {
                let a = EnvAction { delta, grip_command: grip };
                let next = cfg.step(&obs, &a);
                prop_assert_eq!(next, cfg.step(&obs, &a));
                obs = next;
                for v in obs.gripper.iter().chain(&obs.object) {
                    prop_assert!((0.0..=1.0).contains(v));
                }
            }
        }
    }
}
