use std::borrow::Cow;

use crate::envs::success;
use crate::error::Result;

/// Goal-conditioned experience tuple for one level of the hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub next_obs: Vec<f64>,
    pub achieved_goal: Vec<f64>,
    pub next_achieved_goal: Vec<f64>,
    pub desired_goal: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// `0` on success, `-1` otherwise.
pub fn sparse_reward(achieved: &[f64], desired: &[f64], threshold: f64) -> Result<f64> {
    Ok(if success(achieved, desired, threshold)? {
        0.0
    } else {
        -1.0
    })
}

/// What the DDPG learner and HER relabeling need to know about a stored sample.
pub trait Experience: Clone {
    fn obs(&self) -> &[f64];
    fn next_obs(&self) -> &[f64];
    fn desired_goal(&self) -> &[f64];
    fn next_achieved_goal(&self) -> &[f64];
    fn reward(&self) -> f64;
    fn done(&self) -> bool;

    /// Action in the frame the policy emits it, before bound scaling.
    fn policy_action(&self) -> Cow<'_, [f64]>;

    /// Replaces the desired goal together with the reward/termination it implies.
    fn relabel(&mut self, desired_goal: Vec<f64>, reward: f64, done: bool);
}

impl Experience for Transition {
    fn obs(&self) -> &[f64] {
        &self.obs
    }

    fn next_obs(&self) -> &[f64] {
        &self.next_obs
    }

    fn desired_goal(&self) -> &[f64] {
        &self.desired_goal
    }

    fn next_achieved_goal(&self) -> &[f64] {
        &self.next_achieved_goal
    }

    fn reward(&self) -> f64 {
        self.reward
    }

    fn done(&self) -> bool {
        self.done
    }

    fn policy_action(&self) -> Cow<'_, [f64]> {
        Cow::Borrowed(&self.action)
    }

    fn relabel(&mut self, desired_goal: Vec<f64>, reward: f64, done: bool) {
        self.desired_goal = desired_goal;
        self.reward = reward;
        self.done = done;
    }
}
