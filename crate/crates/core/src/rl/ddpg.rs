//! Goal-conditioned DDPG: actor `pi(obs, goal)`, critic `Q(obs, goal, action)`,
//! Polyak-averaged target copies, and clipped TD targets for `{-1, 0}` rewards.

use ndarray::{s, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::replay::ReplayBuffer;
use super::transition::Experience;
use crate::error::{check_dim, Error, Result};
use crate::nn::{soft_update, Activation, AdamState, Mlp, MlpParams, MlpSpec};
use crate::LabRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdpgHyper {
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Gradient steps per level after each training episode.
    pub updates_per_cycle: usize,
    /// Gaussian exploration noise, in units of the action bound.
    pub exploration_sigma: f64,
    /// Probability of a uniformly random exploratory action.
    pub epsilon_random: f64,
    pub hidden_layers: Vec<usize>,
}

impl Default for DdpgHyper {
    fn default() -> Self {
        Self {
            gamma: 0.98,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            tau: 0.05,
            batch_size: 128,
            buffer_capacity: 100_000,
            updates_per_cycle: 40,
            exploration_sigma: 0.1,
            epsilon_random: 0.2,
            hidden_layers: vec![64, 64],
        }
    }
}

impl DdpgHyper {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return bad("batch_size and buffer_capacity must be positive");
        }
        if !(self.exploration_sigma >= 0.0 && self.exploration_sigma.is_finite()) {
            return bad("exploration_sigma must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.epsilon_random) {
            return bad("epsilon_random must lie in [0, 1]");
        }
        if self.hidden_layers.is_empty() || self.hidden_layers.contains(&0) {
            return bad("hidden_layers must list positive widths");
        }
        Ok(())
    }

    /// Lower end of the value range reachable with rewards in `{-1, 0}`.
    pub fn min_return(&self) -> f64 {
        -1.0 / (1.0 - self.gamma)
    }
}

/// Anything that maps `(observation, goal)` to an action.
pub trait GoalPolicy {
    fn act(&self, obs: &[f64], goal: &[f64], explore: bool, rng: &mut LabRng) -> Result<Vec<f64>>;
}

/// Flat training minibatch. Actions are normalized to `[-1, 1]` per component.
#[derive(Debug, Clone)]
pub struct Batch {
    pub inputs: Array2<f64>,
    pub actions: Array2<f64>,
    pub next_inputs: Array2<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
}

#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    actor_opt: AdamState,
    critic_opt: AdamState,
    obs_dim: usize,
    goal_dim: usize,
    action_bounds: Vec<f64>,
    hyper: DdpgHyper,
    warned_small_buffer: bool,
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

impl DdpgAgent {
    pub fn new(
        obs_dim: usize,
        goal_dim: usize,
        action_bounds: Vec<f64>,
        hyper: DdpgHyper,
        rng: &mut LabRng,
    ) -> Result<Self> {
        hyper.validate()?;
        if action_bounds.is_empty() || action_bounds.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::config("action bounds must be positive"));
        }
        let action_dim = action_bounds.len();
        let mut actor_sizes = vec![obs_dim + goal_dim];
        actor_sizes.extend(&hyper.hidden_layers);
        actor_sizes.push(action_dim);
        let mut critic_sizes = vec![obs_dim + goal_dim + action_dim];
        critic_sizes.extend(&hyper.hidden_layers);
        critic_sizes.push(1);

        let actor = Mlp::random(
            MlpSpec::new(actor_sizes, Activation::Relu, Activation::Tanh)?,
            rng,
        )?;
        let critic = Mlp::random(
            MlpSpec::new(critic_sizes, Activation::Relu, Activation::Linear)?,
            rng,
        )?;
        let actor_opt = AdamState::new(&actor.params, hyper.actor_lr);
        let critic_opt = AdamState::new(&critic.params, hyper.critic_lr);
        Ok(Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            actor_opt,
            critic_opt,
            obs_dim,
            goal_dim,
            action_bounds,
            hyper,
            warned_small_buffer: false,
        })
    }

    pub fn hyper(&self) -> &DdpgHyper {
        &self.hyper
    }

    pub fn action_bounds(&self) -> &[f64] {
        &self.action_bounds
    }

    pub fn action_dim(&self) -> usize {
        self.action_bounds.len()
    }

    pub fn goal_dim(&self) -> usize {
        self.goal_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn is_finite(&self) -> bool {
        [&self.actor, &self.critic, &self.actor_target, &self.critic_target]
            .iter()
            .all(|n| n.params.is_finite())
    }

    fn input(&self, obs: &[f64], goal: &[f64]) -> Result<Vec<f64>> {
        check_dim("agent observation", self.obs_dim, obs.len())?;
        check_dim("agent goal", self.goal_dim, goal.len())?;
        Ok(concat(obs, goal))
    }

    /// Behaviour policy. Without exploration this is the deterministic actor
    /// output scaled to the bounds; with exploration Gaussian noise is added and,
    /// with probability `epsilon_random`, the action is replaced by a uniform draw.
    pub fn select_action(
        &self,
        obs: &[f64],
        goal: &[f64],
        explore: bool,
        rng: &mut LabRng,
    ) -> Result<Vec<f64>> {
        let mut u = self.actor.forward(&self.input(obs, goal)?)?;
        if explore {
            if rng.random_bool(self.hyper.epsilon_random) {
                u.iter_mut().for_each(|x| *x = rng.random_range(-1.0..=1.0));
            } else {
                for x in u.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *x += self.hyper.exploration_sigma * z;
                }
            }
        }
        Ok(u
            .iter()
            .zip(&self.action_bounds)
            .map(|(x, b)| x.clamp(-1.0, 1.0) * b)
            .collect())
    }

    /// Stacks sampled experiences into matrices.
    pub fn make_batch<T: Experience>(&self, samples: &[&T]) -> Result<Batch> {
        let n = samples.len();
        let in_dim = self.obs_dim + self.goal_dim;
        let act_dim = self.action_dim();
        let mut inputs = Array2::zeros((n, in_dim));
        let mut next_inputs = Array2::zeros((n, in_dim));
        let mut actions = Array2::zeros((n, act_dim));
        let mut rewards = Vec::with_capacity(n);
        let mut dones = Vec::with_capacity(n);
        for (i, t) in samples.iter().enumerate() {
            let x = self.input(t.obs(), t.desired_goal())?;
            let nx = self.input(t.next_obs(), t.desired_goal())?;
            let a = t.policy_action();
            check_dim("stored action", act_dim, a.len())?;
            for j in 0..in_dim {
                inputs[[i, j]] = x[j];
                next_inputs[[i, j]] = nx[j];
            }
            for j in 0..act_dim {
                actions[[i, j]] = a[j] / self.action_bounds[j];
            }
            rewards.push(t.reward());
            dones.push(t.done());
        }
        Ok(Batch {
            inputs,
            actions,
            next_inputs,
            rewards,
            dones,
        })
    }

    fn critic_input(inputs: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
        let n = inputs.nrows();
        let (di, da) = (inputs.ncols(), actions.ncols());
        let mut x = Array2::zeros((n, di + da));
        x.slice_mut(s![.., ..di]).assign(inputs);
        x.slice_mut(s![.., di..]).assign(actions);
        x
    }

    /// Clipped one-step TD targets `r + gamma (1 - done) Q'(s', g, pi'(s', g))`.
    pub fn td_targets(&self, batch: &Batch) -> Result<Vec<f64>> {
        let next_actions = self.actor_target.forward_batch(batch.next_inputs.view())?;
        let q_in = Self::critic_input(&batch.next_inputs, next_actions.output());
        let q_next = self.critic_target.forward_batch(q_in.view())?;
        let lo = self.hyper.min_return();
        Ok(batch
            .rewards
            .iter()
            .zip(&batch.dones)
            .zip(q_next.output().column(0))
            .map(|((&r, &done), &q)| {
                if done {
                    r
                } else {
                    (r + self.hyper.gamma * q).clamp(lo, 0.0)
                }
            })
            .collect())
    }

    /// Mean squared TD error of the online critic and its parameter gradient.
    pub fn critic_loss_and_gradient(
        &self,
        batch: &Batch,
        targets: &[f64],
    ) -> Result<(f64, MlpParams)> {
        let n = batch.rewards.len() as f64;
        let q_in = Self::critic_input(&batch.inputs, &batch.actions);
        let cache = self.critic.forward_batch(q_in.view())?;
        let mut d_out = Array2::zeros((targets.len(), 1));
        let mut loss = 0.0;
        for (i, (&q, &y)) in cache.output().column(0).iter().zip(targets).enumerate() {
            let err = q - y;
            loss += err * err / n;
            d_out[[i, 0]] = 2.0 * err / n;
        }
        let (grads, _) = self.critic.backward_batch(&cache, d_out.view())?;
        Ok((loss, grads))
    }

    /// `-mean Q(s, g, pi(s, g))` and its gradient with respect to the actor.
    pub fn actor_loss_and_gradient(&self, batch: &Batch) -> Result<(f64, MlpParams)> {
        let n = batch.rewards.len();
        let act_cache = self.actor.forward_batch(batch.inputs.view())?;
        let q_in = Self::critic_input(&batch.inputs, act_cache.output());
        let q_cache = self.critic.forward_batch(q_in.view())?;
        let loss = -q_cache.output().column(0).sum() / n as f64;
        let d_q = Array2::from_elem((n, 1), -1.0 / n as f64);
        let d_in = self.critic.input_gradient_batch(&q_cache, d_q.view())?;
        let d_action = d_in.slice(s![.., batch.inputs.ncols()..]);
        let (grads, _) = self.actor.backward_batch(&act_cache, d_action)?;
        Ok((loss, grads))
    }

    /// One minibatch step for critic and actor followed by target soft updates.
    /// Returns `None` when the buffer holds fewer than `batch_size` samples.
    pub fn update<T: Experience>(
        &mut self,
        buffer: &ReplayBuffer<T>,
        rng: &mut LabRng,
    ) -> Result<Option<UpdateStats>> {
        if buffer.len() < self.hyper.batch_size {
            if !self.warned_small_buffer {
                log::warn!(
                    "skipping updates while the buffer holds {} < batch size {}",
                    buffer.len(),
                    self.hyper.batch_size
                );
                self.warned_small_buffer = true;
            }
            return Ok(None);
        }
        let samples = buffer.sample(self.hyper.batch_size, rng);
        let batch = self.make_batch(&samples)?;
        self.update_on_batch(&batch).map(Some)
    }

    pub fn update_on_batch(&mut self, batch: &Batch) -> Result<UpdateStats> {
        let targets = self.td_targets(batch)?;
        let (critic_loss, critic_grads) = self.critic_loss_and_gradient(batch, &targets)?;
        self.critic_opt.step(&mut self.critic.params, &critic_grads)?;

        let (actor_loss, actor_grads) = self.actor_loss_and_gradient(batch)?;
        self.actor_opt.step(&mut self.actor.params, &actor_grads)?;

        soft_update(&mut self.critic_target.params, &self.critic.params, self.hyper.tau)?;
        soft_update(&mut self.actor_target.params, &self.actor.params, self.hyper.tau)?;
        Ok(UpdateStats {
            critic_loss,
            actor_loss,
        })
    }

    pub fn q_value(&self, obs: &[f64], goal: &[f64], action: &[f64]) -> Result<f64> {
        check_dim("critic action", self.action_dim(), action.len())?;
        let mut x = self.input(obs, goal)?;
        x.extend(action.iter().zip(&self.action_bounds).map(|(a, b)| a / b));
        Ok(self.critic.forward(&x)?[0])
    }
}

impl GoalPolicy for DdpgAgent {
    fn act(&self, obs: &[f64], goal: &[f64], explore: bool, rng: &mut LabRng) -> Result<Vec<f64>> {
        self.select_action(obs, goal, explore, rng)
    }
}
