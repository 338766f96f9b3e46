//! Two-level hierarchical actor-critic over transformed goal spaces.
//!
//! The environment's ground-truth goal factors `g(obs)` are never shown to the
//! agents directly. The master sees achieved and desired goals through `f_m`,
//! the sub-policy sees achieved goals through `f_s`, and the master acts in the
//! sub-policy's goal space: its action is a subgoal `f_s`-vector, proposed as a
//! bounded offset from the currently achieved sub-goal.
//!
//! With `levels = 1` the master is bypassed and the sub-policy pursues
//! `f_s(desired_goal_env)` directly, which is plain goal-conditioned DDPG with HER.

use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::envs::{EnvConfig, EnvObservation, GoalVector};
use crate::error::{check_dim, Error, Result};
use crate::goalspace::TransformSpec;
use crate::rl::{her_relabel, sparse_reward, Experience, GoalPolicy, HerStrategy, Transition};
use crate::LabRng;

/// Number of ground-truth goal factors.
pub const GROUND_TRUTH_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Single level: goal-conditioned DDPG with hindsight relabeling.
    Her,
    /// Master over sub-policy.
    Hac,
}

impl Algorithm {
    pub fn levels(self) -> usize {
        match self {
            Algorithm::Her => 1,
            Algorithm::Hac => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Her => "her",
            Algorithm::Hac => "hac",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HacConfig {
    pub levels: usize,
    /// Max sub-policy steps per master action.
    pub horizon: usize,
    pub subgoal_test_rate: f64,
    pub subgoal_penalty: f64,
    /// Per-factor bound on the master's subgoal offset.
    pub master_offset_bound: f64,
    pub f_m: TransformSpec,
    pub f_s: TransformSpec,
}

impl HacConfig {
    pub fn new(algorithm: Algorithm, f_m: TransformSpec, f_s: TransformSpec) -> Self {
        Self {
            levels: algorithm.levels(),
            horizon: 10,
            subgoal_test_rate: 0.3,
            subgoal_penalty: -10.0,
            master_offset_bound: 0.1,
            f_m,
            f_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.levels) {
            return Err(Error::config(format!("levels must be 1 or 2, got {}", self.levels)));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be positive"));
        }
        if !(0.0..=1.0).contains(&self.subgoal_test_rate) {
            return Err(Error::config("subgoal_test_rate must lie in [0, 1]"));
        }
        if !(self.subgoal_penalty < 0.0) {
            return Err(Error::config("subgoal_penalty must be negative"));
        }
        if !(self.master_offset_bound > 0.0) {
            return Err(Error::config("master_offset_bound must be positive"));
        }
        self.f_m.validate()?;
        self.f_s.validate()?;
        self.master_goal_dim()?;
        self.sub_goal_dim()?;
        Ok(())
    }

    /// Dimension of the master's goal space `F_m`.
    pub fn master_goal_dim(&self) -> Result<usize> {
        self.f_m.output_dim(GROUND_TRUTH_DIM)
    }

    /// Dimension of the sub-policy goal space `F_s`, which is also the master action space.
    pub fn sub_goal_dim(&self) -> Result<usize> {
        self.f_s.output_dim(GROUND_TRUTH_DIM)
    }
}

/// Independent random streams of one trial.
#[derive(Debug, Clone)]
pub struct EpisodeRngs {
    pub env: LabRng,
    pub policy: LabRng,
    pub noise: LabRng,
}

impl EpisodeRngs {
    pub fn from_seed(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut r = LabRng::seed_from_u64(seed);
            r.set_stream(id);
            r
        };
        Self {
            env: stream(1),
            policy: stream(2),
            noise: stream(3),
        }
    }
}

/// Master-level experience. `action` is the absolute subgoal in `F_s`;
/// `subgoal_origin` is the achieved sub-goal it was proposed from.
#[derive(Debug, Clone, PartialEq)]
pub struct MasterTransition {
    pub transition: Transition,
    pub subgoal_origin: Vec<f64>,
    pub is_subgoal_test: bool,
    pub is_hindsight_action: bool,
}

impl Experience for MasterTransition {
    fn obs(&self) -> &[f64] {
        &self.transition.obs
    }

    fn next_obs(&self) -> &[f64] {
        &self.transition.next_obs
    }

    fn desired_goal(&self) -> &[f64] {
        &self.transition.desired_goal
    }

    fn next_achieved_goal(&self) -> &[f64] {
        &self.transition.next_achieved_goal
    }

    fn reward(&self) -> f64 {
        self.transition.reward
    }

    fn done(&self) -> bool {
        self.transition.done
    }

    /// The master policy emits offsets, so the learner sees `subgoal - origin`.
    fn policy_action(&self) -> Cow<'_, [f64]> {
        Cow::Owned(
            self.transition
                .action
                .iter()
                .zip(&self.subgoal_origin)
                .map(|(a, o)| a - o)
                .collect(),
        )
    }

    fn relabel(&mut self, desired_goal: Vec<f64>, reward: f64, done: bool) {
        self.transition.relabel(desired_goal, reward, done);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WiredGoals {
    pub achieved_m: Vec<f64>,
    pub desired_m: Vec<f64>,
    pub achieved_s: Vec<f64>,
}

/// `achieved_m = f_m(g(obs))`, `desired_m = f_m(desired_env)`, `achieved_s = f_s(g(obs))`.
pub fn wire_goals(
    env: &EnvConfig,
    obs: &EnvObservation,
    desired_env: &GoalVector,
    f_m: &TransformSpec,
    f_s: &TransformSpec,
    rng: &mut LabRng,
) -> Result<WiredGoals> {
    let g = env.ground_truth_goal(obs);
    Ok(WiredGoals {
        achieved_m: f_m.apply_goal(&g, rng)?,
        desired_m: f_m.apply_goal(desired_env, rng)?,
        achieved_s: f_s.apply_goal(&g, rng)?,
    })
}

fn achieved(env: &EnvConfig, obs: &EnvObservation, f: &TransformSpec, rng: &mut LabRng) -> Result<Vec<f64>> {
    f.apply_goal(&env.ground_truth_goal(obs), rng)
}

/// `achieved_s + clip(master output, +-master_offset_bound)`.
pub fn propose_subgoal(
    master: &dyn GoalPolicy,
    obs: &[f64],
    desired_m: &[f64],
    achieved_s: &[f64],
    config: &HacConfig,
    explore: bool,
    rng: &mut LabRng,
) -> Result<Vec<f64>> {
    let offset = master.act(obs, desired_m, explore, rng)?;
    check_dim("master action", achieved_s.len(), offset.len())?;
    let b = config.master_offset_bound;
    Ok(achieved_s
        .iter()
        .zip(&offset)
        .map(|(a, o)| a + o.clamp(-b, b))
        .collect())
}

#[derive(Debug, Clone)]
pub struct SubEpisode {
    pub transitions: Vec<Transition>,
    pub final_state: EnvObservation,
    /// `f_s(g(final_state))`, the same evaluation used for the success test.
    pub achieved_final: Vec<f64>,
    pub achieved_subgoal: bool,
    pub steps_used: usize,
}

/// Runs the sub-policy toward `subgoal` for at least one and at most
/// `max_steps` environment steps, stopping once the subgoal is reached in `F_s`.
#[allow(clippy::too_many_arguments)]
pub fn run_sub_episode(
    sub: &dyn GoalPolicy,
    env: &EnvConfig,
    start: &EnvObservation,
    achieved_start: Vec<f64>,
    subgoal: &[f64],
    f_s: &TransformSpec,
    max_steps: usize,
    explore: bool,
    rngs: &mut EpisodeRngs,
) -> Result<SubEpisode> {
    check_dim("subgoal", achieved_start.len(), subgoal.len())?;
    let mut state = *start;
    let mut achieved_now = achieved_start;
    let mut transitions = Vec::new();
    let mut reached = false;
    for _ in 0..max_steps.max(1) {
        let obs = env.observation_vector(&state);
        let action = sub.act(&obs, subgoal, explore, &mut rngs.policy)?;
        let next = env.step(&state, &env.action_from_slice(&action)?);
        let next_achieved = achieved(env, &next, f_s, &mut rngs.noise)?;
        let reward = sparse_reward(&next_achieved, subgoal, env.success_threshold)?;
        reached = reward == 0.0;
        transitions.push(Transition {
            obs,
            action,
            next_obs: env.observation_vector(&next),
            achieved_goal: std::mem::replace(&mut achieved_now, next_achieved.clone()),
            next_achieved_goal: next_achieved,
            desired_goal: subgoal.to_vec(),
            reward,
            done: reached,
        });
        state = next;
        if reached {
            break;
        }
    }
    Ok(SubEpisode {
        steps_used: transitions.len(),
        transitions,
        final_state: state,
        achieved_final: achieved_now,
        achieved_subgoal: reached,
    })
}

/// Copy of `transition` whose action is the subgoal the sub-policy actually reached.
pub fn hindsight_action(transition: &MasterTransition, achieved_final: &[f64]) -> Result<MasterTransition> {
    check_dim("hindsight action", transition.transition.action.len(), achieved_final.len())?;
    let mut out = transition.clone();
    out.transition.action = achieved_final.to_vec();
    out.is_hindsight_action = true;
    out.is_subgoal_test = false;
    Ok(out)
}

/// Penalizes a tested subgoal the greedy sub-policy failed to reach.
pub fn subgoal_test_step(
    mut transition: MasterTransition,
    achieved_subgoal: bool,
    config: &HacConfig,
) -> MasterTransition {
    if transition.is_subgoal_test && !achieved_subgoal {
        transition.transition.reward = config.subgoal_penalty;
        transition.transition.done = true;
    }
    transition
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeMode {
    /// Exploration, subgoal testing and relabeled transitions.
    Train,
    /// Greedy policies; no transitions are returned.
    Eval,
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeOutcome {
    /// Ready for the master replay buffer (originals, hindsight actions, relabeled copies).
    pub master_transitions: Vec<MasterTransition>,
    /// Ready for the sub-level replay buffer.
    pub sub_transitions: Vec<Transition>,
    /// Ground-truth success at the final state.
    pub env_success: bool,
    pub env_steps: usize,
    pub master_steps: usize,
    pub subgoal_tests: usize,
    pub failed_subgoal_tests: usize,
}

/// One full episode of `env.episode_length` environment steps.
pub fn run_hierarchy_episode(
    master: Option<&dyn GoalPolicy>,
    sub: &dyn GoalPolicy,
    env: &EnvConfig,
    config: &HacConfig,
    her: &HerStrategy,
    mode: EpisodeMode,
    rngs: &mut EpisodeRngs,
) -> Result<EpisodeOutcome> {
    let (start, desired_env) = env.reset(&mut rngs.env);
    match (config.levels, master) {
        (1, _) => run_flat_episode(sub, env, config, her, mode, start, desired_env, rngs),
        (2, Some(master)) => {
            run_two_level_episode(master, sub, env, config, her, mode, start, desired_env, rngs)
        }
        (2, None) => Err(Error::config("two-level episode without a master policy")),
        (l, _) => Err(Error::config(format!("unsupported number of levels: {l}"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_flat_episode(
    policy: &dyn GoalPolicy,
    env: &EnvConfig,
    config: &HacConfig,
    her: &HerStrategy,
    mode: EpisodeMode,
    start: EnvObservation,
    desired_env: GoalVector,
    rngs: &mut EpisodeRngs,
) -> Result<EpisodeOutcome> {
    let explore = mode == EpisodeMode::Train;
    let desired = config.f_s.apply_goal(&desired_env, &mut rngs.noise)?;
    let mut state = start;
    let mut achieved_now = achieved(env, &state, &config.f_s, &mut rngs.noise)?;
    let mut episode = Vec::with_capacity(env.episode_length);
    for _ in 0..env.episode_length {
        let obs = env.observation_vector(&state);
        let action = policy.act(&obs, &desired, explore, &mut rngs.policy)?;
        let next = env.step(&state, &env.action_from_slice(&action)?);
        let next_achieved = achieved(env, &next, &config.f_s, &mut rngs.noise)?;
        let reward = sparse_reward(&next_achieved, &desired, env.success_threshold)?;
        if explore {
            episode.push(Transition {
                obs,
                action,
                next_obs: env.observation_vector(&next),
                achieved_goal: achieved_now,
                next_achieved_goal: next_achieved.clone(),
                desired_goal: desired.clone(),
                reward,
                done: reward == 0.0,
            });
        }
        achieved_now = next_achieved;
        state = next;
    }
    let sub_transitions = if explore {
        her_relabel(&episode, her, env.success_threshold, &mut rngs.policy)?
    } else {
        Vec::new()
    };
    Ok(EpisodeOutcome {
        sub_transitions,
        env_success: env.is_success(&state, &desired_env),
        env_steps: env.episode_length,
        ..EpisodeOutcome::default()
    })
}

#[allow(clippy::too_many_arguments)]
fn run_two_level_episode(
    master: &dyn GoalPolicy,
    sub: &dyn GoalPolicy,
    env: &EnvConfig,
    config: &HacConfig,
    her: &HerStrategy,
    mode: EpisodeMode,
    start: EnvObservation,
    desired_env: GoalVector,
    rngs: &mut EpisodeRngs,
) -> Result<EpisodeOutcome> {
    let explore = mode == EpisodeMode::Train;
    let threshold = env.success_threshold;
    let wired = wire_goals(env, &start, &desired_env, &config.f_m, &config.f_s, &mut rngs.noise)?;
    let desired_m = wired.desired_m;
    let mut achieved_m = wired.achieved_m;
    let mut achieved_s = wired.achieved_s;

    let mut out = EpisodeOutcome::default();
    let mut originals = Vec::new();
    let mut hindsight = Vec::new();
    let mut state = start;

    while out.env_steps < env.episode_length {
        let obs = env.observation_vector(&state);
        let testing = explore && rngs.policy.random_bool(config.subgoal_test_rate);
        let subgoal = propose_subgoal(
            master,
            &obs,
            &desired_m,
            &achieved_s,
            config,
            explore,
            &mut rngs.policy,
        )?;
        let budget = config.horizon.min(env.episode_length - out.env_steps);
        let sub_run = run_sub_episode(
            sub,
            env,
            &state,
            achieved_s.clone(),
            &subgoal,
            &config.f_s,
            budget,
            explore && !testing,
            rngs,
        )?;
        out.env_steps += sub_run.steps_used;
        out.master_steps += 1;

        let next_state = sub_run.final_state;
        let next_achieved_m = achieved(env, &next_state, &config.f_m, &mut rngs.noise)?;
        if explore {
            let reward = sparse_reward(&next_achieved_m, &desired_m, threshold)?;
            let proposed = MasterTransition {
                transition: Transition {
                    obs,
                    action: subgoal,
                    next_obs: env.observation_vector(&next_state),
                    achieved_goal: achieved_m.clone(),
                    next_achieved_goal: next_achieved_m.clone(),
                    desired_goal: desired_m.clone(),
                    reward,
                    done: reward == 0.0,
                },
                subgoal_origin: achieved_s.clone(),
                is_subgoal_test: testing,
                is_hindsight_action: false,
            };
            hindsight.push(hindsight_action(&proposed, &sub_run.achieved_final)?);
            if testing {
                out.subgoal_tests += 1;
                if !sub_run.achieved_subgoal {
                    out.failed_subgoal_tests += 1;
                }
            }
            originals.push(subgoal_test_step(proposed, sub_run.achieved_subgoal, config));
            out.sub_transitions.extend(her_relabel(
                &sub_run.transitions,
                her,
                threshold,
                &mut rngs.policy,
            )?);
        }

        achieved_m = next_achieved_m;
        achieved_s = sub_run.achieved_final;
        state = next_state;
    }

    if explore {
        out.master_transitions = originals;
        out.master_transitions
            .extend(her_relabel(&hindsight, her, threshold, &mut rngs.policy)?);
    }
    out.env_success = env.is_success(&state, &desired_env);
    Ok(out)
}

/// Hand-written policies for plumbing checks with identity transforms.
pub mod scripted {
    use super::*;

    /// Moves the gripper straight at the first three goal factors.
    #[derive(Debug, Clone)]
    pub struct ScriptedReach {
        pub a_max: f64,
    }

    impl GoalPolicy for ScriptedReach {
        fn act(&self, obs: &[f64], goal: &[f64], _explore: bool, _rng: &mut LabRng) -> Result<Vec<f64>> {
            Ok((0..3)
                .map(|i| (goal[i] - obs[i]).clamp(-self.a_max, self.a_max))
                .collect())
        }
    }

    /// Master that proposes the desired goal, clipped to the offset bound.
    #[derive(Debug, Clone)]
    pub struct ScriptedMaster {
        pub offset_bound: f64,
    }

    impl GoalPolicy for ScriptedMaster {
        fn act(&self, obs: &[f64], goal: &[f64], _explore: bool, _rng: &mut LabRng) -> Result<Vec<f64>> {
            Ok(goal
                .iter()
                .enumerate()
                .map(|(i, g)| (g - obs.get(i).copied().unwrap_or(0.0)).clamp(-self.offset_bound, self.offset_bound))
                .collect())
        }
    }

    /// Always emits zeros.
    #[derive(Debug, Clone)]
    pub struct Idle {
        pub dim: usize,
    }

    impl GoalPolicy for Idle {
        fn act(&self, _obs: &[f64], _goal: &[f64], _explore: bool, _rng: &mut LabRng) -> Result<Vec<f64>> {
            Ok(vec![0.0; self.dim])
        }
    }
}
