use std::time::Instant;

use rand::SeedableRng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::stats::{aggregate, CurveAggregate};
use crate::error::{Error, Result};
use crate::hac::scripted::{ScriptedMaster, ScriptedReach};
use crate::hac::{run_hierarchy_episode, EpisodeMode, EpisodeOutcome, EpisodeRngs, HacConfig, MasterTransition};
use crate::rl::{DdpgAgent, GoalPolicy, ReplayBuffer, Transition};
use crate::LabRng;

/// Whatever is being trained in a trial: the policies it exposes and how it learns.
pub trait TrialAgent {
    fn master(&self) -> Option<&dyn GoalPolicy>;
    fn sub(&self) -> &dyn GoalPolicy;
    /// Consumes one training episode's transitions.
    fn learn(&mut self, outcome: EpisodeOutcome, rng: &mut LabRng) -> Result<()>;
}

/// DDPG learners with their own replay memories, one per level.
pub struct Learner {
    sub: DdpgAgent,
    sub_memory: ReplayBuffer<Transition>,
    master: Option<(DdpgAgent, ReplayBuffer<MasterTransition>)>,
}

impl Learner {
    pub fn new(config: &ExperimentConfig, rng: &mut LabRng) -> Result<Self> {
        let hac = config.hac_config();
        let obs_dim = config.env.obs_dim();
        let sub = DdpgAgent::new(
            obs_dim,
            hac.sub_goal_dim()?,
            config.env.action_bounds(),
            config.hyper.clone(),
            rng,
        )?;
        let master = if hac.levels == 2 {
            let agent = DdpgAgent::new(
                obs_dim,
                hac.master_goal_dim()?,
                vec![hac.master_offset_bound; hac.sub_goal_dim()?],
                config.hyper.clone(),
                rng,
            )?;
            Some((agent, ReplayBuffer::new(config.hyper.buffer_capacity)))
        } else {
            None
        };
        Ok(Self {
            sub,
            sub_memory: ReplayBuffer::new(config.hyper.buffer_capacity),
            master,
        })
    }

    pub fn sub_agent(&self) -> &DdpgAgent {
        &self.sub
    }

    pub fn master_agent(&self) -> Option<&DdpgAgent> {
        self.master.as_ref().map(|(a, _)| a)
    }
}

impl TrialAgent for Learner {
    fn master(&self) -> Option<&dyn GoalPolicy> {
        self.master.as_ref().map(|(a, _)| a as &dyn GoalPolicy)
    }

    fn sub(&self) -> &dyn GoalPolicy {
        &self.sub
    }

    fn learn(&mut self, outcome: EpisodeOutcome, rng: &mut LabRng) -> Result<()> {
        self.sub_memory.extend(outcome.sub_transitions);
        if let Some((_, memory)) = &mut self.master {
            memory.extend(outcome.master_transitions);
        }
        for _ in 0..self.sub.hyper().updates_per_cycle {
            self.sub.update(&self.sub_memory, rng)?;
            if let Some((agent, memory)) = &mut self.master {
                agent.update(memory, rng)?;
            }
        }
        let finite = self.sub.is_finite() && self.master.as_ref().is_none_or(|(a, _)| a.is_finite());
        if !finite {
            return Err(Error::NonFinite("network parameters after update".into()));
        }
        Ok(())
    }
}

/// Hand-written reach controller in place of the learners; never learns.
pub struct ScriptedAgent {
    master: ScriptedMaster,
    sub: ScriptedReach,
    levels: usize,
}

impl ScriptedAgent {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            master: ScriptedMaster {
                offset_bound: config.hac.master_offset_bound,
            },
            sub: ScriptedReach { a_max: config.env.a_max },
            levels: config.algorithm.levels(),
        }
    }
}

impl TrialAgent for ScriptedAgent {
    fn master(&self) -> Option<&dyn GoalPolicy> {
        (self.levels == 2).then_some(&self.master as &dyn GoalPolicy)
    }

    fn sub(&self) -> &dyn GoalPolicy {
        &self.sub
    }

    fn learn(&mut self, _outcome: EpisodeOutcome, _rng: &mut LabRng) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    /// Eval success rate per completed epoch.
    pub success_rates: Vec<f64>,
    /// Cumulative environment steps (training and evaluation) per completed epoch.
    pub env_steps: Vec<u64>,
    pub wall_time_secs: f64,
    /// Reason the trial stopped early, if it did.
    pub aborted: Option<String>,
}

fn stream(seed: u64, id: u64) -> LabRng {
    let mut r = LabRng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

/// Fraction of `episodes` greedy episodes that end at the environment goal.
pub fn evaluate(
    agent: &dyn TrialAgent,
    config: &ExperimentConfig,
    hac: &HacConfig,
    episodes: usize,
    rngs: &mut EpisodeRngs,
) -> Result<(f64, u64)> {
    let mut wins = 0;
    let mut steps = 0;
    for _ in 0..episodes {
        let out = run_hierarchy_episode(
            agent.master(),
            agent.sub(),
            &config.env,
            hac,
            &config.her,
            EpisodeMode::Eval,
            rngs,
        )?;
        wins += usize::from(out.env_success);
        steps += out.env_steps as u64;
    }
    Ok((wins as f64 / episodes as f64, steps))
}

pub fn run_trial(config: &ExperimentConfig, trial_index: usize) -> Result<TrialResult> {
    config.validate()?;
    let mut init = stream(config.seed_for(trial_index), 0);
    let mut learner = Learner::new(config, &mut init)?;
    run_trial_with_agent(config, trial_index, &mut learner)
}

/// Training loop: each epoch runs `episodes_per_epoch` training episodes, then
/// `eval_episodes` greedy ones. Non-finite parameters stop the trial and flag it.
pub fn run_trial_with_agent(
    config: &ExperimentConfig,
    trial_index: usize,
    agent: &mut dyn TrialAgent,
) -> Result<TrialResult> {
    let started = Instant::now();
    let seed = config.seed_for(trial_index);
    let hac = config.hac_config();
    let mut train = EpisodeRngs::from_seed(seed);
    let mut eval = EpisodeRngs {
        env: stream(seed, 5),
        policy: stream(seed, 6),
        noise: stream(seed, 7),
    };
    let mut learn_rng = stream(seed, 4);

    let mut result = TrialResult {
        trial: trial_index,
        seed,
        success_rates: Vec::with_capacity(config.epochs),
        env_steps: Vec::with_capacity(config.epochs),
        wall_time_secs: 0.0,
        aborted: None,
    };
    let mut steps = 0u64;
    'epochs: for _ in 0..config.epochs {
        for _ in 0..config.episodes_per_epoch {
            let out = run_hierarchy_episode(
                agent.master(),
                agent.sub(),
                &config.env,
                &hac,
                &config.her,
                EpisodeMode::Train,
                &mut train,
            )?;
            steps += out.env_steps as u64;
            match agent.learn(out, &mut learn_rng) {
                Ok(()) => {}
                Err(Error::NonFinite(msg)) => {
                    log::warn!("trial {trial_index} (seed {seed}) aborted: {msg}");
                    result.aborted = Some(msg);
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
        }
        let (rate, eval_steps) = evaluate(agent, config, &hac, config.eval_episodes, &mut eval)?;
        steps += eval_steps;
        result.success_rates.push(rate);
        result.env_steps.push(steps);
    }
    result.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Every trial in index order, aborted ones included.
    pub trials: Vec<TrialResult>,
    /// Over completed trials only.
    pub aggregate: CurveAggregate,
}

impl ExperimentResult {
    pub fn completed(&self) -> impl Iterator<Item = &TrialResult> {
        self.trials.iter().filter(|t| t.aborted.is_none())
    }

    pub fn aborted(&self) -> Vec<usize> {
        self.trials
            .iter()
            .filter(|t| t.aborted.is_some())
            .map(|t| t.trial)
            .collect()
    }

    fn from_trials(config: ExperimentConfig, trials: Vec<TrialResult>) -> Result<Self> {
        let done: Vec<&TrialResult> = trials.iter().filter(|t| t.aborted.is_none()).collect();
        let curves: Vec<&[f64]> = done.iter().map(|t| t.success_rates.as_slice()).collect();
        let steps = done.first().map(|t| t.env_steps.clone()).unwrap_or_default();
        let aggregate = aggregate(&curves, &steps)?;
        Ok(Self {
            config,
            trials,
            aggregate,
        })
    }
}

pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult> {
    Ok(run_many(std::slice::from_ref(config), jobs)?.remove(0))
}

/// Runs every trial of every config on one pool of `jobs` workers. Results are
/// merged by index, so output does not depend on `jobs`.
pub fn run_many(configs: &[ExperimentConfig], jobs: usize) -> Result<Vec<ExperimentResult>> {
    for c in configs {
        c.validate()?;
    }
    let work: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(c, cfg)| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let mut results: Vec<TrialResult> = pool.install(|| {
        work.par_iter()
            .map(|&(c, t)| run_trial(&configs[c], t))
            .collect::<Result<_>>()
    })?;

    let mut out = Vec::with_capacity(configs.len());
    for cfg in configs.iter().rev() {
        let trials = results.split_off(results.len() - cfg.trials);
        let aborted = trials.iter().filter(|t| t.aborted.is_some()).count();
        if aborted > 0 {
            log::warn!("{}: {aborted} of {} trials aborted", cfg.label(), cfg.trials);
        }
        out.push(ExperimentResult::from_trials(cfg.clone(), trials)?);
    }
    out.reverse();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvAction;
    use crate::goalspace::TransformSpec;
    use crate::hac::Algorithm;
    use rand::Rng;

    fn tiny(algorithm: Algorithm) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(algorithm);
        c.trials = 2;
        c.epochs = 2;
        c.episodes_per_epoch = 2;
        c.eval_episodes = 3;
        c.hyper.batch_size = 16;
        c.hyper.updates_per_cycle = 2;
        c.hyper.hidden_layers = vec![8];
        c
    }

    #[test]
    fn same_trial_twice_is_identical() {
        for alg in [Algorithm::Her, Algorithm::Hac] {
            let cfg = tiny(alg).with_transform(TransformSpec::noise(0.02));
            let a = run_trial(&cfg, 1).unwrap();
            let b = run_trial(&cfg, 1).unwrap();
            assert_eq!(a.success_rates, b.success_rates);
            assert_eq!(a.env_steps, b.env_steps);
            assert_eq!(a.success_rates.len(), cfg.epochs);
        }
    }

    #[test]
    fn scripted_agent_always_succeeds_on_reach() {
        for alg in [Algorithm::Her, Algorithm::Hac] {
            let mut cfg = tiny(alg);
            cfg.epochs = 3;
            cfg.eval_episodes = 20;
            let mut agent = ScriptedAgent::new(&cfg);
            let r = run_trial_with_agent(&cfg, 0, &mut agent).unwrap();
            assert_eq!(r.success_rates, vec![1.0; 3]);
        }
    }

    #[test]
    fn env_step_accounting() {
        let cfg = tiny(Algorithm::Hac);
        let r = run_trial(&cfg, 0).unwrap();
        let per_epoch = ((cfg.episodes_per_epoch + cfg.eval_episodes) * cfg.env.episode_length) as u64;
        assert_eq!(r.env_steps, vec![per_epoch, 2 * per_epoch]);
    }

    #[test]
    fn untrained_agent_is_near_random_policy() {
        let mut cfg = tiny(Algorithm::Her);
        cfg.eval_episodes = 400;
        let mut init = stream(cfg.seed_for(0), 0);
        let learner = Learner::new(&cfg, &mut init).unwrap();
        let hac = cfg.hac_config();
        let (rate, _) = evaluate(&learner, &cfg, &hac, cfg.eval_episodes, &mut EpisodeRngs::from_seed(1)).unwrap();

        // Monte-Carlo rollout of a uniformly random policy
        let env = &cfg.env;
        let mut rng = LabRng::seed_from_u64(2);
        let n = 4000;
        let mut wins = 0;
        for _ in 0..n {
            let (mut s, goal) = env.reset(&mut rng);
            for _ in 0..env.episode_length {
                let delta = [0; 3].map(|_| rng.random_range(-env.a_max..env.a_max));
                s = env.step(&s, &EnvAction { delta, grip_command: 0.0 });
            }
            wins += usize::from(env.is_success(&s, &goal));
        }
        let random_rate = wins as f64 / n as f64;
        assert!(random_rate < 0.1);
        assert!((rate - random_rate).abs() < 0.1, "untrained {rate} vs random {random_rate}");
    }

    #[test]
    fn aggregation_ignores_jobs_and_seed_isolation_holds() {
        let mut cfg = tiny(Algorithm::Her);
        cfg.trials = 3;
        let a = run_experiment(&cfg, 1).unwrap();
        let b = run_experiment(&cfg, 3).unwrap();
        assert_eq!(a.aggregate, b.aggregate);
        assert_eq!(a.trials.iter().map(|t| &t.success_rates).collect::<Vec<_>>(),
                   b.trials.iter().map(|t| &t.success_rates).collect::<Vec<_>>());

        // shifting the base seed by one moves trial i+1 into slot i
        let mut shifted = cfg.clone();
        shifted.base_seed = 1;
        let c = run_experiment(&shifted, 2).unwrap();
        assert_eq!(c.trials[0].success_rates, a.trials[1].success_rates);
        assert_eq!(c.trials[1].success_rates, a.trials[2].success_rates);
    }

    #[test]
    fn run_many_keeps_config_order() {
        let a = tiny(Algorithm::Her);
        let mut b = tiny(Algorithm::Hac);
        b.trials = 1;
        let out = run_many(&[a.clone(), b.clone()], 2).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].config, a);
        assert_eq!(out[1].trials.len(), 1);
        assert_eq!(out[1].trials[0].success_rates, run_trial(&b, 0).unwrap().success_rates);
    }

    #[test]
    fn exploding_learning_rate_aborts_trial() {
        let mut cfg = tiny(Algorithm::Her);
        cfg.hyper.critic_lr = 1e300;
        cfg.hyper.actor_lr = 1e300;
        cfg.hyper.updates_per_cycle = 20;
        cfg.episodes_per_epoch = 4;
        let r = run_trial(&cfg, 0).unwrap();
        assert!(r.aborted.is_some());
        assert!(r.success_rates.len() < cfg.epochs);
        assert!(run_experiment(&cfg, 1).is_err());
    }
}
