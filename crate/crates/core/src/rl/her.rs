//! Hindsight relabeling with the `future` strategy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::transition::{sparse_reward, Experience};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HerMode {
    /// Goals drawn from achieved outcomes later in the same episode.
    Future,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HerStrategy {
    pub mode: HerMode,
    /// Relabeled copies per transition.
    pub k: usize,
}

impl Default for HerStrategy {
    fn default() -> Self {
        Self {
            mode: HerMode::Future,
            k: 4,
        }
    }
}

impl HerStrategy {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("HER k must be at least 1"));
        }
        Ok(())
    }
}

/// Returns `episode` followed by `k` relabeled copies of each transition. Copy
/// `j` of transition `t` takes its desired goal from the `next_achieved_goal`
/// of a uniformly drawn `t' >= t`; reward and `done` are recomputed from it.
pub fn her_relabel<T: Experience, R: Rng + ?Sized>(
    episode: &[T],
    strategy: &HerStrategy,
    threshold: f64,
    rng: &mut R,
) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(episode.len() * (1 + strategy.k));
    out.extend(episode.iter().cloned());
    match strategy.mode {
        HerMode::Future => {
            for (t, transition) in episode.iter().enumerate() {
                for _ in 0..strategy.k {
                    let future = rng.random_range(t..episode.len());
                    let goal = episode[future].next_achieved_goal().to_vec();
                    let reward = sparse_reward(transition.next_achieved_goal(), &goal, threshold)?;
                    let mut copy = transition.clone();
                    copy.relabel(goal, reward, reward == 0.0);
                    out.push(copy);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::distance;
    use crate::rl::Transition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn episode(len: usize, rng: &mut ChaCha8Rng) -> Vec<Transition> {
        let mut pos = [0.5, 0.5, 0.5];
        let goal = vec![0.9, 0.1, 0.9];
        (0..len)
            .map(|_| {
                let obs = pos.to_vec();
                let a: Vec<f64> = (0..3).map(|_| rng.random_range(-0.05..0.05)).collect();
                for i in 0..3 {
                    pos[i] += a[i];
                }
                Transition {
                    obs: obs.clone(),
                    action: a,
                    next_obs: pos.to_vec(),
                    achieved_goal: obs,
                    next_achieved_goal: pos.to_vec(),
                    desired_goal: goal.clone(),
                    reward: -1.0,
                    done: false,
                }
            })
            .collect()
    }

    #[test]
    fn output_size_is_counted() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ep = episode(50, &mut rng);
        let out = her_relabel(&ep, &HerStrategy::default(), 0.1, &mut rng).unwrap();
        assert_eq!(out.len(), 250);
        assert_eq!(&out[..50], &ep[..]);
    }

    #[test]
    fn last_transition_relabels_to_success() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ep = episode(1, &mut rng);
        let out = her_relabel(&ep, &HerStrategy { mode: HerMode::Future, k: 3 }, 0.1, &mut rng)
            .unwrap();
        for t in &out[1..] {
            assert_eq!(t.desired_goal, ep[0].next_achieved_goal);
            assert_eq!(t.reward, 0.0);
            assert!(t.done);
        }
    }

    #[test]
    fn rewards_match_brute_force_recheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ep = episode(40, &mut rng);
        let out = her_relabel(&ep, &HerStrategy::default(), 0.1, &mut rng).unwrap();
        for (i, t) in out.iter().enumerate().skip(ep.len()) {
            let src = &ep[(i - ep.len()) / 4];
            assert_eq!((&t.obs, &t.action, &t.next_obs), (&src.obs, &src.action, &src.next_obs));
            let d = distance(&t.next_achieved_goal, &t.desired_goal);
            let expected = if d < 0.1 { 0.0 } else { -1.0 };
            assert_eq!(t.reward, expected);
            assert_eq!(t.done, expected == 0.0);
            // goal comes from the same or a later step
            let origin = ep
                .iter()
                .position(|s| s.next_achieved_goal == t.desired_goal)
                .unwrap();
            assert!(origin >= (i - ep.len()) / 4);
        }
    }
}
