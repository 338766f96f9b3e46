//! Goal-conditioned DDPG with hindsight experience replay.

mod ddpg;
mod her;
mod replay;
mod transition;

pub use ddpg::{Batch, DdpgAgent, DdpgHyper, GoalPolicy, UpdateStats};
pub use her::{her_relabel, HerMode, HerStrategy};
pub use replay::ReplayBuffer;
pub use transition::{sparse_reward, Experience, Transition};
