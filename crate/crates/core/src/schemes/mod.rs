//! Control schemes. Each scheme is a pairing of a handover-parameter policy
//! with a resource-allocation policy; the pairs compose freely.

pub mod lb;
pub mod ra;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::BanditTable;
use crate::error::SimError;

pub use lb::{default_params, rlbra_params, LbActionSpace, LbAgent, LbRewardTiming};
pub use ra::{
    enforce_power_cap, max_throughput_alloc, pa_assign, round_robin_alloc, sa_assign, PaLevels, SaAgent,
};

/// Arm-selection rule shared by the learning agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Selector {
    Ucb,
    EpsilonGreedy(f64),
}

impl Selector {
    pub fn select(self, table: &BanditTable, rng: &mut impl Rng) -> usize {
        match self {
            Selector::Ucb => table.select_ucb(rng),
            Selector::EpsilonGreedy(eps) => table.select_epsilon_greedy(eps, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LbPolicy {
    /// Off = Hys = 0 on every O-RU.
    Fixed,
    /// Load-proportional rule.
    RuleBased,
    /// Per-O-RU bandit.
    Learned(Selector),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RaPolicy {
    /// Bandit-chosen subchannel offset, RSRP power ladder, power cap.
    Learned(Selector),
    /// Round-robin grants at equal power.
    RoundRobin,
    /// Strongest users first at equal power.
    MaxThroughput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Mmlbra,
    Rlbra,
    EpsilonGreedy,
    Default,
    NoRa,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Mmlbra,
        Scheme::Rlbra,
        Scheme::EpsilonGreedy,
        Scheme::Default,
        Scheme::NoRa,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scheme::Mmlbra => "mmlbra",
            Scheme::Rlbra => "rlbra",
            Scheme::EpsilonGreedy => "epsilon_greedy",
            Scheme::Default => "default",
            Scheme::NoRa => "no_ra",
        }
    }

    pub fn policies(self, epsilon: f64) -> (LbPolicy, RaPolicy) {
        let eg = Selector::EpsilonGreedy(epsilon);
        match self {
            Scheme::Mmlbra => (LbPolicy::Learned(Selector::Ucb), RaPolicy::Learned(Selector::Ucb)),
            Scheme::EpsilonGreedy => (LbPolicy::Learned(eg), RaPolicy::Learned(eg)),
            Scheme::Rlbra => (LbPolicy::RuleBased, RaPolicy::MaxThroughput),
            Scheme::Default => (LbPolicy::Fixed, RaPolicy::RoundRobin),
            Scheme::NoRa => (LbPolicy::Learned(Selector::Ucb), RaPolicy::RoundRobin),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| SimError::Config(format!("unknown scheme '{s}'")))
    }
}

/// Agents restored from a dump get a fixed stream; only their tables matter.
pub(crate) fn placeholder_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0)
}
