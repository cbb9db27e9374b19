//! Handover-parameter control: the bandit LB agent and the rule-based and
//! fixed baselines.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{BanditTable, RunningMinMax};
use crate::handover::{HandoverParams, DEFAULT_TTT_S, HYS_MAX, HYS_MIN, OFF_MAX, OFF_MIN};
use crate::schemes::Selector;

/// Finite set Θ of (Off, Hys) pairs an LB agent chooses from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LbActionSpace {
    pub pairs: Vec<(i32, i32)>,
}

impl LbActionSpace {
    /// Cartesian product, offsets outermost.
    pub fn grid(offsets: &[i32], hysteresis: &[i32]) -> Self {
        let pairs = offsets
            .iter()
            .flat_map(|&o| hysteresis.iter().map(move |&h| (o, h)))
            .collect();
        Self { pairs }
    }

    /// Every integer pair: 31 × 16 = 496 arms.
    pub fn full() -> Self {
        let offs: Vec<i32> = (OFF_MIN..=OFF_MAX).collect();
        let hys: Vec<i32> = (HYS_MIN..=HYS_MAX).collect();
        Self::grid(&offs, &hys)
    }

    /// 5 dB offset steps and 3 dB hysteresis steps: 7 × 6 = 42 arms.
    pub fn coarse() -> Self {
        Self::grid(&[-15, -10, -5, 0, 5, 10, 15], &[0, 3, 6, 9, 12, 15])
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn params(&self, arm: usize, ttt: f64) -> HandoverParams {
        let (off, hys) = self.pairs[arm];
        HandoverParams { off, hys, ttt }
    }
}

/// When the reward for an LB action is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbRewardTiming {
    /// The first T2 sample after the action is applied.
    FirstSample,
    /// The mean of every T2 sample while the action is held.
    PeriodMean,
}

/// One O-RU's load-balancing agent. Reward is −η of its O-RU.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LbAgent {
    pub table: BanditTable,
    normalizer: RunningMinMax,
    normalize: bool,
    current: Option<usize>,
    sum: f64,
    samples: u32,
    timing: LbRewardTiming,
    #[serde(skip, default = "crate::schemes::placeholder_rng")]
    rng: ChaCha8Rng,
}

impl LbAgent {
    pub fn new(arms: usize, timing: LbRewardTiming, normalize: bool, rng: ChaCha8Rng) -> Self {
        Self {
            table: BanditTable::new(arms),
            normalizer: RunningMinMax::default(),
            normalize,
            current: None,
            sum: 0.0,
            samples: 0,
            timing,
            rng,
        }
    }

    pub fn current_arm(&self) -> Option<usize> {
        self.current
    }

    /// Closes the running action (if any) and picks the next one.
    pub fn lb_step(&mut self, selector: Selector, space: &LbActionSpace, ttt: f64) -> HandoverParams {
        self.settle();
        let arm = selector.select(&self.table, &mut self.rng);
        self.table.pull(arm).expect("selector returns a valid arm");
        self.current = Some(arm);
        space.params(arm, ttt)
    }

    /// Feeds one T2 measurement of η.
    pub fn observe_eta(&mut self, eta: usize) {
        if self.current.is_none() {
            return;
        }
        if self.timing == LbRewardTiming::FirstSample && self.samples > 0 {
            return;
        }
        self.sum += -(eta as f64);
        self.samples += 1;
    }

    /// Applies the pending reward to the table.
    pub fn settle(&mut self) {
        if let (Some(arm), true) = (self.current, self.samples > 0) {
            let raw = self.sum / self.samples as f64;
            let r = if self.normalize { self.normalizer.normalize(raw) } else { raw };
            self.table.update(arm, r).expect("arm was pulled");
        }
        self.sum = 0.0;
        self.samples = 0;
    }
}

/// Load-proportional rule: an idle O-RU holds on to users (+Off, +Hys), a
/// full one sheds them.
pub fn rlbra_params(load: usize, subchannels: usize, ttt: f64) -> HandoverParams {
    let u = (load as f64 / subchannels as f64).min(1.0);
    let span = (OFF_MAX - OFF_MIN) as f64;
    HandoverParams {
        off: (OFF_MAX as f64 - span * u).round() as i32,
        hys: (HYS_MAX as f64 * (1.0 - u)).round() as i32,
        ttt,
    }
}

pub fn default_params() -> HandoverParams {
    HandoverParams { off: 0, hys: 0, ttt: DEFAULT_TTT_S }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::handover::a3_trigger;
    use crate::rng::{stream, Stream};
    use std::collections::HashSet;

    #[test]
    fn action_space_sizes() {
        assert_eq!(LbActionSpace::full().len(), 496);
        assert_eq!(LbActionSpace::coarse().len(), 42);
        for sp in [LbActionSpace::full(), LbActionSpace::coarse()] {
            assert!((0..sp.len()).all(|a| sp.params(a, 2.56).in_theta()));
        }
    }

    #[test]
    fn first_pulls_cover_every_arm_once() {
        let space = LbActionSpace::full();
        let mut agent = LbAgent::new(space.len(), LbRewardTiming::PeriodMean, true, stream(1, Stream::LbAgent, 0));
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        for _ in 0..space.len() {
            let p = agent.lb_step(Selector::Ucb, &space, 2.56);
            assert!(seen.insert((p.off, p.hys)));
            order.push(agent.current_arm().unwrap());
            agent.observe_eta(7);
        }
        assert_eq!(seen.len(), 496);
        // random rather than index order
        assert!(order.windows(2).any(|w| w[1] != w[0] + 1));
    }

    #[test]
    fn balanced_network_gives_the_maximum_reward() {
        let space = LbActionSpace::coarse();
        let mut agent = LbAgent::new(space.len(), LbRewardTiming::PeriodMean, false, stream(1, Stream::LbAgent, 0));
        agent.lb_step(Selector::Ucb, &space, 2.56);
        let arm = agent.current_arm().unwrap();
        agent.observe_eta(0);
        agent.settle();
        assert_eq!(agent.table.value(arm), Some(0.0));
    }

    #[test]
    fn reward_timing() {
        let space = LbActionSpace::coarse();
        for (timing, expect) in [(LbRewardTiming::FirstSample, -4.0), (LbRewardTiming::PeriodMean, -6.0)] {
            let mut agent = LbAgent::new(space.len(), timing, false, stream(2, Stream::LbAgent, 0));
            agent.lb_step(Selector::Ucb, &space, 2.56);
            let arm = agent.current_arm().unwrap();
            agent.observe_eta(4);
            agent.observe_eta(8);
            agent.settle();
            assert_eq!(agent.table.value(arm), Some(expect));
        }
    }

    #[test]
    fn rule_based_endpoints() {
        let p = rlbra_params(0, 80, 2.56);
        assert_eq!((p.off, p.hys), (15, 15));
        let p = rlbra_params(80, 80, 2.56);
        assert_eq!((p.off, p.hys), (-15, 0));
        let p = rlbra_params(200, 80, 2.56);
        assert_eq!((p.off, p.hys), (-15, 0));
        // u = 1/2: Off = 15 − 15 = 0, Hys = round(7.5) = 8
        let p = rlbra_params(40, 80, 2.56);
        assert_eq!((p.off, p.hys), (0, 8));
        assert!((0..=100).all(|w| rlbra_params(w, 80, 2.56).in_theta()));
    }

    #[test]
    fn default_pair_reduces_a3_to_plain_comparison() {
        let p = default_params();
        assert_eq!((p.off, p.hys, p.ttt), (0, 0, 2.56));
        for (mn, ms) in [(-80.0, -81.0), (-81.0, -80.0), (-80.0, -80.0)] {
            assert_eq!(a3_trigger(mn, ms, &p), mn > ms);
        }
    }
}
