//! Multi-armed bandit core: sample-average action values, UCB and
//! ε-greedy selection.
//!
//! Counts are bumped when an arm is pulled, before its reward arrives, so the
//! update divisor is always the post-pull count:
//!
//! ```text
//! q(a) <- q(a) + (r - q(a)) / n(a)
//! ucb(a) = q(a) + sqrt(2 ln m / n(a)),   m = Σ n(a)
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditTable {
    q: Vec<f64>,
    n: Vec<u64>,
    m: u64,
}

impl BanditTable {
    pub fn new(arms: usize) -> Self {
        assert!(arms > 0, "a bandit needs at least one arm");
        Self { q: vec![0.0; arms], n: vec![0; arms], m: 0 }
    }

    pub fn arms(&self) -> usize {
        self.q.len()
    }

    /// Action value, `None` until the arm has been pulled.
    pub fn value(&self, arm: usize) -> Option<f64> {
        (self.n[arm] > 0).then_some(self.q[arm])
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.n[arm]
    }

    pub fn total_pulls(&self) -> u64 {
        self.m
    }

    pub fn has_untried(&self) -> bool {
        self.n.contains(&0)
    }

    /// Registers a selection of `arm`.
    pub fn pull(&mut self, arm: usize) -> Result<()> {
        self.check(arm)?;
        self.n[arm] += 1;
        self.m += 1;
        Ok(())
    }

    /// Incremental-mean update for an arm that has already been pulled.
    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.check(arm)?;
        let n = self.n[arm];
        if n == 0 {
            return Err(SimError::InvalidArgument(format!("arm {arm} updated before being pulled")));
        }
        self.q[arm] += (reward - self.q[arm]) / n as f64;
        Ok(())
    }

    fn check(&self, arm: usize) -> Result<()> {
        if arm >= self.arms() {
            return Err(SimError::UnknownArm { arm, arms: self.arms() });
        }
        Ok(())
    }

    /// q(a) + sqrt(2 ln m / n(a)) for a tried arm.
    pub fn ucb_score(&self, arm: usize) -> f64 {
        ucb_index(self.q[arm], self.n[arm], self.m.max(1) as f64)
    }

    /// A uniformly random untried arm if any remain, otherwise the UCB argmax
    /// (lowest index on ties).
    pub fn select_ucb(&self, rng: &mut impl Rng) -> usize {
        if let Some(arm) = self.random_untried(rng) {
            return arm;
        }
        argmax((0..self.arms()).map(|a| self.ucb_score(a)))
    }

    /// With probability ε a uniform arm; otherwise the greedy arm, where an
    /// untried arm outranks every tried one.
    pub fn select_epsilon_greedy(&self, epsilon: f64, rng: &mut impl Rng) -> usize {
        if epsilon > 0.0 && rng.random::<f64>() < epsilon {
            return rng.random_range(0..self.arms());
        }
        argmax((0..self.arms()).map(|a| if self.n[a] == 0 { f64::INFINITY } else { self.q[a] }))
    }

    fn random_untried(&self, rng: &mut impl Rng) -> Option<usize> {
        let untried = self.n.iter().filter(|&&c| c == 0).count();
        if untried == 0 {
            return None;
        }
        let pick = rng.random_range(0..untried);
        self.n
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .nth(pick)
            .map(|(a, _)| a)
    }
}

/// q + sqrt(2 ln m / n).
pub fn ucb_index(q: f64, n: u64, total_pulls: f64) -> f64 {
    q + (2.0 * total_pulls.ln() / n as f64).sqrt()
}

/// First index of the maximum.
pub fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// Min-max scaling into [0, 1] against the extremes seen so far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningMinMax {
    lo: f64,
    hi: f64,
}

impl Default for RunningMinMax {
    fn default() -> Self {
        Self { lo: f64::INFINITY, hi: f64::NEG_INFINITY }
    }
}

impl RunningMinMax {
    pub fn normalize(&mut self, raw: f64) -> f64 {
        self.lo = self.lo.min(raw);
        self.hi = self.hi.max(raw);
        let span = self.hi - self.lo;
        if span > 0.0 {
            (raw - self.lo) / span
        } else {
            0.5
        }
    }
}
