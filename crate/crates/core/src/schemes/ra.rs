//! Resource allocation: learned subchannel offsets, the RSRP-driven power
//! ladder, the per-O-RU power cap and the scheduler baselines.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{BanditTable, RunningMinMax};
use crate::schemes::Selector;
use crate::topology::{Grant, UserId};

/// RSRP thresholds (dBm, descending) and the four power levels (W, ascending).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PaLevels {
    pub thresholds_dbm: [f64; 3],
    pub levels_w: [f64; 4],
    /// Hand the strongest power to the weakest users instead.
    pub inverted: bool,
}

impl Default for PaLevels {
    fn default() -> Self {
        Self {
            thresholds_dbm: [-80.0, -90.0, -100.0],
            levels_w: [0.5, 1.25, 3.75, 5.0],
            inverted: false,
        }
    }
}

impl PaLevels {
    pub fn validate(&self) -> bool {
        let t = self.thresholds_dbm;
        let p = self.levels_w;
        t[0] > t[1] && t[1] > t[2] && p[0] > 0.0 && p[0] < p[1] && p[1] < p[2] && p[2] < p[3]
    }

    /// The level immediately below `p`, or `None` at the floor.
    fn lower(&self, p: f64) -> Option<f64> {
        let idx = self.levels_w.iter().position(|&l| l >= p)?;
        (idx > 0).then(|| self.levels_w[idx - 1])
    }
}

/// Per-subchannel transmit power from the user's RSRP.
pub fn pa_assign(rsrp_dbm: f64, levels: &PaLevels) -> f64 {
    let [t1, t2, t3] = levels.thresholds_dbm;
    let tier = if rsrp_dbm >= t1 {
        3
    } else if rsrp_dbm >= t2 {
        2
    } else if rsrp_dbm >= t3 {
        1
    } else {
        0
    };
    let tier = if levels.inverted { 3 - tier } else { tier };
    levels.levels_w[tier]
}

/// Brings one O-RU's total power under `p_max`: the highest-power grant
/// (earliest on ties) steps down one level at a time; once everything sits at
/// the floor, the weakest users lose subchannels. `rsrp` is indexed by user.
pub fn enforce_power_cap(grants: &mut Vec<Grant>, p_max: f64, levels: &PaLevels, rsrp: &[f64]) {
    if !p_max.is_finite() {
        return;
    }
    let mut total: f64 = grants.iter().map(|g| g.power).sum();
    while total > p_max + 1e-9 {
        let mut top: Option<usize> = None;
        for (i, g) in grants.iter().enumerate() {
            if levels.lower(g.power).is_some() && top.is_none_or(|t| g.power > grants[t].power) {
                top = Some(i);
            }
        }
        match top {
            Some(i) => {
                let next = levels.lower(grants[i].power).expect("checked above");
                total -= grants[i].power - next;
                grants[i].power = next;
            }
            None => {
                // Drop the last grant of the weakest user.
                let weakest = grants
                    .iter()
                    .enumerate()
                    .min_by(|a, b| {
                        rsrp[a.1.user]
                            .total_cmp(&rsrp[b.1.user])
                            .then(b.0.cmp(&a.0))
                    })
                    .map(|(i, _)| i)
                    .expect("non-empty while over the cap");
                total -= grants.remove(weakest).power;
            }
        }
    }
}

/// Contiguous blocks from `offset`, wrapping modulo `n`, in the order users
/// are given. The block of the user that exhausts the pool is truncated and
/// later users get nothing.
pub fn sa_assign(offset: usize, users: &[(UserId, usize)], n: usize) -> Vec<(UserId, usize)> {
    let mut out = Vec::new();
    let mut next = 0;
    for &(u, want) in users {
        for _ in 0..want {
            if next == n {
                return out;
            }
            out.push((u, (offset + next) % n));
            next += 1;
        }
    }
    out
}

/// One subchannel per pass to each user still short of its demand, in the
/// order given, until the pool runs out. Subchannels are handed out in index
/// order.
pub fn round_robin_alloc(users: &[(UserId, usize)], n: usize) -> Vec<(UserId, usize)> {
    let mut granted = vec![0usize; users.len()];
    let mut out = Vec::new();
    let mut next = 0;
    loop {
        let mut progressed = false;
        for (i, &(u, want)) in users.iter().enumerate() {
            if granted[i] < want {
                if next == n {
                    return out;
                }
                out.push((u, next));
                next += 1;
                granted[i] += 1;
                progressed = true;
            }
        }
        if !progressed {
            return out;
        }
    }
}

/// Best-channel-first full blocks from subchannel 0.
pub fn max_throughput_alloc(users_by_rsrp: &[(UserId, usize)], n: usize) -> Vec<(UserId, usize)> {
    sa_assign(0, users_by_rsrp, n)
}

/// Per-O-RU subchannel-offset agent; reward is the mean served-user rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaAgent {
    pub table: BanditTable,
    normalizer: RunningMinMax,
    normalize: bool,
    current: Option<usize>,
    #[serde(skip, default = "crate::schemes::placeholder_rng")]
    rng: ChaCha8Rng,
}

impl SaAgent {
    pub fn new(subchannels: usize, normalize: bool, rng: ChaCha8Rng) -> Self {
        Self {
            table: BanditTable::new(subchannels),
            normalizer: RunningMinMax::default(),
            normalize,
            current: None,
            rng,
        }
    }

    pub fn current_offset(&self) -> Option<usize> {
        self.current
    }

    /// Picks an offset and lays the users (already in descending-RSRP order)
    /// out from it.
    pub fn sa_step(&mut self, selector: Selector, users: &[(UserId, usize)]) -> Vec<(UserId, usize)> {
        let offset = selector.select(&self.table, &mut self.rng);
        self.table.pull(offset).expect("selector returns a valid arm");
        self.current = Some(offset);
        sa_assign(offset, users, self.table.arms())
    }

    /// Feeds the mean served-user rate for the running offset. The table
    /// learns on Mbit/s.
    pub fn reward(&mut self, mean_rate_bps: f64) {
        if let Some(arm) = self.current.take() {
            let mbps = mean_rate_bps / 1e6;
            let r = if self.normalize { self.normalizer.normalize(mbps) } else { mbps };
            self.table.update(arm, r).expect("arm was pulled");
        }
    }
}
