//! A3-event handover with hysteresis, offset and time-to-trigger.

use serde::{Deserialize, Serialize};

use crate::topology::{Association, OruId, UserId};

pub const OFF_MIN: i32 = -15;
pub const OFF_MAX: i32 = 15;
pub const HYS_MIN: i32 = 0;
pub const HYS_MAX: i32 = 15;
pub const DEFAULT_TTT_S: f64 = 2.56;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandoverParams {
    /// A3 offset, dB.
    pub off: i32,
    /// Hysteresis, dB.
    pub hys: i32,
    /// Time-to-trigger, s.
    pub ttt: f64,
}

impl Default for HandoverParams {
    fn default() -> Self {
        Self { off: 0, hys: 0, ttt: DEFAULT_TTT_S }
    }
}

impl HandoverParams {
    /// (Off, Hys) lies inside the admissible set Θ.
    pub fn in_theta(&self) -> bool {
        (OFF_MIN..=OFF_MAX).contains(&self.off) && (HYS_MIN..=HYS_MAX).contains(&self.hys)
    }
}

/// M_n − Hys > M_s + Off
pub fn a3_trigger(m_n: f64, m_s: f64, p: &HandoverParams) -> bool {
    m_n - p.hys as f64 > m_s + p.off as f64
}

/// M_n + Hys < M_s + Off
pub fn a3_leave(m_n: f64, m_s: f64, p: &HandoverParams) -> bool {
    m_n + (p.hys as f64) < m_s + p.off as f64
}

/// Number of whole steps the trigger has to hold, ⌈ttt/dt⌉.
pub fn ttt_steps(ttt: f64, dt: f64) -> u32 {
    ((ttt / dt) - 1e-9).ceil().max(0.0) as u32
}

/// Per (user, candidate) count of consecutive trigger-true steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct A3TimerState {
    orus: usize,
    steps: Vec<u32>,
}

impl A3TimerState {
    pub fn new(users: usize, orus: usize) -> Self {
        Self { orus, steps: vec![0; users * orus] }
    }

    pub fn elapsed_steps(&self, user: UserId, candidate: OruId) -> u32 {
        self.steps[user * self.orus + candidate]
    }

    pub fn elapsed_seconds(&self, user: UserId, candidate: OruId, dt: f64) -> f64 {
        self.elapsed_steps(user, candidate) as f64 * dt
    }

    fn row_mut(&mut self, user: UserId) -> &mut [u32] {
        &mut self.steps[user * self.orus..(user + 1) * self.orus]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HandoverDecision {
    pub user: UserId,
    pub from: OruId,
    pub to: OruId,
}

/// Advances every A3 timer by one step and returns the handovers that
/// complete. `rsrp[s][u]` in dBm; `params[s]` is the serving O-RU's pair.
/// `free[s]` is the number of unallocated subchannels at each O-RU; every
/// admitted user consumes one.
pub fn tick_and_decide(
    assoc: &Association,
    rsrp: &[Vec<f64>],
    params: &[HandoverParams],
    free: &mut [usize],
    dt: f64,
    timers: &mut A3TimerState,
) -> Vec<HandoverDecision> {
    let orus = rsrp.len();
    let mut out = Vec::new();
    for (u, serving) in assoc.serving.iter().enumerate() {
        let Some(s) = *serving else { continue };
        let p = params[s];
        let need = ttt_steps(p.ttt, dt);
        let m_s = rsrp[s][u];
        let row = timers.row_mut(u);
        let mut best: Option<OruId> = None;
        for c in 0..orus {
            if c == s {
                row[c] = 0;
                continue;
            }
            let m_n = rsrp[c][u];
            if a3_trigger(m_n, m_s, &p) {
                row[c] = (row[c] + 1).min(need);
            } else if a3_leave(m_n, m_s, &p) {
                row[c] = 0;
            }
            if row[c] >= need && free[c] > 0 && best.is_none_or(|b| m_n > rsrp[b][u]) {
                best = Some(c);
            }
        }
        if let Some(to) = best {
            row.fill(0);
            free[to] -= 1;
            out.push(HandoverDecision { user: u, from: s, to });
        }
    }
    out
}
