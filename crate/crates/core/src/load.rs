//! Subchannel demand, O-RU utilization, imbalance, outage and the joint
//! objective.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::topology::{Allocation, Association, OruId};

/// ⌈D / (C·W)⌉, at least one subchannel for any positive demand.
pub fn demand_subchannels(demand_bps: f64, spectral_eff: f64, bw_hz: f64) -> usize {
    let x = demand_bps / (spectral_eff * bw_hz);
    if !x.is_finite() {
        return usize::MAX;
    }
    (x.ceil() as usize).max(1)
}

/// Ω_s: subchannels granted by O-RU `s` to the users it serves.
pub fn ru_utilization(s: OruId, assoc: &Association, alloc: &Allocation) -> usize {
    alloc.per_oru[s]
        .iter()
        .filter(|g| assoc.serving.get(g.user).copied().flatten() == Some(s))
        .count()
}

/// η_s = Σ over every other O-RU j (weighted by its χ membership) of |Ω_s − Ω_j|.
pub fn utilization_diff(s: OruId, utilizations: &[usize], oru_to_odu: &[usize]) -> usize {
    utilizations
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != s && oru_to_odu.get(j).is_some())
        .map(|(_, &w)| w.abs_diff(utilizations[s]))
        .sum()
}

/// Population standard deviation.
pub fn load_std_dev(utilizations: &[usize]) -> f64 {
    if utilizations.is_empty() {
        return 0.0;
    }
    let n = utilizations.len() as f64;
    let mean = utilizations.iter().sum::<usize>() as f64 / n;
    let var = utilizations
        .iter()
        .map(|&w| (w as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    var.sqrt()
}

/// Σ_s [η_s − κ·(1−p_o)·R_s].
pub fn objective_value(eta: &[usize], oru_rates: &[f64], kappa: f64, p_o: f64) -> f64 {
    eta.iter()
        .zip(oru_rates)
        .map(|(&e, &r)| e as f64 - kappa * (1.0 - p_o) * r)
        .sum()
}

/// Fraction of users whose shortfall flag is set.
pub fn instantaneous_outage(short: &[bool]) -> f64 {
    if short.is_empty() {
        return 0.0;
    }
    short.iter().filter(|&&s| s).count() as f64 / short.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutageRule {
    /// Granted subchannels fall short of the subchannel demand.
    Subchannels,
    /// Achieved rate falls short of the rate demand.
    Rate,
}

/// Sliding-window mean of per-step outage fractions.
#[derive(Debug, Clone)]
pub struct OutageTracker {
    window: usize,
    samples: VecDeque<f64>,
}

impl OutageTracker {
    pub fn new(window: usize) -> Self {
        Self { window: window.max(1), samples: VecDeque::new() }
    }

    /// Records this step's fraction and returns the windowed average.
    pub fn push(&mut self, fraction: f64) -> f64 {
        self.samples.push_back(fraction);
        if self.samples.len() > self.window {
            self.samples.pop_front();
        }
        let avg = self.samples.iter().sum::<f64>() / self.samples.len() as f64;
        avg.clamp(0.0, 1.0)
    }
}

/// Per-O-RU spectral-efficiency estimate C, tracked as an EMA of the served
/// users' mean log2(1+γ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadModel {
    pub spectral_eff: Vec<f64>,
    pub alpha: f64,
    pub kappa: f64,
    /// Upper clamp on C, the link-adaptation ceiling.
    pub ceiling: f64,
}

/// Lower bound keeping C positive when every grant sees zero SINR.
const MIN_SPECTRAL_EFF: f64 = 0.05;

impl LoadModel {
    pub fn new(orus: usize, initial: f64, alpha: f64, kappa: f64) -> Self {
        Self { spectral_eff: vec![initial; orus], alpha, kappa, ceiling: f64::INFINITY }
    }

    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        self.ceiling = ceiling;
        self
    }

    /// `observed` is None when the O-RU had no granted users this step.
    pub fn observe(&mut self, s: OruId, observed: Option<f64>) {
        if let Some(x) = observed {
            let c = &mut self.spectral_eff[s];
            *c = ((1.0 - self.alpha) * *c + self.alpha * x).clamp(MIN_SPECTRAL_EFF, self.ceiling.max(MIN_SPECTRAL_EFF));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: u64,
    pub utilization: Vec<usize>,
    pub eta: Vec<usize>,
    pub std_dev: f64,
    pub oru_rate_bps: Vec<f64>,
    pub sum_rate_bps: f64,
    pub outage_now: f64,
    pub p_o: f64,
    pub eff_sum_rate_bps: f64,
    pub objective: f64,
    pub handovers: usize,
}
