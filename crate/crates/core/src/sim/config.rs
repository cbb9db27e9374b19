//! Run configuration, presets and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelConfig, RadioConfig};
use crate::error::{Result, SimError};
use crate::handover::DEFAULT_TTT_S;
use crate::load::OutageRule;
use crate::mobility::MobilityConfig;
use crate::schemes::{LbActionSpace, LbRewardTiming, PaLevels, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Full 496-arm handover grid, 30 000 steps.
    Full,
    /// 42-arm grid, 3 000 steps.
    Desk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopologyConfig {
    pub odu_count: usize,
    pub oru_count: usize,
    pub isd_m: f64,
    pub h_bs_m: f64,
    pub h_ut_m: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self { odu_count: 3, oru_count: 7, isd_m: 500.0, h_bs_m: 25.0, h_ut_m: 1.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbSpaceKind {
    Full,
    Coarse,
}

impl LbSpaceKind {
    pub fn space(self) -> LbActionSpace {
        match self {
            LbSpaceKind::Full => LbActionSpace::full(),
            LbSpaceKind::Coarse => LbActionSpace::coarse(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeConfig {
    pub id: Scheme,
    pub epsilon: f64,
    pub lb_space: LbSpaceKind,
    pub lb_reward_timing: LbRewardTiming,
    /// Min-max scale LB rewards into [0, 1] before the bandit update.
    pub normalize_lb_rewards: bool,
    /// Min-max scale SA rewards into [0, 1] before the bandit update.
    pub normalize_sa_rewards: bool,
    pub ttt_s: f64,
    pub p_max_w: f64,
    pub pa: PaLevels,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            id: Scheme::Mmlbra,
            epsilon: 0.1,
            lb_space: LbSpaceKind::Full,
            lb_reward_timing: LbRewardTiming::PeriodMean,
            normalize_lb_rewards: false,
            normalize_sa_rewards: false,
            ttt_s: DEFAULT_TTT_S,
            p_max_w: 120.0,
            pa: PaLevels::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadConfig {
    pub spectral_eff_init: f64,
    /// Highest spectral efficiency C may reach, bit/s/Hz (64-QAM CQI table maximum).
    pub spectral_eff_max: f64,
    pub ema_alpha: f64,
    pub kappa: f64,
    pub outage_window: usize,
    pub outage_rule: OutageRule,
    /// Per-O-RU fronthaul rate cap, bit/s. Absent means uncapped.
    pub fronthaul_cap_bps: Option<f64>,
}

impl Default for LoadConfig {
    fn default() -> Self {
        Self {
            spectral_eff_init: 4.0,
            spectral_eff_max: 5.5547,
            ema_alpha: 0.5,
            kappa: 0.01,
            outage_window: 100,
            outage_rule: OutageRule::Subchannels,
            fronthaul_cap_bps: None,
        }
    }
}

/// Control periods in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingConfig {
    pub dt_s: f64,
    pub t1_s: f64,
    pub t2_s: f64,
    pub t3_s: f64,
    pub t4_s: f64,
    pub steps: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self { dt_s: 1.0, t1_s: 10.0, t2_s: 1.0, t3_s: 1.0, t4_s: 1.0, steps: 30_000 }
    }
}

impl TimingConfig {
    fn period_steps(&self, name: &str, period: f64) -> Result<u64> {
        let k = period / self.dt_s;
        if !(k >= 1.0 - 1e-9) || (k - k.round()).abs() > 1e-9 {
            return Err(SimError::Config(format!(
                "{name} = {period} s is not a positive multiple of dt = {} s",
                self.dt_s
            )));
        }
        Ok(k.round() as u64)
    }

    /// (T1, T2, T3, T4) in steps.
    pub fn periods(&self) -> Result<[u64; 4]> {
        Ok([
            self.period_steps("T1", self.t1_s)?,
            self.period_steps("T2", self.t2_s)?,
            self.period_steps("T3", self.t3_s)?,
            self.period_steps("T4", self.t4_s)?,
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepAxes {
    pub speeds: Vec<f64>,
    pub users: Vec<usize>,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
}

impl Default for SweepAxes {
    fn default() -> Self {
        Self {
            speeds: vec![1.0, 5.0, 10.0, 20.0],
            users: vec![80],
            seeds: vec![1, 2, 3, 4, 5],
            schemes: vec![Scheme::Mmlbra, Scheme::Rlbra, Scheme::EpsilonGreedy, Scheme::Default, Scheme::NoRa],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub topology: TopologyConfig,
    pub radio: RadioConfig,
    pub channel: ChannelConfig,
    pub mobility: MobilityConfig,
    pub scheme: SchemeConfig,
    pub load: LoadConfig,
    pub timing: TimingConfig,
    pub output_dir: Option<PathBuf>,
    pub sweep: SweepAxes,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            topology: TopologyConfig::default(),
            radio: RadioConfig::default(),
            channel: ChannelConfig::default(),
            mobility: MobilityConfig::default(),
            scheme: SchemeConfig::default(),
            load: LoadConfig::default(),
            timing: TimingConfig::default(),
            output_dir: None,
            sweep: SweepAxes::default(),
        }
    }
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let mut c = Self::default();
        c.channel.fading = true;
        match preset {
            Preset::Full => {
                c.scheme.lb_space = LbSpaceKind::Full;
                c.timing.steps = 30_000;
            }
            Preset::Desk => {
                c.scheme.lb_space = LbSpaceKind::Coarse;
                c.timing.steps = 3_000;
            }
        }
        c
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.topology;
        if !matches!(t.oru_count, 1 | 7 | 19) || t.odu_count == 0 || t.odu_count > t.oru_count {
            return Err(SimError::Config(format!(
                "need O-RU count in {{1, 7, 19}} and 1 <= O-DU count <= O-RU count, got G={}, S={}",
                t.odu_count, t.oru_count
            )));
        }
        if !(t.isd_m > 0.0 && t.h_bs_m > t.h_ut_m && t.h_ut_m > 0.0) {
            return Err(SimError::Config("invalid site geometry".into()));
        }
        self.radio.validate()?;
        if !(self.timing.dt_s > 0.0) {
            return Err(SimError::Config("dt must be > 0".into()));
        }
        let [t1, t2, t3, t4] = self.timing.periods()?;
        if t2 > t1 || t4 > t3 {
            return Err(SimError::Config(format!(
                "periods must satisfy T2 <= T1 and T4 <= T3, got {t1}/{t2}/{t3}/{t4} steps"
            )));
        }
        if !(0.0..=1.0).contains(&self.scheme.epsilon) {
            return Err(SimError::Config(format!("epsilon must be in [0, 1], got {}", self.scheme.epsilon)));
        }
        if !(self.scheme.p_max_w > 0.0) {
            return Err(SimError::Config("p_max_w must be > 0".into()));
        }
        if !self.scheme.pa.validate() {
            return Err(SimError::Config("power levels must ascend and thresholds descend".into()));
        }
        if !(self.scheme.ttt_s >= 0.0) {
            return Err(SimError::Config("ttt must be >= 0".into()));
        }
        let l = &self.load;
        if !(l.spectral_eff_init > 0.0 && l.spectral_eff_max > 0.0 && (0.0..=1.0).contains(&l.ema_alpha) && l.kappa >= 0.0) || l.outage_window == 0 {
            return Err(SimError::Config("invalid load model parameters".into()));
        }
        if let Some(c) = l.fronthaul_cap_bps {
            if !(c > 0.0) {
                return Err(SimError::Config("fronthaul cap must be > 0".into()));
            }
        }
        if self.mobility.hotspot_oru >= t.oru_count {
            return Err(SimError::Config(format!("hotspot_oru {} out of range", self.mobility.hotspot_oru)));
        }
        if !(0.0..=1.0).contains(&self.mobility.hotspot_fraction)
            || !(self.mobility.speed >= 0.0)
            || !(self.mobility.demand_bps > 0.0)
            || !(self.mobility.direction_hold_s > 0.0)
        {
            return Err(SimError::Config("invalid mobility parameters".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_reference_parameters() {
        let c = RunConfig::default();
        assert_eq!(c.timing.periods().unwrap(), [10, 1, 1, 1]);
        assert_eq!(c.timing.steps, 30_000);
        assert_eq!(c.radio.subchannels, 80);
        assert_eq!(c.radio.subchannel_bw_hz, 360e3);
        assert_eq!(c.scheme.pa.levels_w, [0.5, 1.25, 3.75, 5.0]);
        assert_eq!(c.scheme.pa.thresholds_dbm, [-80.0, -90.0, -100.0]);
        assert_eq!(c.scheme.ttt_s, 2.56);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn presets() {
        let d = RunConfig::preset(Preset::Desk);
        assert_eq!(d.scheme.lb_space.space().len(), 42);
        assert_eq!(d.timing.steps, 3000);
        assert!(d.channel.fading);
        let p = RunConfig::preset(Preset::Full);
        assert_eq!(p.scheme.lb_space.space().len(), 496);
        assert_eq!(p.timing.steps, 30_000);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = RunConfig::default();
        c.timing.t2_s = 20.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.topology.oru_count = 6;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.timing.t1_s = 2.5;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.mobility.hotspot_oru = 9;
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = RunConfig::preset(Preset::Desk);
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
        let partial = RunConfig::from_toml_str("seed = 9\n[scheme]\nid = \"rlbra\"\n").unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.scheme.id, Scheme::Rlbra);
        assert_eq!(partial.radio, RadioConfig::default());
    }
}
