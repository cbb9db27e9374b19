//! Link budget: pathloss, gains, RSRP, co-channel interference, SINR and
//! Shannon rates.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::rng::{self, Stream};
use crate::topology::{Allocation, Association, OruId, Point, Topology, UserId};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioConfig {
    /// Noise power spectral density, dBm/Hz.
    pub n0_dbm_per_hz: f64,
    /// Subchannel bandwidth, Hz.
    pub subchannel_bw_hz: f64,
    /// Subchannels per O-RU.
    pub subchannels: usize,
    /// Carrier frequency, GHz.
    pub carrier_ghz: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            n0_dbm_per_hz: -174.0,
            subchannel_bw_hz: 360e3,
            subchannels: 80,
            carrier_ghz: 3.5,
        }
    }
}

impl RadioConfig {
    /// N0·W in watts.
    pub fn noise_power(&self) -> f64 {
        dbm_to_watts(self.n0_dbm_per_hz) * self.subchannel_bw_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.subchannel_bw_hz > 0.0 && self.carrier_ghz > 0.0 && self.subchannels > 0)
            || !self.n0_dbm_per_hz.is_finite()
        {
            return Err(SimError::Config(format!("invalid radio parameters: {self:?}")));
        }
        Ok(())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// 3GPP TR 38.901 UMa pathloss, NLOS branch (which is floored by the LOS
/// expression). `d2d` is the horizontal distance in meters; distances below
/// the model's 10 m validity floor are clamped to it.
pub fn pathloss_uma_nlos(d2d: f64, fc_ghz: f64, h_bs: f64, h_ut: f64) -> Result<f64> {
    if !(d2d > 0.0) || !d2d.is_finite() {
        return Err(SimError::InvalidArgument(format!("distance must be positive, got {d2d}")));
    }
    let d2d = d2d.max(10.0);
    let d3d = d2d.hypot(h_bs - h_ut);
    let nlos = 13.54 + 39.08 * d3d.log10() + 20.0 * fc_ghz.log10() - 0.6 * (h_ut - 1.5);
    Ok(nlos.max(pathloss_uma_los(d2d, d3d, fc_ghz, h_bs, h_ut)))
}

fn pathloss_uma_los(d2d: f64, d3d: f64, fc_ghz: f64, h_bs: f64, h_ut: f64) -> f64 {
    // Effective environment height of 1 m.
    let (hb, hu) = (h_bs - 1.0, h_ut - 1.0);
    let d_bp = 4.0 * hb * hu * fc_ghz * 1e9 / SPEED_OF_LIGHT;
    let fc_term = 20.0 * fc_ghz.log10();
    if d2d <= d_bp {
        28.0 + 22.0 * d3d.log10() + fc_term
    } else {
        28.0 + 40.0 * d3d.log10() + fc_term - 9.0 * (d_bp * d_bp + (h_bs - h_ut).powi(2)).log10()
    }
}

/// Linear gain from pathloss and shadowing (both dB) and a linear fading factor.
pub fn link_gain(pathloss_db: f64, shadowing_db: f64, fading: f64) -> f64 {
    10f64.powf(-(pathloss_db + shadowing_db) / 10.0) * fading
}

/// RSRP in dBm for a reference signal of `p_rs` watts.
pub fn rsrp(gain: f64, p_rs: f64) -> Result<f64> {
    if !(gain > 0.0 && p_rs > 0.0) {
        return Err(SimError::InvalidArgument(format!(
            "rsrp needs positive gain and power, got gain={gain}, p_rs={p_rs}"
        )));
    }
    Ok(10.0 * (p_rs * gain * 1000.0).log10())
}

pub fn sinr(power: f64, gain: f64, interference: f64, radio: &RadioConfig) -> f64 {
    power * gain / (interference + radio.noise_power())
}

/// Σ W·log2(1+γ) over the subchannels a user holds.
pub fn user_rate(sinrs: &[f64], radio: &RadioConfig) -> f64 {
    sinrs
        .iter()
        .map(|&g| radio.subchannel_bw_hz * (1.0 + g).log2())
        .sum()
}

pub fn ru_sum_rate(s: OruId, assoc: &Association, user_rates: &[f64]) -> f64 {
    assoc.served_by(s).map(|u| user_rates[u]).sum()
}

/// Per-subchannel gain lookup from transmitter `oru` to `user`.
pub trait GainMap {
    fn gain(&self, oru: OruId, user: UserId, subchannel: usize) -> f64;
}

/// Co-channel interference on `subchannel` at `user` (served by `oru`):
/// every other grant on the same subchannel, weighted by the gain from the
/// interfering O-RU to `user`.
pub fn interference(
    user: UserId,
    oru: OruId,
    subchannel: usize,
    alloc: &Allocation,
    gains: &impl GainMap,
) -> f64 {
    let mut total = 0.0;
    for (j, grants) in alloc.per_oru.iter().enumerate() {
        for g in grants {
            if g.subchannel == subchannel && !(j == oru && g.user == user) {
                total += g.power * gains.gain(j, user, subchannel);
            }
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub shadowing: bool,
    pub shadowing_sigma_db: f64,
    pub fading: bool,
    /// Reference-signal power used for RSRP, W.
    pub rsrp_ref_power: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            shadowing: false,
            shadowing_sigma_db: 6.0,
            fading: false,
            rsrp_ref_power: 1.0,
        }
    }
}

/// Seeded channel state that persists over a run: per-link shadowing and the
/// key for fast fading.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub config: ChannelConfig,
    pub radio: RadioConfig,
    seed: u64,
    /// `[oru][user]`, dB. Zero when shadowing is off.
    shadowing_db: Vec<Vec<f64>>,
}

impl ChannelModel {
    pub fn new(config: ChannelConfig, radio: RadioConfig, orus: usize, users: usize, seed: u64) -> Self {
        let mut shadowing_db = vec![vec![0.0; users]; orus];
        if config.shadowing && config.shadowing_sigma_db > 0.0 {
            let normal = Normal::new(0.0, config.shadowing_sigma_db).expect("finite sigma");
            let mut r = rng::stream(seed, Stream::Shadowing, 0);
            for row in shadowing_db.iter_mut() {
                for v in row.iter_mut() {
                    *v = normal.sample(&mut r);
                }
            }
        }
        Self { config, radio, seed, shadowing_db }
    }

    /// Large-scale gains and RSRP for the current user positions.
    pub fn snapshot(&self, topo: &Topology, positions: &[Point], step: u64) -> ChannelSnapshot {
        let orus = topo.oru_count();
        let mut large = vec![vec![0.0; positions.len()]; orus];
        let mut rsrp_dbm = vec![vec![0.0; positions.len()]; orus];
        for s in 0..orus {
            let site = topo.oru_positions[s];
            for (u, p) in positions.iter().enumerate() {
                let d = site.distance(p).max(1e-3);
                let pl = pathloss_uma_nlos(d, self.radio.carrier_ghz, topo.h_bs, topo.h_ut)
                    .expect("positive distance");
                let g = link_gain(pl, self.shadowing_db[s][u], 1.0);
                large[s][u] = g;
                rsrp_dbm[s][u] = rsrp(g, self.config.rsrp_ref_power).expect("positive gain");
            }
        }
        ChannelSnapshot {
            large,
            rsrp_dbm,
            fading: self.config.fading.then_some(FadingKey { seed: self.seed, step }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FadingKey {
    pub seed: u64,
    pub step: u64,
}

impl FadingKey {
    /// Unit-mean exponential power factor for one (link, subchannel) in this
    /// step. Stateless, so evaluation order does not matter.
    pub fn factor(&self, oru: OruId, user: UserId, subchannel: usize) -> f64 {
        let key = rng::mix(&[self.seed, 0xfad1, self.step, oru as u64, user as u64, subchannel as u64]);
        -rng::unit_open(key).ln()
    }
}

/// Channel state for one step.
#[derive(Debug, Clone)]
pub struct ChannelSnapshot {
    /// `[oru][user]`, linear.
    pub large: Vec<Vec<f64>>,
    /// `[oru][user]`, dBm; large-scale only.
    pub rsrp_dbm: Vec<Vec<f64>>,
    pub fading: Option<FadingKey>,
}

impl GainMap for ChannelSnapshot {
    fn gain(&self, oru: OruId, user: UserId, subchannel: usize) -> f64 {
        let g = self.large[oru][user];
        match self.fading {
            Some(k) => g * k.factor(oru, user, subchannel),
            None => g,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Grant;

    struct Flat(Vec<Vec<f64>>);
    impl GainMap for Flat {
        fn gain(&self, oru: OruId, user: UserId, _n: usize) -> f64 {
            self.0[oru][user]
        }
    }

    #[test]
    fn uma_nlos_reference_value() {
        // 13.54 + 39.08·log10(√(500² + 23.5²)) + 20·log10(3.5)
        let expected = 13.54 + 39.08 * (500f64.powi(2) + 23.5f64.powi(2)).sqrt().log10() + 20.0 * 3.5f64.log10();
        let pl = pathloss_uma_nlos(500.0, 3.5, 25.0, 1.5).unwrap();
        assert!((pl - expected).abs() < 1e-9);
        assert!((pl - 129.9).abs() < 0.05, "{pl}");
    }

    #[test]
    fn uma_monotone_and_rejects_bad_distance() {
        let at = |d| pathloss_uma_nlos(d, 3.5, 25.0, 1.5).unwrap();
        assert!(at(100.0) < at(500.0));
        assert!(at(1000.0) > at(500.0));
        let mut prev = 0.0;
        for i in 1..5000 {
            let v = at(i as f64);
            assert!(v >= prev && v.is_finite());
            prev = v;
        }
        assert!(pathloss_uma_nlos(0.0, 3.5, 25.0, 1.5).is_err());
        assert!(pathloss_uma_nlos(-3.0, 3.5, 25.0, 1.5).is_err());
    }

    #[test]
    fn rsrp_examples() {
        assert!((rsrp(1e-10, 1.0).unwrap() + 70.0).abs() < 1e-9);
        assert!(rsrp(1.0, 0.001).unwrap().abs() < 1e-9);
        assert!((rsrp(1e-13, 1.0).unwrap() + 100.0).abs() < 1e-9);
        assert!(rsrp(0.0, 1.0).is_err());
        assert!(rsrp(1.0, -1.0).is_err());
    }

    #[test]
    fn noise_floor_and_sinr() {
        let r = RadioConfig::default();
        let nf = r.noise_power();
        assert!((nf - 1.433e-15).abs() / 1.433e-15 < 1e-3, "{nf}");
        let g = sinr(1.25, 1e-10, 0.0, &r);
        assert!((g - 8.72e4).abs() / 8.72e4 < 2e-3, "{g}");
        assert!((10.0 * g.log10() - 49.4).abs() < 0.05);
        assert_eq!(sinr(0.0, 1e-10, 1e-12, &r), 0.0);
        let unit = sinr(10.0 * nf, 1.0, 9.0 * nf, &r);
        assert!((unit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_examples() {
        let r = RadioConfig::default();
        let g = sinr(1.25, 1e-10, 0.0, &r);
        let one = user_rate(&[g], &r);
        assert!((one - 5.91e6).abs() < 0.01e6, "{one}");
        assert_eq!(user_rate(&[], &r), 0.0);
        assert_eq!(user_rate(&[g, g], &r), 2.0 * one);
    }

    #[test]
    fn ru_sum_rate_examples() {
        let assoc = Association { serving: vec![Some(0), Some(0), Some(1)] };
        let rates = [1e6, 2e6, 5e6];
        assert_eq!(ru_sum_rate(0, &assoc, &rates), 3e6);
        assert_eq!(ru_sum_rate(2, &assoc, &rates), 0.0);
    }

    #[test]
    fn interference_examples() {
        let gains = Flat(vec![vec![1e-10, 1e-12], vec![1e-12, 1e-10]]);
        let mut alloc = Allocation::empty(2, 4);
        alloc.per_oru[0].push(Grant { user: 0, subchannel: 2, power: 1.25 });
        assert_eq!(interference(0, 0, 2, &alloc, &gains), 0.0);
        alloc.per_oru[1].push(Grant { user: 1, subchannel: 2, power: 1.25 });
        let i = interference(0, 0, 2, &alloc, &gains);
        assert!((i - 1.25e-12).abs() < 1e-24);
        // other subchannels stay clean
        assert_eq!(interference(0, 0, 1, &alloc, &gains), 0.0);
    }

    #[test]
    fn fading_is_unit_mean_and_deterministic() {
        let k = FadingKey { seed: 3, step: 11 };
        assert_eq!(k.factor(1, 2, 3), k.factor(1, 2, 3));
        let n = 200_000;
        let mean: f64 = (0..n).map(|i| k.factor(i % 7, i / 7, i % 80)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn shadowing_off_means_pure_geometry() {
        let topo = crate::topology::build_hex_topology(3, 7, 500.0).unwrap();
        let pos = [Point::new(10.0, 20.0), Point::new(-300.0, 40.0)];
        let a = ChannelModel::new(ChannelConfig::default(), RadioConfig::default(), 7, 2, 1).snapshot(&topo, &pos, 0);
        let b = ChannelModel::new(ChannelConfig::default(), RadioConfig::default(), 7, 2, 99).snapshot(&topo, &pos, 5);
        assert_eq!(a.large, b.large);
        assert_eq!(a.rsrp_dbm, b.rsrp_dbm);
    }
}
