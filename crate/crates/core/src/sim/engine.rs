//! The timed control loop.
//!
//! Per step: LB agents act on T1 boundaries, A3 timers advance and handovers
//! commit, RA runs on T3 boundaries for the new association, the channel is
//! evaluated, rewards land on T2/T4 boundaries, then users move.

use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelModel, ChannelSnapshot, GainMap};
use crate::error::Result;
use crate::handover::{tick_and_decide, A3TimerState, HandoverParams};
use crate::load::{
    demand_subchannels, instantaneous_outage, load_std_dev, objective_value, ru_utilization, utilization_diff,
    LoadModel, MetricsRecord, OutageRule, OutageTracker,
};
use crate::mobility::{self, Mobility};
use crate::rng::{self, Stream};
use crate::schemes::{
    default_params, enforce_power_cap, max_throughput_alloc, pa_assign, rlbra_params, round_robin_alloc,
    LbActionSpace, LbAgent, LbPolicy, RaPolicy, SaAgent,
};
use crate::sim::config::RunConfig;
use crate::topology::{
    build_hex_topology, initial_association, validate_constraints, Allocation, Association, Grant, Topology,
    UserId, UserState, Violation,
};

pub struct Simulation {
    pub config: RunConfig,
    pub topology: Topology,
    pub users: Vec<UserState>,
    pub association: Association,
    pub allocation: Allocation,
    pub params: Vec<HandoverParams>,
    pub load_model: LoadModel,
    pub lb_agents: Vec<LbAgent>,
    pub sa_agents: Vec<SaAgent>,
    channel: ChannelModel,
    mobility: Mobility,
    timers: A3TimerState,
    outage: OutageTracker,
    lb_policy: LbPolicy,
    ra_policy: RaPolicy,
    lb_space: LbActionSpace,
    periods: [u64; 4],
    /// Subchannels each user asked for at the last RA pass.
    requested: Vec<usize>,
    last_utilization: Vec<usize>,
    step: u64,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let tc = &config.topology;
        let mut topology = build_hex_topology(tc.odu_count, tc.oru_count, tc.isd_m)?;
        topology.h_bs = tc.h_bs_m;
        topology.h_ut = tc.h_ut_m;
        let seed = config.seed;
        let orus = topology.oru_count();
        let n = config.radio.subchannels;
        let u = config.mobility.user_count;

        let mut placement = rng::stream(seed, Stream::Placement, 0);
        let users = mobility::init_positions(&config.mobility, &topology, &mut placement);
        let mobility = Mobility::new(&config.mobility, &topology, config.timing.dt_s, seed);
        let channel = ChannelModel::new(config.channel, config.radio, orus, u, seed);
        let positions: Vec<_> = users.iter().map(|x| x.position).collect();
        let snap0 = channel.snapshot(&topology, &positions, 0);
        let association = initial_association(u, &snap0.rsrp_dbm)?;

        let (lb_policy, ra_policy) = config.scheme.id.policies(config.scheme.epsilon);
        let lb_space = config.scheme.lb_space.space();
        let lb_agents = (0..orus)
            .map(|s| {
                LbAgent::new(
                    lb_space.len(),
                    config.scheme.lb_reward_timing,
                    config.scheme.normalize_lb_rewards,
                    rng::stream(seed, Stream::LbAgent, s as u64),
                )
            })
            .collect();
        let sa_agents = (0..orus)
            .map(|s| SaAgent::new(n, config.scheme.normalize_sa_rewards, rng::stream(seed, Stream::RaAgent, s as u64)))
            .collect();
        let periods = config.timing.periods()?;
        let params = vec![HandoverParams { ttt: config.scheme.ttt_s, ..default_params() }; orus];
        let load_model = LoadModel::new(orus, config.load.spectral_eff_init, config.load.ema_alpha, config.load.kappa)
            .with_ceiling(config.load.spectral_eff_max);
        let outage = OutageTracker::new(config.load.outage_window);

        Ok(Self {
            topology,
            users,
            association,
            allocation: Allocation::empty(orus, n),
            params,
            load_model,
            lb_agents,
            sa_agents,
            channel,
            mobility,
            timers: A3TimerState::new(u, orus),
            outage,
            lb_policy,
            ra_policy,
            lb_space,
            periods,
            requested: vec![0; u],
            last_utilization: vec![0; orus],
            step: 0,
            config,
        })
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn violations(&self) -> Vec<Violation> {
        validate_constraints(&self.topology, &self.association, &self.allocation)
    }

    /// Advances one step and returns its metrics.
    pub fn step(&mut self) -> MetricsRecord {
        self.step += 1;
        let t = self.step;
        let [t1, t2, t3, t4] = self.periods;
        let orus = self.topology.oru_count();
        let n = self.config.radio.subchannels;
        let dt = self.config.timing.dt_s;
        let positions: Vec<_> = self.users.iter().map(|x| x.position).collect();
        let snap = self.channel.snapshot(&self.topology, &positions, t);

        if (t - 1) % t1 == 0 {
            self.update_handover_params();
        }

        let mut free: Vec<usize> = self.last_utilization.iter().map(|&w| n.saturating_sub(w)).collect();
        let decisions = tick_and_decide(&self.association, &snap.rsrp_dbm, &self.params, &mut free, dt, &mut self.timers);
        for d in &decisions {
            self.association.serving[d.user] = Some(d.to);
        }

        if (t - 1) % t3 == 0 {
            self.allocate(&snap);
        } else {
            // Between RA passes, a user that moved keeps nothing at its old O-RU.
            let assoc = &self.association;
            for (s, grants) in self.allocation.per_oru.iter_mut().enumerate() {
                grants.retain(|g| assoc.serving[g.user] == Some(s));
            }
        }

        let eval = self.evaluate(&snap);

        for s in 0..orus {
            self.load_model.observe(s, eval.spectral_eff[s]);
        }
        if t % t2 == 0 {
            for (agent, &e) in self.lb_agents.iter_mut().zip(&eval.eta) {
                agent.observe_eta(e);
            }
        }
        if t % t4 == 0 && matches!(self.ra_policy, RaPolicy::Learned(_)) {
            for (s, agent) in self.sa_agents.iter_mut().enumerate() {
                let served: Vec<UserId> = self.association.served_by(s).collect();
                if !served.is_empty() {
                    let mean = served.iter().map(|&u| eval.user_rate[u]).sum::<f64>() / served.len() as f64;
                    agent.reward(mean);
                }
            }
        }

        self.mobility.step(&mut self.users, dt);
        self.last_utilization = eval.utilization.clone();

        let std_dev = load_std_dev(&eval.utilization);
        let p_o = self.outage.push(eval.outage_now);
        let sum_rate: f64 = eval.oru_rate.iter().sum();
        MetricsRecord {
            step: t,
            objective: objective_value(&eval.eta, &eval.oru_rate, self.load_model.kappa, p_o),
            utilization: eval.utilization,
            eta: eval.eta,
            std_dev,
            oru_rate_bps: eval.oru_rate,
            sum_rate_bps: sum_rate,
            outage_now: eval.outage_now,
            p_o,
            eff_sum_rate_bps: (1.0 - p_o) * sum_rate,
            handovers: decisions.len(),
        }
    }

    fn update_handover_params(&mut self) {
        let ttt = self.config.scheme.ttt_s;
        let n = self.config.radio.subchannels;
        for s in 0..self.topology.oru_count() {
            self.params[s] = match self.lb_policy {
                LbPolicy::Fixed => HandoverParams { ttt, ..default_params() },
                LbPolicy::RuleBased => rlbra_params(self.last_utilization[s], n, ttt),
                LbPolicy::Learned(sel) => self.lb_agents[s].lb_step(sel, &self.lb_space, ttt),
            };
        }
    }

    fn allocate(&mut self, snap: &ChannelSnapshot) {
        let n = self.config.radio.subchannels;
        let bw = self.config.radio.subchannel_bw_hz;
        let pa = self.config.scheme.pa;
        let p_max = self.config.scheme.p_max_w;
        let equal_power = pa.levels_w[1];
        self.requested.iter_mut().for_each(|r| *r = 0);
        for s in 0..self.topology.oru_count() {
            let c = self.load_model.spectral_eff[s];
            let mut served: Vec<UserId> = self.association.served_by(s).collect();
            let rsrp = &snap.rsrp_dbm[s];
            if !matches!(self.ra_policy, RaPolicy::RoundRobin) {
                served.sort_by(|&a, &b| rsrp[b].total_cmp(&rsrp[a]).then(a.cmp(&b)));
            }
            let wants: Vec<(UserId, usize)> = served
                .iter()
                .map(|&u| (u, demand_subchannels(self.users[u].demand, c, bw).min(n)))
                .collect();
            for &(u, k) in &wants {
                self.requested[u] = k;
            }
            let mut grants: Vec<Grant> = match self.ra_policy {
                RaPolicy::Learned(sel) => {
                    if wants.is_empty() {
                        Vec::new()
                    } else {
                        self.sa_agents[s]
                            .sa_step(sel, &wants)
                            .into_iter()
                            .map(|(u, ch)| Grant { user: u, subchannel: ch, power: pa_assign(rsrp[u], &pa) })
                            .collect()
                    }
                }
                RaPolicy::RoundRobin => equal(round_robin_alloc(&wants, n), equal_power),
                RaPolicy::MaxThroughput => equal(max_throughput_alloc(&wants, n), equal_power),
            };
            enforce_power_cap(&mut grants, p_max, &pa, rsrp);
            self.allocation.per_oru[s] = grants;
        }
    }

    fn evaluate(&self, snap: &ChannelSnapshot) -> Evaluation {
        let orus = self.topology.oru_count();
        let users = self.users.len();
        let radio = &self.config.radio;
        let n = radio.subchannels;
        let noise = radio.noise_power();

        // Transmit power on each (O-RU, subchannel), zero when idle.
        let mut occupancy = vec![vec![0.0f64; n]; orus];
        for (s, grants) in self.allocation.per_oru.iter().enumerate() {
            for g in grants {
                occupancy[s][g.subchannel] += g.power;
            }
        }

        let mut user_rate = vec![0.0; users];
        let mut granted = vec![0usize; users];
        let mut se_sum = vec![0.0; users];
        for (s, grants) in self.allocation.per_oru.iter().enumerate() {
            for g in grants {
                let u = g.user;
                let mut interference = 0.0;
                for (j, row) in occupancy.iter().enumerate() {
                    let p = if j == s { row[g.subchannel] - g.power } else { row[g.subchannel] };
                    if p > 0.0 {
                        interference += p * snap.gain(j, u, g.subchannel);
                    }
                }
                let gamma = g.power * snap.gain(s, u, g.subchannel) / (interference + noise);
                let se = (1.0 + gamma).log2();
                user_rate[u] += radio.subchannel_bw_hz * se;
                se_sum[u] += se;
                granted[u] += 1;
            }
        }

        let utilization: Vec<usize> = (0..orus).map(|s| ru_utilization(s, &self.association, &self.allocation)).collect();
        let eta: Vec<usize> = (0..orus).map(|s| utilization_diff(s, &utilization, &self.topology.oru_to_odu)).collect();

        let mut short: Vec<bool> = (0..users)
            .map(|u| match self.config.load.outage_rule {
                OutageRule::Subchannels => granted[u] < self.requested[u].max(1),
                OutageRule::Rate => user_rate[u] < self.users[u].demand,
            })
            .collect();

        let mut oru_rate = vec![0.0; orus];
        let mut spectral_eff = vec![None; orus];
        for s in 0..orus {
            let mut served: Vec<UserId> = self.association.served_by(s).collect();
            oru_rate[s] = channel::ru_sum_rate(s, &self.association, &user_rate);
            let with_grants: Vec<f64> =
                served.iter().filter(|&&u| granted[u] > 0).map(|&u| se_sum[u] / granted[u] as f64).collect();
            if !with_grants.is_empty() {
                spectral_eff[s] = Some(with_grants.iter().sum::<f64>() / with_grants.len() as f64);
            }
            if let Some(cap) = self.config.load.fronthaul_cap_bps {
                if oru_rate[s] > cap {
                    oru_rate[s] = cap;
                    let rsrp = &snap.rsrp_dbm[s];
                    served.sort_by(|&a, &b| rsrp[b].total_cmp(&rsrp[a]).then(a.cmp(&b)));
                    let mut carried = 0.0;
                    for u in served {
                        carried += user_rate[u];
                        if carried > cap {
                            short[u] = true;
                        }
                    }
                }
            }
        }

        Evaluation {
            outage_now: instantaneous_outage(&short),
            utilization,
            eta,
            user_rate,
            oru_rate,
            spectral_eff,
        }
    }

    pub fn state_dump(&self) -> StateDump {
        StateDump {
            step: self.step,
            scheme: self.config.scheme.id.id().to_string(),
            seed: self.config.seed,
            association: self.association.clone(),
            handover_params: self.params.iter().map(|p| (p.off, p.hys)).collect(),
            spectral_eff: self.load_model.spectral_eff.clone(),
            lb_agents: self.lb_agents.clone(),
            sa_agents: self.sa_agents.clone(),
        }
    }
}

fn equal(assign: Vec<(UserId, usize)>, power: f64) -> Vec<Grant> {
    assign.into_iter().map(|(user, subchannel)| Grant { user, subchannel, power }).collect()
}

struct Evaluation {
    utilization: Vec<usize>,
    eta: Vec<usize>,
    user_rate: Vec<f64>,
    oru_rate: Vec<f64>,
    outage_now: f64,
    spectral_eff: Vec<Option<f64>>,
}

/// End-of-run snapshot of learned state, for inspection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateDump {
    pub step: u64,
    pub scheme: String,
    pub seed: u64,
    pub association: Association,
    pub handover_params: Vec<(i32, i32)>,
    pub spectral_eff: Vec<f64>,
    pub lb_agents: Vec<LbAgent>,
    pub sa_agents: Vec<SaAgent>,
}

/// Runs `config.timing.steps` steps.
pub fn run(config: &RunConfig) -> Result<Vec<MetricsRecord>> {
    let mut sim = Simulation::new(config.clone())?;
    Ok((0..config.timing.steps).map(|_| sim.step()).collect())
}

/// Slow reference for the fast SINR path: walks every grant of the
/// allocation through [`channel::interference`].
pub fn reference_user_rates(
    alloc: &Allocation,
    gains: &impl GainMap,
    radio: &channel::RadioConfig,
    users: usize,
) -> Vec<f64> {
    let mut rates = vec![0.0; users];
    for (s, grants) in alloc.per_oru.iter().enumerate() {
        for g in grants {
            let i = channel::interference(g.user, s, g.subchannel, alloc, gains);
            let gamma = channel::sinr(g.power, gains.gain(s, g.user, g.subchannel), i, radio);
            rates[g.user] += channel::user_rate(&[gamma], radio);
        }
    }
    rates
}

#[cfg(test)]
impl Simulation {
    pub(crate) fn snapshot_now(&self) -> ChannelSnapshot {
        let positions: Vec<_> = self.users.iter().map(|x| x.position).collect();
        self.channel.snapshot(&self.topology, &positions, self.step)
    }

    pub(crate) fn user_rates_now(&self, snap: &ChannelSnapshot) -> Vec<f64> {
        self.evaluate(snap).user_rate
    }
}
