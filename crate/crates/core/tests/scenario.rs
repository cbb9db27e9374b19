use oran_mlb::channel::pathloss_uma_nlos;
use oran_mlb::load::{load_std_dev, objective_value, utilization_diff};
use oran_mlb::schemes::Scheme;
use oran_mlb::sim::{Preset, RunConfig, Simulation};
use oran_mlb::topology::{Indicators, Point};

/// Independent UMa pathloss: max of the NLOS fit and the two-slope LOS law
/// with the effective-height breakpoint.
fn uma_nlos_oracle(d2d: f64, fc_ghz: f64, h_bs: f64, h_ut: f64) -> f64 {
    let d2d = d2d.max(10.0);
    let d3d = (d2d * d2d + (h_bs - h_ut).powi(2)).sqrt();
    let d_bp = 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc_ghz * 1e9 / 299_792_458.0;
    let los = if d2d <= d_bp {
        28.0 + 22.0 * d3d.log10() + 20.0 * fc_ghz.log10()
    } else {
        28.0 + 40.0 * d3d.log10() + 20.0 * fc_ghz.log10() - 9.0 * (d_bp * d_bp + (h_bs - h_ut).powi(2)).log10()
    };
    let nlos = 13.54 + 39.08 * d3d.log10() + 20.0 * fc_ghz.log10() - 0.6 * (h_ut - 1.5);
    los.max(nlos)
}

#[test]
fn pathloss_matches_independent_formula() {
    for d in [10.0, 35.0, 100.0, 289.0, 500.0, 800.0, 1500.0] {
        let got = pathloss_uma_nlos(d, 3.5, 25.0, 1.5).unwrap();
        assert!((got - uma_nlos_oracle(d, 3.5, 25.0, 1.5)).abs() < 1e-9, "d = {d}");
    }
    assert!((pathloss_uma_nlos(500.0, 3.5, 25.0, 1.5).unwrap() - 129.91).abs() < 0.01);
}

#[test]
fn hotspot_users_attach_to_the_hotspot() {
    for seed in 1..=5 {
        let mut c = RunConfig::default();
        c.seed = seed;
        let sim = Simulation::new(c).unwrap();
        // Brute-force RSRP argmax from the oracle pathloss.
        let oracle: Vec<usize> = sim
            .users
            .iter()
            .map(|u| {
                let pl: Vec<f64> = sim
                    .topology
                    .oru_positions
                    .iter()
                    .map(|s: &Point| uma_nlos_oracle(s.distance(&u.position), 3.5, 25.0, 1.5))
                    .collect();
                (0..pl.len()).min_by(|&a, &b| pl[a].total_cmp(&pl[b])).unwrap()
            })
            .collect();
        let got: Vec<usize> = sim.association.serving.iter().map(|s| s.unwrap()).collect();
        assert_eq!(got, oracle);
        let at_hotspot = got.iter().filter(|&&s| s == 0).count();
        assert!(at_hotspot * 10 >= 7 * 80, "seed {seed}: {at_hotspot}");
    }
}

#[test]
fn default_scheme_pins_the_hotspot_with_outage() {
    let mut c = RunConfig::preset(Preset::Full);
    c.scheme.id = Scheme::Default;
    let mut sim = Simulation::new(c).unwrap();
    let first = sim.step();
    assert_eq!(first.utilization[0], 80);
    // 56 users asking for 2 subchannels each against 80: at least 16 users short.
    assert!(first.outage_now >= 16.0 / 80.0, "{}", first.outage_now);
    for _ in 0..300 {
        let r = sim.step();
        assert_eq!(r.utilization[0], 80);
        assert!(r.p_o > 0.0);
    }
}

#[test]
fn recorded_metrics_match_recomputation() {
    let mut sim = Simulation::new(RunConfig::preset(Preset::Desk)).unwrap();
    for _ in 0..50 {
        let r = sim.step();
        // Utilization from the indicator tensors.
        let ind = Indicators::from_state(&sim.topology, &sim.association, &sim.allocation);
        let orus = sim.topology.oru_count();
        let mut omega = vec![0usize; orus];
        for s in 0..orus {
            for u in 0..sim.users.len() {
                if ind.phi[s][u] == 1 {
                    omega[s] += ind.psi[s][u].iter().map(|&x| x as usize).sum::<usize>();
                }
            }
        }
        assert_eq!(omega, r.utilization);
        let eta: Vec<usize> = (0..orus).map(|s| utilization_diff(s, &omega, &sim.topology.oru_to_odu)).collect();
        assert_eq!(eta, r.eta);
        assert_eq!(load_std_dev(&omega), r.std_dev);
        assert_eq!(r.oru_rate_bps.iter().sum::<f64>(), r.sum_rate_bps);
        assert_eq!((1.0 - r.p_o) * r.sum_rate_bps, r.eff_sum_rate_bps);
        let objective = objective_value(&eta, &r.oru_rate_bps, 0.01, r.p_o);
        assert!((objective - r.objective).abs() <= 1e-9 * objective.abs().max(1.0));
    }
}

#[test]
fn fading_does_not_perturb_trajectories() {
    let mut on = RunConfig::preset(Preset::Desk);
    on.scheme.id = Scheme::Default;
    let mut off = on.clone();
    off.channel.fading = false;
    let mut a = Simulation::new(on).unwrap();
    let mut b = Simulation::new(off).unwrap();
    for _ in 0..200 {
        a.step();
        b.step();
    }
    assert_eq!(a.users, b.users);
}

#[test]
fn scheme_policies_compose_under_the_validator() {
    for scheme in Scheme::ALL {
        let mut c = RunConfig::preset(Preset::Desk);
        c.scheme.id = scheme;
        c.mobility.speed = 20.0;
        c.seed = 9;
        let mut sim = Simulation::new(c).unwrap();
        for _ in 0..200 {
            sim.step();
            assert!(sim.violations().is_empty(), "{scheme}");
        }
    }
}
