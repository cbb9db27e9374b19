//! Cartesian sweeps over speed, user count, scheme and seed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::load::MetricsRecord;
use crate::schemes::Scheme;
use crate::sim::config::RunConfig;
use crate::sim::engine::run;

/// Time averages of one run over the final half of its steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub speed: f64,
    pub users: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub std_dev: f64,
    pub eff_sum_rate_bps: f64,
    pub sum_rate_bps: f64,
    pub p_o: f64,
    pub handovers_per_step: f64,
}

/// Seed mean and standard error for one (speed, users, scheme) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub speed: f64,
    pub users: usize,
    pub scheme: Scheme,
    pub seeds: usize,
    pub std_dev_mean: f64,
    pub std_dev_se: f64,
    pub eff_sum_rate_mean: f64,
    pub eff_sum_rate_se: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Mean and standard error of the mean (sample standard deviation / √n).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs.iter().copied());
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (m, (var / xs.len() as f64).sqrt())
}

/// Averages the final 50% of a metrics series.
pub fn aggregate(config: &RunConfig, records: &[MetricsRecord]) -> RunSummary {
    let tail = &records[records.len() / 2..];
    RunSummary {
        speed: config.mobility.speed,
        users: config.mobility.user_count,
        scheme: config.scheme.id,
        seed: config.seed,
        std_dev: mean(tail.iter().map(|r| r.std_dev)),
        eff_sum_rate_bps: mean(tail.iter().map(|r| r.eff_sum_rate_bps)),
        sum_rate_bps: mean(tail.iter().map(|r| r.sum_rate_bps)),
        p_o: mean(tail.iter().map(|r| r.p_o)),
        handovers_per_step: mean(tail.iter().map(|r| r.handovers as f64)),
    }
}

/// Every point of the sweep as its own config, in speed, users, scheme,
/// seed order.
pub fn expand(base: &RunConfig) -> Result<Vec<RunConfig>> {
    let ax = &base.sweep;
    if ax.speeds.is_empty() || ax.users.is_empty() || ax.seeds.is_empty() || ax.schemes.is_empty() {
        return Err(SimError::Config("sweep axes must be non-empty".into()));
    }
    let mut out = Vec::new();
    for &speed in &ax.speeds {
        for &users in &ax.users {
            for &scheme in &ax.schemes {
                for &seed in &ax.seeds {
                    let mut c = base.clone();
                    c.mobility.speed = speed;
                    c.mobility.user_count = users;
                    c.scheme.id = scheme;
                    c.seed = seed;
                    c.validate()?;
                    out.push(c);
                }
            }
        }
    }
    Ok(out)
}

/// Runs every point (in parallel) and returns per-run summaries in
/// [`expand`] order.
pub fn run_all(base: &RunConfig) -> Result<Vec<RunSummary>> {
    let configs = expand(base)?;
    configs
        .par_iter()
        .map(|c| {
            let recs = run(c)?;
            log::info!("done {} seed={} speed={} users={}", c.scheme.id, c.seed, c.mobility.speed, c.mobility.user_count);
            Ok(aggregate(c, &recs))
        })
        .collect()
}

/// Groups per-run summaries by (speed, users, scheme), first-seen order.
pub fn summarize(runs: &[RunSummary]) -> Vec<SweepRow> {
    let mut keys: Vec<(f64, usize, Scheme)> = Vec::new();
    for r in runs {
        let k = (r.speed, r.users, r.scheme);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(speed, users, scheme)| {
            let group: Vec<&RunSummary> =
                runs.iter().filter(|r| r.speed == speed && r.users == users && r.scheme == scheme).collect();
            let sd: Vec<f64> = group.iter().map(|r| r.std_dev).collect();
            let eff: Vec<f64> = group.iter().map(|r| r.eff_sum_rate_bps).collect();
            let (std_dev_mean, std_dev_se) = mean_se(&sd);
            let (eff_sum_rate_mean, eff_sum_rate_se) = mean_se(&eff);
            SweepRow { speed, users, scheme, seeds: group.len(), std_dev_mean, std_dev_se, eff_sum_rate_mean, eff_sum_rate_se }
        })
        .collect()
}

pub fn sweep(base: &RunConfig) -> Result<(Vec<RunSummary>, Vec<SweepRow>)> {
    let runs = run_all(base)?;
    let rows = summarize(&runs);
    Ok((runs, rows))
}

pub fn write_sweep(dir: &Path, runs: &[RunSummary], rows: &[SweepRow]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("sweep_runs.csv"))?);
    writeln!(w, "speed,users,scheme,seed,std_dev,eff_sum_rate_bps,sum_rate_bps,p_o,handovers_per_step")?;
    for r in runs {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.speed, r.users, r.scheme, r.seed, r.std_dev, r.eff_sum_rate_bps, r.sum_rate_bps, r.p_o, r.handovers_per_step
        )?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("sweep_summary.csv"))?);
    writeln!(w, "speed,users,scheme,seeds,std_dev_mean,std_dev_se,eff_sum_rate_mean,eff_sum_rate_se")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.speed, r.users, r.scheme, r.seeds, r.std_dev_mean, r.std_dev_se, r.eff_sum_rate_mean, r.eff_sum_rate_se
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::Preset;

    #[test]
    fn standard_error() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sample variance 5/3, se = sqrt(5/12)
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn cardinality() {
        let mut c = RunConfig::preset(Preset::Desk);
        c.sweep.schemes = vec![Scheme::Mmlbra, Scheme::Rlbra, Scheme::Default, Scheme::NoRa];
        c.sweep.speeds = vec![1.0, 5.0, 10.0];
        c.sweep.seeds = (1..=5).collect();
        assert_eq!(expand(&c).unwrap().len(), 60);
        c.sweep.seeds.clear();
        assert!(expand(&c).is_err());
    }

    #[test]
    fn degenerate_sweep_equals_single_run() {
        let mut c = RunConfig::preset(Preset::Desk);
        c.timing.steps = 40;
        c.sweep.speeds = vec![5.0];
        c.sweep.users = vec![80];
        c.sweep.seeds = vec![3];
        c.sweep.schemes = vec![Scheme::Rlbra];
        let (runs, rows) = sweep(&c).unwrap();
        assert_eq!(runs.len(), 1);
        assert_eq!(rows.len(), 1);
        let mut single = c.clone();
        single.seed = 3;
        single.scheme.id = Scheme::Rlbra;
        let direct = aggregate(&single, &run(&single).unwrap());
        assert_eq!(runs[0], direct);
        assert_eq!(rows[0].std_dev_mean, direct.std_dev);
        assert_eq!(rows[0].std_dev_se, 0.0);
    }
}
