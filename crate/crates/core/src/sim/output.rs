//! Metrics table and state dump writers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::load::MetricsRecord;
use crate::schemes::Scheme;
use crate::sim::engine::StateDump;

pub const METRICS_FILE: &str = "metrics.csv";
pub const STATE_FILE: &str = "state.json";

pub fn metrics_header(orus: usize) -> String {
    let mut cols = vec!["step".to_string(), "scheme".into(), "seed".into()];
    cols.extend((1..=orus).map(|s| format!("omega_{s}")));
    cols.extend(
        ["std_dev", "sum_rate_bps", "p_o", "eff_sum_rate_bps", "objective", "handover_count"]
            .iter()
            .map(|c| c.to_string()),
    );
    cols.join(",")
}

pub fn metrics_row(rec: &MetricsRecord, scheme: Scheme, seed: u64) -> String {
    let mut cols = vec![rec.step.to_string(), scheme.id().to_string(), seed.to_string()];
    cols.extend(rec.utilization.iter().map(|w| w.to_string()));
    cols.push(rec.std_dev.to_string());
    cols.push(rec.sum_rate_bps.to_string());
    cols.push(rec.p_o.to_string());
    cols.push(rec.eff_sum_rate_bps.to_string());
    cols.push(rec.objective.to_string());
    cols.push(rec.handovers.to_string());
    cols.join(",")
}

pub fn write_metrics(path: &Path, records: &[MetricsRecord], scheme: Scheme, seed: u64, orus: usize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", metrics_header(orus))?;
    for r in records {
        writeln!(w, "{}", metrics_row(r, scheme, seed))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_state(path: &Path, dump: &StateDump) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, dump)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes `metrics.csv` and `state.json` into `dir`, creating it if needed.
pub fn write_run(dir: &Path, records: &[MetricsRecord], dump: &StateDump, orus: usize) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let scheme: Scheme = dump.scheme.parse()?;
    let metrics = dir.join(METRICS_FILE);
    let state = dir.join(STATE_FILE);
    write_metrics(&metrics, records, scheme, dump.seed, orus)?;
    write_state(&state, dump)?;
    Ok((metrics, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_lists_one_column_per_oru() {
        assert_eq!(
            metrics_header(2),
            "step,scheme,seed,omega_1,omega_2,std_dev,sum_rate_bps,p_o,eff_sum_rate_bps,objective,handover_count"
        );
    }

    #[test]
    fn row_matches_header_width() {
        let rec = MetricsRecord {
            step: 3,
            utilization: vec![4, 0],
            eta: vec![4, 4],
            std_dev: 2.0,
            oru_rate_bps: vec![1.5e6, 0.0],
            sum_rate_bps: 1.5e6,
            outage_now: 0.0,
            p_o: 0.25,
            eff_sum_rate_bps: 1.125e6,
            objective: -1.0,
            handovers: 1,
        };
        let row = metrics_row(&rec, Scheme::Rlbra, 7);
        assert_eq!(row, "3,rlbra,7,4,0,2,1500000,0.25,1125000,-1,1");
        assert_eq!(row.split(',').count(), metrics_header(2).split(',').count());
    }
}
