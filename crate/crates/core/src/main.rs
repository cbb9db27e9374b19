use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oran_mlb::schemes::Scheme;
use oran_mlb::sim::{self, output, sweep, Preset, RunConfig};
use oran_mlb::Result;

#[derive(Parser)]
#[command(name = "oran-mlb", version, about = "O-RAN load balancing and resource allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write metrics.csv and state.json.
    Run(Common),
    /// Run the sweep axes from the config and write sweep_runs.csv and sweep_summary.csv.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from a preset instead of the built-in defaults.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// mmlbra, rlbra, epsilon_greedy, default or no_ra. For sweeps, restricts the scheme axis.
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    /// User speed in m/s. For sweeps, restricts the speed axis.
    #[arg(long)]
    speed: Option<f64>,
    /// User count. For sweeps, restricts the user axis.
    #[arg(long)]
    users: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self, sweeping: bool) -> Result<RunConfig> {
        let mut c = match (&self.config, self.preset) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(p)) => RunConfig::preset(p),
            (None, None) => RunConfig::default(),
        };
        if let (Some(_), Some(p)) = (&self.config, self.preset) {
            log::warn!("--config given; ignoring --preset {p:?}");
        }
        if let Some(s) = self.scheme {
            c.scheme.id = s;
            if sweeping {
                c.sweep.schemes = vec![s];
            }
        }
        if let Some(seed) = self.seed {
            c.seed = seed;
            if sweeping {
                c.sweep.seeds = vec![seed];
            }
        }
        if let Some(n) = self.steps {
            c.timing.steps = n;
        }
        if let Some(v) = self.speed {
            c.mobility.speed = v;
            if sweeping {
                c.sweep.speeds = vec![v];
            }
        }
        if let Some(u) = self.users {
            c.mobility.user_count = u;
            if sweeping {
                c.sweep.users = vec![u];
            }
        }
        if let Some(out) = &self.out {
            c.output_dir = Some(out.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn out_dir(c: &RunConfig) -> PathBuf {
    c.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let c = args.config(false)?;
            log::info!("run {} seed={} steps={}", c.scheme.id, c.seed, c.timing.steps);
            let mut s = sim::Simulation::new(c.clone())?;
            let records: Vec<_> = (0..c.timing.steps).map(|_| s.step()).collect();
            let dir = out_dir(&c);
            let (m, st) = output::write_run(&dir, &records, &s.state_dump(), s.topology.oru_count())?;
            let agg = sweep::aggregate(&c, &records);
            eprintln!(
                "wrote {} and {}; final-half std_dev={:.3} eff_sum_rate={:.3e} bit/s",
                m.display(),
                st.display(),
                agg.std_dev,
                agg.eff_sum_rate_bps
            );
        }
        Command::Sweep(args) => {
            let c = args.config(true)?;
            let (runs, rows) = sweep::sweep(&c)?;
            let dir = out_dir(&c);
            sweep::write_sweep(&dir, &runs, &rows)?;
            eprintln!("wrote {} runs to {}", runs.len(), dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
