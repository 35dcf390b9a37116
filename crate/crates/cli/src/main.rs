use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flock_core::io::{self, write_ledger_events, write_rounds, write_sweep_csv};
use flock_core::sim::{sweep, GridPoint, SweepGrid, SweepRow};
use flock_core::{run_simulation, Error, SimConfig};

const FIGURE2_L_P: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];

#[derive(Parser)]
#[command(name = "flock-sim", version, about = "Simulate staked, committee-audited federated learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of one configuration and write logs, estimates and a summary.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Estimate expected returns over a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// JSON object of value lists keyed by alpha, beta, T, l_p, l_v.
        #[arg(long)]
        grid: PathBuf,
        /// Output CSV path.
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Honest-proposer return against the malicious-proposer ratio.
    Figure2 {
        #[command(flatten)]
        common: Common,
        /// One curve per value; defaults to the configured l_v.
        #[arg(long = "l-v", value_delimiter = ',')]
        l_v: Vec<f64>,
        /// Output CSV path.
        #[arg(long, default_value = "figure2.csv")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run config; omitted fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed, overriding `seeds.base`.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn load(&self) -> Result<SimConfig, Error> {
        let mut config = match &self.config {
            Some(path) => io::load_config(path)?,
            None => SimConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seeds.base = seed;
        }
        Ok(config)
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Parse(_) | Error::Schema { .. } => 2,
        Error::Io { .. } => 3,
        _ => 4,
    }
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), reason: e.to_string() })
}

fn cmd_run(common: &Common, out: &Path) -> Result<(), Error> {
    let config = common.load()?;
    common.note(format!(
        "running {} seeds x {} rounds (N={})",
        config.seeds.count, config.rounds, config.population
    ));
    let output = run_simulation(&config)?;
    create_dir(out)?;
    write_rounds(&out.join("rounds.jsonl"), &output.all_records())?;
    write_ledger_events(&out.join("ledger_events.jsonl"), &output)?;
    let row = SweepRow { point: GridPoint::of(&config), estimates: output.estimates.clone() };
    write_sweep_csv(&out.join("estimates.csv"), &[row])?;
    let summary = out.join("summary.txt");
    std::fs::write(&summary, io::summary_report(&config, &output))
        .map_err(|e| Error::Io { path: summary.display().to_string(), reason: e.to_string() })?;
    common.note(format!("wrote {}", out.display()));
    Ok(())
}

fn cmd_sweep(common: &Common, grid: &SweepGrid, out: &Path) -> Result<(), Error> {
    let config = common.load()?;
    let points = grid.points(&config)?.len();
    common.note(format!("sweeping {points} grid points x {} seeds", config.seeds.count));
    let rows = sweep(&config, grid)?;
    write_sweep_csv(out, &rows)?;
    common.note(format!("wrote {} rows to {}", rows.len() * 4, out.display()));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common, out } => cmd_run(common, out),
        Command::Sweep { common, grid, out } => io::load_grid(grid).and_then(|g| cmd_sweep(common, &g, out)),
        Command::Figure2 { common, l_v, out } => {
            let grid = SweepGrid {
                l_p: Some(FIGURE2_L_P.to_vec()),
                l_v: (!l_v.is_empty()).then(|| l_v.clone()),
                ..SweepGrid::default()
            };
            cmd_sweep(common, &grid, out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
