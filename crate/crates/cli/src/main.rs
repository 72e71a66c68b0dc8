use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geochaos::Activation;
use geochaos_cli::acceptance::{Acceptance, TITLES};
use geochaos_cli::commands;
use geochaos_cli::experiments::write_json;
use geochaos_cli::{CliError, MapKind, RunConfig};

#[derive(Parser)]
#[command(name = "geochaos", version, about = "Minimal neural emulators of the Lorenz-63 and Henon maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the attractor pair pool.
    GenData,
    /// Train an emulator.
    Train,
    /// Paired truth and emulator trajectories from one start.
    Trajectory,
    /// Compare truth and emulator finite-time Lyapunov exponents.
    Ftle,
    /// SVD and orthogonal-factor report for a single-hidden-layer model.
    Geometry,
    /// Approximation-bound table and polynomial error.
    Bounds,
    /// Test error over a grid of widths, data sizes, activations and seeds.
    Sweep,
    /// Run the acceptance criteria.
    Check {
        /// Only these criteria (comma separated, 1-10).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

/// Flags override values from the config file.
#[derive(Args)]
struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    map: Option<MapKind>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Dataset and training seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Hidden widths, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    neurons: Option<Vec<usize>>,
    #[arg(long, global = true)]
    activation: Option<Activation>,
    #[arg(long, global = true)]
    n_train: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Training-region filter, e.g. `x>-5`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    filter: Option<String>,
    /// Model file or bundled:table1 / bundled:table1-printed / bundled:table2
    /// (`truth` for an FTLE self-comparison).
    #[arg(long, global = true)]
    model: Option<String>,
    /// Existing pool CSV.
    #[arg(long, global = true)]
    pool: Option<PathBuf>,
    /// Trajectory start, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    start: Option<Vec<f64>>,
    /// Trajectory length in steps.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// FTLE horizons in steps, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    #[arg(long, global = true)]
    n_pairs: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        let d = &mut cfg.dataset;
        if let Some(s) = self.seed {
            d.seed = s;
        }
        if let Some(n) = self.n_train {
            d.n_train = n;
        }
        if let Some(f) = &self.filter {
            d.filter = f.clone();
        }
        if let Some(p) = &self.pool {
            d.pool = Some(p.clone());
        }
        if let Some(n) = &self.neurons {
            cfg.model.neurons = n.clone();
        }
        if let Some(a) = self.activation {
            cfg.model.activation = a;
        }
        if let Some(m) = &self.model {
            cfg.model.path = Some(m.clone());
        }
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        if let Some(r) = self.restarts {
            cfg.train.restarts = r;
        }
        if let Some(s) = &self.start {
            cfg.trajectory.start = Some(s.clone());
        }
        if let Some(n) = self.steps {
            cfg.trajectory.n_steps = n;
        }
        if let Some(h) = &self.horizons {
            cfg.ftle.horizons = h.clone();
        }
        if let Some(n) = self.n_pairs {
            cfg.ftle.n_pairs = n;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
    }
}

fn check(cfg: &RunConfig, only: &[usize]) -> Result<serde_json::Value, CliError> {
    let ids: Vec<usize> = if only.is_empty() { (1..=TITLES.len()).collect() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > TITLES.len()) {
        return Err(CliError::Config(format!("no criterion {bad}")));
    }
    let outcomes = Acceptance::new().run_all(&ids, |o| println!("{}", o.line()));
    std::fs::create_dir_all(&cfg.output.dir)?;
    write_json(&cfg.output.dir.join("acceptance.json"), &outcomes)?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        return Err(CliError::Acceptance(failed));
    }
    Ok(serde_json::to_value(&outcomes)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(j) = cli.opts.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut cfg = RunConfig::load(cli.opts.config.as_deref(), cli.opts.map)?;
    cli.opts.apply(&mut cfg);
    cfg.validate()?;
    let summary = match &cli.command {
        Command::GenData => commands::gen_data(&cfg)?,
        Command::Train => commands::train(&cfg)?,
        Command::Trajectory => commands::trajectory(&cfg)?,
        Command::Ftle => commands::ftle(&cfg)?,
        Command::Geometry => commands::geometry(&cfg)?,
        Command::Bounds => commands::bounds(&cfg)?,
        Command::Sweep => commands::sweep_cmd(&cfg)?,
        Command::Check { only } => {
            check(&cfg, only)?;
            return Ok(());
        }
    };
    // a closed pipe on stdout is not an error
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geochaos: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
