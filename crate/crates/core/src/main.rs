use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use fdmac::channel::FadingMode;
use fdmac::experiment::{self, Scenario, Sweep};
use fdmac::mac::ArrivalSpec;
use fdmac::SimConfig;

/// Simulates a full-duplex access point serving half-duplex clients and
/// writes per-run throughput, collision and airtime figures as CSV.
#[derive(Debug, Parser)]
#[command(name = "fdmac", version)]
struct Cli {
    /// TOML configuration file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Scheme(s): proposed, oracle, max-rate, greedy, random, half-duplex,
    /// a comma-separated list, or `all`.
    #[arg(long)]
    scheme: Option<String>,

    #[arg(long)]
    clients: Option<usize>,

    #[arg(long)]
    epochs: Option<usize>,

    #[arg(long)]
    epoch_ms: Option<f64>,

    /// Per-client arrival rate per direction: a number, `lo:hi` for
    /// per-client uniform draws, or `backlogged`.
    #[arg(long)]
    arrival_fps: Option<ArrivalSpec>,

    #[arg(long)]
    delta_db: Option<f64>,

    #[arg(long)]
    sic_db: Option<f64>,

    /// Fading model: per-topology, per-epoch or per-packet.
    #[arg(long)]
    fading: Option<String>,

    /// Log-normal error (dB) on announced cross-client gains.
    #[arg(long)]
    estimation_noise_db: Option<f64>,

    /// Seeds such as `1..5` or `1,4,9`. A single seed also works.
    #[arg(long, alias = "seed", default_value = "1..5")]
    seeds: String,

    /// Sweep one axis, e.g. `clients=10..50..10` or `sic=85,90,100,110`.
    #[arg(long)]
    sweep: Option<Sweep>,

    /// Results file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Per-client uplink access file.
    #[arg(long)]
    per_client_out: Option<PathBuf>,

    /// Assigned versus realized pair probabilities.
    #[arg(long)]
    per_pair_out: Option<PathBuf>,

    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,

    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn base_config(cli: &Cli) -> fdmac::Result<SimConfig> {
    let mut cfg = match &cli.config {
        Some(path) => SimConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => SimConfig::default(),
    };
    if let Some(v) = cli.clients {
        cfg.n_clients = v;
    }
    if let Some(v) = cli.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = cli.epoch_ms {
        cfg.epoch_ms = v;
    }
    if let Some(v) = cli.arrival_fps {
        cfg.arrival_fps = v;
    }
    if let Some(v) = cli.delta_db {
        cfg.delta_db = v;
    }
    if let Some(v) = cli.sic_db {
        cfg.sic_db = v;
    }
    if let Some(v) = &cli.fading {
        cfg.fading = match v.as_str() {
            "per-topology" => FadingMode::PerTopology,
            "per-epoch" => FadingMode::PerEpoch,
            "per-packet" => FadingMode::PerPacket,
            other => return Err(fdmac::Error::InvalidArgument(format!("unknown fading model `{other}`"))),
        };
    }
    if let Some(v) = cli.estimation_noise_db {
        cfg.estimation_noise_db = v;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> fdmac::Result<()> {
    let mut base = base_config(&cli)?;
    let schemes = match &cli.scheme {
        Some(s) => experiment::parse_schemes(s)?,
        None => vec![base.scheme],
    };
    base.scheme = schemes[0];
    base.validate()?;
    if cli.print_config {
        print!("{}", base.to_toml());
        return Ok(());
    }

    let scenario = Scenario {
        base,
        schemes,
        seeds: experiment::parse_seeds(&cli.seeds)?,
        sweep: cli.sweep.clone(),
    };
    let runs = experiment::run_scenario(&scenario)?;

    let summary = experiment::summary_rows(&runs);
    match &cli.out {
        Some(path) => experiment::write_csv(&summary, create(path)?)?,
        None => experiment::write_csv(&summary, io::stdout().lock())?,
    }
    if let Some(path) = &cli.per_client_out {
        experiment::write_csv(&experiment::client_rows(&runs), create(path)?)?;
    }
    if let Some(path) = &cli.per_pair_out {
        experiment::write_csv(&experiment::pair_rows(&runs), create(path)?)?;
    }

    let mut err = io::stderr().lock();
    let key = |r: &experiment::RunOutput| {
        let axis = scenario.sweep.as_ref().map(|s| match s.axis {
            experiment::SweepAxis::Clients => r.config.n_clients.to_string(),
            experiment::SweepAxis::ArrivalRate => r.config.arrival_fps.to_string(),
            experiment::SweepAxis::Delta => r.config.delta_db.to_string(),
            experiment::SweepAxis::Sic => r.config.sic_db.to_string(),
            experiment::SweepAxis::Scheme => String::new(),
        });
        (r.config.scheme, axis)
    };
    for ((scheme, axis), mbps) in experiment::mean_by(&runs, key, |r| r.throughput_total_mbps()) {
        let at = axis.filter(|a| !a.is_empty()).map(|a| format!(" at {a}")).unwrap_or_default();
        writeln!(err, "{scheme}{at}: mean total throughput {mbps:.2} Mb/s over {} seed(s)", scenario.seeds.len())?;
    }
    Ok(())
}

fn create(path: &Path) -> fdmac::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}
