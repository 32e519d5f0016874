//! `hapres`: analyze, optimize, simulate and sweep HAP-reserved satellite
//! uplink scenarios. Every command writes RFC 4180 CSV, optionally preceded
//! by a `# generated-unix <seconds>` line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hapres_core::optimizer::alternate_with;
use hapres_core::output::write_timestamp;
use hapres_core::scenario::{Loaded, ScenarioFile};
use hapres_core::sim::{simulate_csma, simulate_negotiation};
use hapres_core::sweep::{self, evaluate_rho, SweepSpec};
use hapres_core::throughput::ThroughputReport;

#[derive(Parser, Debug)]
#[command(name = "hapres", version, about = "Throughput analysis and transmission control for HAP-relayed satellite uplinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario file (JSON). Omitted keys take reference values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Leave out the `# generated-unix` line.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Throughput at fixed relay probabilities (0: direct only, 1: relay only).
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0])]
        rho: Vec<f64>,
    },
    /// Alternating optimization of the relay probability and HAP choice.
    /// `--output` names a directory receiving trace.csv and decision.csv.
    /// Exits with status 2 when the iteration limit is hit first.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo run of one contention scheme with `n_users` stations.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Scheme::Csma)]
        scheme: Scheme,
        /// Generic slots (csma).
        #[arg(long, default_value_t = 1_000_000)]
        slots: u64,
        /// Frames (negotiation).
        #[arg(long, default_value_t = 10_000)]
        frames: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Evaluate the scenario over a sweep described in a JSON file.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sweep: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Csma,
    Negotiation,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze { common, rho } => analyze(&common, &rho),
        Command::Optimize { common } => optimize(&common),
        Command::Simulate { common, scheme, slots, frames, seed } => simulate(&common, scheme, slots, frames, seed),
        Command::Sweep { common, sweep, jobs } => run_sweep(&common, &sweep, jobs),
    }
}

fn scenario_file(common: &Common) -> Result<ScenarioFile> {
    match &common.config {
        Some(path) => ScenarioFile::read(path).with_context(|| format!("in {}", path.display())),
        None => Ok(ScenarioFile::default()),
    }
}

fn load(common: &Common) -> Result<Loaded> {
    let file = scenario_file(common)?;
    let what = common.config.as_ref().map_or("reference scenario".to_string(), |p| p.display().to_string());
    file.build().with_context(|| format!("in {what}"))
}

fn open_output(path: Option<&Path>, timestamp: bool) -> Result<Box<dyn Write>> {
    let mut w: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    if timestamp {
        write_timestamp(&mut w)?;
    }
    Ok(w)
}

fn analyze(common: &Common, rhos: &[f64]) -> Result<ExitCode> {
    let loaded = load(common)?;
    let rates = loaded.rate_table()?;
    let mut out = csv::Writer::from_writer(open_output(common.output.as_deref(), !common.no_timestamp)?);
    let mut header = vec!["case"];
    header.extend(ThroughputReport::CSV_HEADER);
    out.write_record(header)?;
    for &rho in rhos {
        if !(0.0..=1.0).contains(&rho) {
            bail!("--rho {rho} outside [0, 1]");
        }
        let report = evaluate_rho(rho, &loaded.config, &loaded.timings, &rates, loaded.settings.mode)
            .with_context(|| format!("at rho = {rho}"))?;
        let case = match rho {
            0.0 => "case2",
            1.0 => "case3",
            _ => "case1",
        };
        let mut row = vec![case.to_string()];
        row.extend(report.csv_record());
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn optimize(common: &Common) -> Result<ExitCode> {
    let loaded = load(common)?;
    let rates = loaded.rate_table()?;
    let result = alternate_with(&loaded.config, &loaded.timings, &rates, &loaded.settings)?;
    let timestamp = !common.no_timestamp;
    match &common.output {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            result.write_trace(open_output(Some(&dir.join("trace.csv")), timestamp)?)?;
            result.write_decision(open_output(Some(&dir.join("decision.csv")), timestamp)?)?;
        }
        None => {
            result.write_trace(open_output(None, timestamp)?)?;
            println!();
            result.write_decision(open_output(None, false)?)?;
        }
    }
    if result.capped {
        log::warn!("fewer user-HAP pairs than reservations in at least one iteration");
    }
    if result.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("not converged after {} iterations", result.iterations);
        Ok(ExitCode::from(2))
    }
}

fn simulate(common: &Common, scheme: Scheme, slots: u64, frames: u64, seed: u64) -> Result<ExitCode> {
    let loaded = load(common)?;
    let out = open_output(common.output.as_deref(), !common.no_timestamp)?;
    let n = loaded.config.n_users;
    match scheme {
        Scheme::Csma => simulate_csma(n, &loaded.timings, slots, seed)?.write_csv(out)?,
        Scheme::Negotiation => {
            simulate_negotiation(n, loaded.config.negotiation_activity(), &loaded.timings, frames, seed)?.write_csv(out)?
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_sweep(common: &Common, spec_path: &Path, jobs: usize) -> Result<ExitCode> {
    let file = scenario_file(common)?;
    let spec = SweepSpec::read(spec_path).with_context(|| format!("in {}", spec_path.display()))?;
    let rows = sweep::run(&file, &spec, jobs)?;
    let target = common.output.clone().or_else(|| spec.output_path.clone());
    sweep::write_rows(open_output(target.as_deref(), !common.no_timestamp)?, &rows)?;
    let failed = rows.iter().filter(|r| r.report.is_err()).count();
    if failed > 0 {
        log::warn!("{failed} of {} sweep points could not be evaluated", rows.len());
    }
    Ok(ExitCode::SUCCESS)
}
