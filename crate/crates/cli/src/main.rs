use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use specquant_cli::commands;
use specquant_cli::config::{self, Validate};
use specquant_cli::presets::{self, Preset};

#[derive(Parser)]
#[command(name = "specquant", version, about = "Spectral quantile estimation and frequency-domain quantile tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// JSON config file for the command.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in design: table1..table5, tn-variance, rawlimit.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Output file (a directory for `simulate`); stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides the config's base_seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo loops.
    #[arg(long, global = true, value_name = "N", env = "SPECQUANT_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Quantile estimates over simulated replicates.
    Estimate,
    /// Test one series against a null model; exit 0 = kept, 2 = rejected.
    Test {
        /// Series CSV with a `value` column.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Null x alternative power matrix.
    Power,
    /// Write simulated series, one CSV per replicate.
    Simulate,
    /// T_n variance and limit-law diagnostics.
    Diagnose,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Test { .. } => "test",
            Command::Power => "power",
            Command::Simulate => "simulate",
            Command::Diagnose => "diagnose",
        }
    }
}

/// Config from `--config` or `--preset`, with `--seed` applied.
fn resolve<T: DeserializeOwned + Validate>(
    global: &Global,
    command: &str,
    from_preset: impl FnOnce(Preset) -> Option<T>,
) -> Result<T> {
    let mut config = match (&global.config, &global.preset) {
        (Some(_), Some(_)) => bail!("--config and --preset are mutually exclusive"),
        (Some(path), None) => config::load::<T>(path)?,
        (None, Some(name)) => {
            let preset = presets::preset(name).ok_or_else(|| {
                anyhow!("unknown preset `{name}`; available: {}", presets::NAMES.join(", "))
            })?;
            let owner = preset.command();
            from_preset(preset)
                .ok_or_else(|| anyhow!("preset `{name}` belongs to `{owner}`, not `{command}`"))?
        }
        (None, None) => bail!("`{command}` needs --config PATH or --preset NAME"),
    };
    if let Some(seed) = global.seed {
        *config.base_seed_mut() = seed;
    }
    Ok(config)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            bail!("--threads must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    let g = &cli.global;
    let name = cli.command.name();
    match &cli.command {
        Command::Estimate => {
            let c = resolve(g, name, |p| match p {
                Preset::Estimate(c) => Some(c),
                _ => None,
            })?;
            let mut out = output(g.out.as_deref())?;
            commands::estimate(&c, &mut out)?;
            out.flush()?;
        }
        Command::Power => {
            let c = resolve(g, name, |p| match p {
                Preset::Power(c) => Some(c),
                _ => None,
            })?;
            let mut out = output(g.out.as_deref())?;
            commands::power(&c, &mut out)?;
            out.flush()?;
        }
        Command::Diagnose => {
            let c = resolve(g, name, |p| match p {
                Preset::Diagnose(c) => Some(c),
                _ => None,
            })?;
            let mut out = output(g.out.as_deref())?;
            commands::diagnose(&c, &mut out)?;
            out.flush()?;
        }
        Command::Simulate => {
            let c: config::SimulateConfig = resolve(g, name, |_| None)?;
            let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("series"));
            let paths = commands::simulate(&c, &dir)?;
            eprintln!("wrote {} series to {}", paths.len(), dir.display());
        }
        Command::Test { input } => {
            let c: config::TestConfig = resolve(g, name, |_| None)?;
            let path = input
                .clone()
                .or_else(|| c.series.clone())
                .ok_or_else(|| anyhow!("no series: pass --input PATH or set `series` in the config"))?;
            let series = commands::load_series(&path)?;
            let mut out = output(g.out.as_deref())?;
            let result = commands::test(&c, &series, &mut out)?;
            out.flush()?;
            return Ok(ExitCode::from(if result.reject { 2 } else { 0 }));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
