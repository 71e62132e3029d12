use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use otfs_sim::config::{Config, ConfigError};
use otfs_sim::{output, pilots, run};

#[derive(Parser)]
#[command(name = "otfs", version, about = "OTFS versus OFDM link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; overrides `link.workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides `link.master_seed`.
    #[arg(long)]
    master_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER/BLER/throughput sweep.
    Sim {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Optional SVG with BLER and throughput curves.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// BLER per codeblock size.
    CodeblockStudy {
        #[command(flatten)]
        common: Common,
        /// Comma-separated information bits per codeblock.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Packs pilot ports into the configured region.
    PlanPilots {
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimates one channel draw from a delay-Doppler pilot.
    EstimateDemo {
        #[arg(long)]
        config: PathBuf,
    },
}

fn link_config(common: &Common) -> Result<(otfs_core::link::LinkConfig, usize)> {
    let cfg = Config::load(&common.config)?;
    let mut link = cfg.link()?;
    if let Some(seed) = common.master_seed {
        link.master_seed = seed;
    }
    let workers = match common.workers.or(cfg.workers()) {
        Some(0) => return Err(ConfigError::new("workers", "must be at least 1").into()),
        Some(w) => w,
        None => run::default_workers(),
    };
    Ok((link, workers))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sim { common, out, plot } => {
            let (link, workers) = link_config(&common)?;
            log::info!("{}", otfs_core::link::describe(&link));
            let res = run::run_parallel(&link, &[link.codeblock_bits], workers)?;
            output::write_csv_file(&out, &res, false)?;
            if let Some(svg) = plot {
                output::write_svg(&svg, &res)?;
            }
        }
        Command::CodeblockStudy {
            common,
            sizes,
            out,
            plot,
        } => {
            let (link, workers) = link_config(&common)?;
            let sizes: Vec<Option<usize>> = sizes.into_iter().map(Some).collect();
            let res = run::run_parallel(&link, &sizes, workers)?;
            output::write_csv_file(&out, &res, true)?;
            if let Some(svg) = plot {
                output::write_svg(&svg, &res)?;
            }
        }
        Command::PlanPilots { config } => {
            print!("{}", pilots::plan_pilots(&Config::load(&config)?)?);
        }
        Command::EstimateDemo { config } => {
            print!("{}", pilots::estimate_demo(&Config::load(&config)?)?);
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<otfs_core::Error>() {
        Some(otfs_core::Error::InvalidConfig { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(exit_code(&e))
        }
    }
}
