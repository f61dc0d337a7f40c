use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tabml::apply::{apply, parse_architecture, simulate, ApplyOptions, SimSpec};
use tabml::config::PipelineConfig;
use tabml::pipeline::Runner;
use tabml::{Error, Result};
use tabml_core::simdata::{MuxSpec, SnpSpec};

#[derive(Parser)]
#[command(name = "tabml", version, about = "Automated binary classification pipeline for tabular data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run a single phase (1-11); earlier phases must be complete.
        #[arg(long)]
        phase: Option<usize>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output root; overrides `out_dir` and the TABML_OUT variable.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Configuration override, `key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Apply the trained models of an experiment to new data.
    Apply {
        #[arg(long)]
        experiment: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Write per-model probabilities only; the outcome column may be absent.
        #[arg(long)]
        predictions_only: bool,
        /// Training dataset whose models are used.
        #[arg(long)]
        target: Option<String>,
    },
    /// Write a simulated benchmark dataset.
    Simulate {
        #[command(subcommand)]
        kind: SimKind,
    },
}

#[derive(Subcommand)]
enum SimKind {
    /// Boolean multiplexer.
    Mux {
        #[arg(long)]
        bits: usize,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// SNP genotypes with a planted genetic architecture.
    Snp {
        #[arg(long)]
        arch: String,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 1600)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_set(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("--set expects key=value, got `{s}`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, phase, jobs, out, set } => {
            let overrides = set.iter().map(|s| parse_set(s)).collect::<Result<Vec<_>>>()?;
            let (mut c, text) = PipelineConfig::from_file(&config, &overrides)?;
            if let Some(j) = jobs {
                if j == 0 {
                    return Err(Error::Config("--jobs must be at least 1".into()));
                }
                c.jobs = j;
            }
            if let Some(o) = out {
                c.out_dir = o;
            }
            let runner = Runner::new(c, text, overrides)?;
            let s = runner.run(phase)?;
            log::info!("{} job(s) run, {} up to date", s.executed.len(), s.skipped.len());
            println!("{}", runner.layout.root.display());
        }
        Command::Apply { experiment, data, predictions_only, target } => {
            let dir = apply(&ApplyOptions { experiment, data, target, predictions_only })?;
            println!("{}", dir.display());
        }
        Command::Simulate { kind } => {
            let (spec, out) = match kind {
                SimKind::Mux { bits, n, seed, out } => (SimSpec::Mux(MuxSpec { total_bits: bits, n_instances: n, seed }), out),
                SimKind::Snp { arch, h, n, seed, out } => {
                    let mut s = SnpSpec::new(parse_architecture(&arch)?, h, seed);
                    s.n_instances = n;
                    (SimSpec::Snp(s), out)
                }
            };
            simulate(&spec, &out)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
