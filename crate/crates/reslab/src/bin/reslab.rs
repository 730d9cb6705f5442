//! Thin CLI over the library: each subcommand reads a JSON config (or a
//! `--potential kind:args` shorthand where that is enough), writes report
//! files into --out, and follows the exit-code contract
//! (0 ok, 1 usage/config, 2 inconclusive, 3 cross-module inconsistency).

use clap::{Parser, Subcommand};
use reslab::config::*;
use reslab::report::read_json_config;
use reslab::runner;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "reslab", version, about = "zero-energy resonance toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Zero-energy classification of a potential
    Classify {
        #[arg(long)]
        config: Option<PathBuf>,
        /// shorthand potential, e.g. exponential:1.0 or square_well:2.4674,1.0
        #[arg(long)]
        potential: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// No-strong-resonance certificate search over M
    Certify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        potential: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Contraction construction of linearly growing solutions
    Weakres {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        potential: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Ground-state profile, mass law, tails
    Groundstate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Fredholm-determinant scan over a strip rectangle
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Wave evolution and decay-rate measurement
    Wave {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                reslab::Error::Config(_) | reslab::Error::Json(_) | reslab::Error::Io(_) => {
                    runner::EXIT_CONFIG
                }
                reslab::Error::Inconclusive { .. }
                | reslab::Error::Resolution(_)
                | reslab::Error::MeshRefinement { .. } => runner::EXIT_INCONCLUSIVE,
                reslab::Error::Consistency(_) => runner::EXIT_INCONSISTENT,
                _ => runner::EXIT_CONFIG,
            };
            ExitCode::from(code as u8)
        }
    }
}

fn thread_pool() -> reslab::Result<()> {
    if let Ok(n) = std::env::var("RESLAB_THREADS") {
        let n: usize = n
            .parse()
            .map_err(|_| reslab::Error::Config("RESLAB_THREADS must be an integer".into()))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| reslab::Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn potential_config<T, F>(
    config: Option<PathBuf>,
    potential: Option<String>,
    from_decl: F,
) -> reslab::Result<T>
where
    T: serde::de::DeserializeOwned,
    F: FnOnce(PotentialDecl) -> T,
{
    match (config, potential) {
        (Some(path), None) => read_json_config(&path),
        (None, Some(short)) => Ok(from_decl(PotentialDecl::parse_shorthand(&short)?)),
        _ => Err(reslab::Error::Config(
            "provide exactly one of --config or --potential".into(),
        )),
    }
}

fn run(cli: Cli) -> reslab::Result<i32> {
    thread_pool()?;
    match cli.command {
        Command::Classify {
            config,
            potential,
            out,
        } => {
            let cfg: ClassifyConfig = potential_config(config, potential, |decl| ClassifyConfig {
                potential: decl,
                tol: 1e-6,
                seed: None,
            })?;
            runner::run_classify(&cfg, &out)
        }
        Command::Certify {
            config,
            potential,
            out,
        } => {
            let cfg: CertifyConfig = potential_config(config, potential, |decl| CertifyConfig {
                potential: decl,
                m_min: 4,
                m_max: 40,
                seed: None,
            })?;
            runner::run_certify(&cfg, &out)
        }
        Command::Weakres {
            config,
            potential,
            out,
        } => {
            let cfg: WeakresConfig = potential_config(config, potential, |decl| WeakresConfig {
                potential: decl,
                c1: 1.0,
                tol: 1e-10,
                seed: None,
            })?;
            runner::run_weakres(&cfg, &out)
        }
        Command::Groundstate { config, out } => {
            let cfg: GroundstateConfig = read_json_config(&config)?;
            runner::run_groundstate(&cfg, &out)
        }
        Command::Scan { config, out } => {
            let cfg: ScanConfig = read_json_config(&config)?;
            runner::run_scan(&cfg, &out)
        }
        Command::Wave { config, out } => {
            let cfg: WaveConfig = read_json_config(&config)?;
            runner::run_wave(&cfg, &out)
        }
    }
}
