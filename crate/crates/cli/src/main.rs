//! Batch experiment runner: solve one configured problem, persist fields,
//! reports and a checksummed manifest. Exit codes: 0 success, 2 config
//! error, 3 solver non-convergence (artifacts still written), 4 analysis
//! precondition failure.

mod bundled;
mod compare;
mod config;
mod manifest;
mod runner;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "onephase", version, about = "One-phase free boundary laboratory")]
struct Cli {
    /// Worker threads for the parallel analyses (env: ONEPHASE_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute an experiment run into a fresh directory.
    Run {
        /// Path to a TOML experiment config.
        #[arg(long, conflicts_with = "bundled")]
        config: Option<PathBuf>,
        /// Name of a bundled config (see list-bundled).
        #[arg(long)]
        bundled: Option<String>,
        /// Output directory override (env: ONEPHASE_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override recorded in the manifest (env: ONEPHASE_SEED).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Field and metric diff between two run directories (or manifests).
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Write the diff as JSON to this path as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a config without computing anything.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the bundled experiment configs.
    ListBundled,
}

fn env_override<T: std::str::FromStr>(name: &str) -> Option<T> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| env_override("ONEPHASE_THREADS"));
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let code = match dispatch(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn dispatch(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Run {
            config,
            bundled: bundled_name,
            out,
            seed,
        } => {
            let (text, origin) = match (&config, &bundled_name) {
                (Some(path), None) => (
                    std::fs::read_to_string(path)
                        .map_err(|e| anyhow!("cannot read config {}: {e}", path.display()))?,
                    path.display().to_string(),
                ),
                (None, Some(name)) => (
                    bundled::get(name)
                        .ok_or_else(|| anyhow!("no bundled config named `{name}`"))?
                        .to_string(),
                    format!("bundled:{name}"),
                ),
                _ => return Err(anyhow!("exactly one of --config or --bundled is required")),
            };
            let mut cfg = ExperimentConfig::parse(&text)?;
            if let Some(s) = seed.or_else(|| env_override("ONEPHASE_SEED")) {
                cfg.seed = s;
            }
            let out = out.or_else(|| env_override::<PathBuf>("ONEPHASE_OUT"));
            let outcome = runner::run(&cfg, text.as_bytes(), out)?;
            println!(
                "run {} -> {} (exit {})",
                origin,
                outcome.out_dir.display(),
                outcome.exit_code
            );
            Ok(outcome.exit_code)
        }
        Cmd::Compare { a, b, out } => {
            let report = compare::compare(&a, &b)?;
            print!("{}", report.to_text());
            if let Some(path) = out {
                std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
            }
            Ok(0)
        }
        Cmd::ValidateConfig { config } => {
            ExperimentConfig::load(&config)?;
            println!("config ok: {}", config.display());
            Ok(0)
        }
        Cmd::ListBundled => {
            for (name, desc, _) in bundled::BUNDLED {
                println!("{name:24} {desc}");
            }
            Ok(0)
        }
    }
}
