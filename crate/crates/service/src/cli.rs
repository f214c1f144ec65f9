use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use algoforge::profiler::{aggregate, aggregate_csv, convergence, read_log, CONVERGENCE_FILE, SUMMARY_FILE};
use algoforge::search::{Method, StopSignal};
use algoforge::tasks::registry;
use algoforge::StopReason;
use clap::{Parser, Subcommand};

use crate::config::{ConfigError, RunConfig};
use crate::manager::{RunManager, DEFAULT_MAX_RUNS};
use crate::run::{execute, generate_run_id, run_dir};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "algoforge", version, about = "Search for algorithms with a language-model sampler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a run to completion and print the summary path.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `run_id` from the config.
        #[arg(long)]
        run_id: Option<String>,
        /// Overrides `profiler.log_dir` from the config.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Write convergence.csv for each run directory; with several, also
    /// write the mean/std aggregate.
    Report {
        #[arg(long = "log", required = true, num_args = 1..)]
        logs: Vec<PathBuf>,
        /// Aggregate output path (several logs only).
        #[arg(long, default_value = "aggregate.csv")]
        out: PathBuf,
    },
    /// List registered tasks.
    ListTasks,
    /// List search methods.
    ListMethods,
    /// Start the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = DEFAULT_MAX_RUNS)]
        max_runs: usize,
    },
    /// Check a config without sampling.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Entry point; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run { config, run_id, log_dir } => cmd_run(&config, run_id, log_dir),
        Command::Report { logs, out } => cmd_report(&logs, &out),
        Command::ListTasks => {
            for t in registry() {
                println!("{}\t{}", t.id, t.title);
            }
            EXIT_OK
        }
        Command::ListMethods => {
            for m in Method::ALL {
                println!("{}\t{}", m.as_str(), m.title());
            }
            EXIT_OK
        }
        Command::Serve { port, host, max_runs } => cmd_serve(&host, port, max_runs),
        Command::Validate { config } => match load_resolved(&config) {
            Ok(_) => {
                println!("{}: ok", config.display());
                EXIT_OK
            }
            Err(e) => config_error(&e),
        },
    }
}

fn config_error(e: &ConfigError) -> i32 {
    eprintln!("error: {e}");
    EXIT_CONFIG
}

fn load_resolved(path: &Path) -> Result<(RunConfig, crate::config::Resolved), ConfigError> {
    let config = RunConfig::load(path)?;
    let resolved = config.resolve()?;
    Ok((config, resolved))
}

fn cmd_run(path: &Path, run_id: Option<String>, log_dir: Option<PathBuf>) -> i32 {
    let mut config = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    if run_id.is_some() {
        config.run_id = run_id;
    }
    if let Some(dir) = log_dir {
        config.profiler.log_dir = dir;
    }
    let resolved = match config.resolve() {
        Ok(r) => r,
        Err(e) => return config_error(&e),
    };
    let id = config.run_id.clone().unwrap_or_else(generate_run_id);
    config.run_id = Some(id.clone());
    let dir = run_dir(&config, &id);
    match execute(&config, &resolved, &dir, Vec::new(), &StopSignal::new()) {
        Ok(summary) => {
            let best = summary
                .best
                .as_ref()
                .map(|b| format!("{:?}", b.fitness.values()))
                .unwrap_or_else(|| "none".into());
            eprintln!(
                "run {id}: {} after {} samples, best {best}",
                summary.reason.as_str(),
                summary.samples_used
            );
            println!("{}", dir.join(SUMMARY_FILE).display());
            match summary.reason {
                StopReason::Error | StopReason::SamplerUnavailable => EXIT_RUNTIME,
                _ => EXIT_OK,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn cmd_report(logs: &[PathBuf], out: &Path) -> i32 {
    let mut series = Vec::new();
    for dir in logs {
        if !dir.exists() {
            eprintln!("error: {} does not exist", dir.display());
            return EXIT_CONFIG;
        }
        let events = match read_log(dir) {
            Ok(e) => e,
            Err(e) => {
                eprintln!("error: {}: {e}", dir.display());
                return EXIT_RUNTIME;
            }
        };
        let c = convergence(&events);
        let target = if dir.is_dir() {
            dir.join(CONVERGENCE_FILE)
        } else {
            dir.with_file_name(CONVERGENCE_FILE)
        };
        if let Err(e) = std::fs::write(&target, c.to_csv()) {
            eprintln!("error: writing {}: {e}", target.display());
            return EXIT_RUNTIME;
        }
        println!("{}", target.display());
        series.push(c);
    }
    if series.len() > 1 {
        if let Err(e) = std::fs::write(out, aggregate_csv(&aggregate(&series))) {
            eprintln!("error: writing {}: {e}", out.display());
            return EXIT_RUNTIME;
        }
        println!("{}", out.display());
    }
    EXIT_OK
}

fn cmd_serve(host: &str, port: u16, max_runs: usize) -> i32 {
    let rt = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let result = rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        println!("listening on http://{}", listener.local_addr()?);
        let _ = std::io::stdout().flush();
        crate::api::serve(listener, Arc::new(RunManager::new(max_runs))).await
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
