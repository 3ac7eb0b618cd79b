use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use taskgap_core::synth::AuditDataset;
use taskgap_core::{Error, Result};

use crate::config::RunConfig;
use crate::pipeline::{self, Artifacts};

#[derive(Debug, Parser)]
#[command(name = "taskgap", version, about = "Simulated correspondence audits: task-based discrimination model, estimation and power")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration; defaults apply when omitted
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// master seed, overriding the configuration
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// output directory, overriding the configuration
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// worker threads (default: TASKGAP_THREADS, else all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// only errors on standard error
    #[arg(long, global = true)]
    pub quiet: bool,
    /// use the 500-ad demo configuration as the base
    #[arg(long, global = true)]
    pub demo: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate occupations and an audit dataset with simulated callbacks
    Simulate,
    /// Run the configured analyses on a dataset CSV
    Estimate {
        #[arg(long)]
        data: PathBuf,
    },
    /// Cluster occupations on task percentiles and scan k
    Cluster {
        /// occupation task table CSV; the configured source otherwise
        #[arg(long)]
        occupations: Option<PathBuf>,
    },
    /// Monte Carlo power of the configured scenario
    Power,
    /// Certify the closed-form model against its numerical oracles
    Verify,
    /// Full pipeline
    Run,
    /// Collect the text tables of an output directory into report.txt
    Report,
}

/// Exit status of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    VerifyFailed,
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_path(p)?,
        None if common.demo => RunConfig::demo(),
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &common.out {
        cfg.output = Some(o.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("taskgap-out"))
}

/// Execute a parsed command line.
pub fn run_cli(cli: &Cli) -> Result<Status> {
    let cfg = load_config(&cli.common)?;
    let out = out_dir(&cfg);
    let mut status = Status::Ok;
    let artifacts = match &cli.command {
        Command::Simulate => {
            cfg.validate()?;
            let catalog = pipeline::load_catalog(&cfg)?;
            pipeline::simulate_stage(&cfg, &catalog)?.artifacts
        }
        Command::Estimate { data } => {
            cfg.validate()?;
            let file = std::fs::File::open(data)
                .map_err(|e| Error::config("data", format!("cannot open {}: {e}", data.display())))?;
            let ds = AuditDataset::read_csv(std::io::BufReader::new(file))?;
            ds.validate()?;
            pipeline::estimate_stage(&cfg, &ds, None)?
        }
        Command::Cluster { occupations } => {
            cfg.validate()?;
            let (table, truth) = match occupations {
                Some(p) => (taskgap_core::taskspace::OccupationTaskTable::from_path(p)?, None),
                None => {
                    let c = pipeline::load_catalog(&cfg)?;
                    let truth = c.info().iter().map(|i| i.cluster.map(usize::from)).collect();
                    (c.table().clone(), truth)
                }
            };
            let stage = pipeline::cluster_stage(&cfg, &table, truth)?;
            let mut art = stage.artifacts;
            art.insert_text("clusters.txt", stage.profile_text);
            art
        }
        Command::Power => {
            cfg.validate()?;
            pipeline::power_stage(&cfg)?.1
        }
        Command::Verify => {
            let (report, art) = pipeline::verify_stage(&cfg)?;
            if !report.passed {
                status = Status::VerifyFailed;
            }
            art
        }
        Command::Run => {
            let outcome = pipeline::run_all(&cfg)?;
            if !outcome.verified {
                status = Status::VerifyFailed;
            }
            outcome.artifacts
        }
        Command::Report => {
            let text = pipeline::report_from_dir(&out)?;
            if !cli.common.quiet {
                print!("{text}");
            }
            let mut art = Artifacts::default();
            art.insert_text("report.txt", text);
            art
        }
    };
    artifacts.commit(&out)?;
    if !cli.common.quiet {
        for p in artifacts.paths() {
            eprintln!("wrote {}", Path::new(&out).join(p).display());
        }
    }
    Ok(status)
}

/// Machine-readable error for standard error.
pub fn error_json(e: &Error) -> String {
    let mut body = json!({"kind": e.kind(), "message": e.to_string()});
    if let Error::Config { path, .. } = e {
        body["path"] = json!(path);
    }
    json!({ "error": body }).to_string()
}

/// Size the global thread pool from the flag, then `TASKGAP_THREADS`.
pub fn init_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("TASKGAP_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::config("TASKGAP_THREADS", format!("not a thread count: `{v}`")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::config("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config("threads", e.to_string()))?;
    }
    Ok(())
}
