//! `fibered-dyn <subcommand> --config path.json [--seed u64] [--out dir] [--workers k]`.
//!
//! Exit codes: 0 all checks pass, 1 a tolerance band failed, 2 bad
//! configuration, 3 numerical failure.

mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{
    BifParams, BjParams, CompareParams, DecompParams, GreenParams, GreenPlane, LyapunovParams, Measure, PeriodicParams,
    RunConfig, SampleParams, Spec,
};

use crate::error::{Error, Result};
use commands::{Inputs, Outcome};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAND: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Green,
    Sample,
    Lyapunov,
    BjCheck,
    PeriodicCheck,
    DecompCheck,
    BifScan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Green => "green",
            Command::Sample => "sample",
            Command::Lyapunov => "lyapunov",
            Command::BjCheck => "bj-check",
            Command::PeriodicCheck => "periodic-check",
            Command::DecompCheck => "decomp-check",
            Command::BifScan => "bif-scan",
        }
    }
}

#[derive(Clone, Debug, Parser)]
#[command(name = "fibered-dyn", version, about = "Checks on fibered endomorphisms of P²")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, env = "FIBERED_DYN_SEED")]
    pub seed: Option<u64>,
    /// Output directory (default: config `out`, else the current directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, env = "FIBERED_DYN_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    version: &'a str,
    config_hash: &'a str,
    seed: u64,
    tol: f64,
    map: Option<String>,
    family: Option<String>,
    status: &'a str,
    passed: bool,
    artifacts: Vec<String>,
    result: Value,
}

/// Parse arguments, run, and return the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    run(&cli)
}

fn config_error(e: impl std::fmt::Display) -> i32 {
    eprintln!("fibered-dyn: {e}");
    EXIT_CONFIG
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run(cli: &Cli) -> i32 {
    let text = match fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return config_error(format!("cannot read {}: {e}", cli.config.display())),
    };
    let config = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    let resolved = (|| -> Result<_> {
        let map = config.map.as_ref().map(|s| s.resolve()).transpose()?;
        let family = config.family.as_ref().map(|s| s.resolve()).transpose()?;
        Ok((map, family))
    })();
    let (map, family) = match resolved {
        Ok(v) => v,
        Err(e) => return config_error(e),
    };
    let pool = match cli.workers {
        Some(0) => return config_error("--workers must be at least 1"),
        Some(k) => rayon::ThreadPoolBuilder::new().num_threads(k).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => return config_error(e),
    };
    let seed = cli.seed.unwrap_or(config.seed);
    let out_dir = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let inputs = Inputs { config: &config, map, family, seed };
    let outcome = pool.install(|| execute(cli.command, &inputs));

    let hash = config_hash(&text);
    let (status, passed, result, artifacts, code) = match outcome {
        Ok(o) => {
            let code = if o.passed { EXIT_OK } else { EXIT_BAND };
            (if o.passed { "pass" } else { "band-failure" }, o.passed, o.result, o.artifacts, code)
        }
        Err(e) if e.is_numerical() => {
            eprintln!("fibered-dyn: {e}");
            let mut r = json!({ "error": e.to_string() });
            if let Error::Validation(report) = &e {
                r["checks"] = serde_json::to_value(&report.checks).unwrap_or(Value::Null);
            }
            ("numerical-error", false, r, Vec::new(), EXIT_NUMERICAL)
        }
        Err(e) => return config_error(e),
    };
    let report = Report {
        command: cli.command.name(),
        version: VERSION,
        config_hash: &hash,
        seed,
        tol: config.tol,
        map: config.map.as_ref().map(|m| m.label()),
        family: config.family.as_ref().map(|f| match f {
            Spec::Builtin(n) => n.clone(),
            Spec::Inline(f) => f.name.clone(),
        }),
        status,
        passed,
        artifacts: artifacts.iter().map(|(s, _)| artifact_name(cli.command, s)).collect(),
        result,
    };
    match write_outputs(&out_dir, cli.command, &report, &artifacts) {
        Ok(json) => println!("{json}"),
        Err(e) => return config_error(e),
    }
    code
}

fn artifact_name(cmd: Command, suffix: &str) -> String {
    format!("{}.{suffix}", cmd.name())
}

fn write_outputs(dir: &Path, cmd: Command, report: &Report, artifacts: &[(String, Vec<u8>)]) -> Result<String> {
    fs::create_dir_all(dir)?;
    for (suffix, bytes) in artifacts {
        fs::write(dir.join(artifact_name(cmd, suffix)), bytes)?;
    }
    let json = serde_json::to_string_pretty(report)?;
    fs::write(dir.join(artifact_name(cmd, "json")), format!("{json}\n"))?;
    Ok(json)
}

fn execute(cmd: Command, inp: &Inputs) -> Result<Outcome> {
    match cmd {
        Command::Validate => commands::validate(inp),
        Command::Green => commands::green(inp),
        Command::Sample => commands::sample(inp),
        Command::Lyapunov => commands::lyapunov(inp),
        Command::BjCheck => commands::bj(inp),
        Command::PeriodicCheck => commands::periodic(inp),
        Command::DecompCheck => commands::decomp(inp),
        Command::BifScan => commands::bif_scan(inp),
    }
}
