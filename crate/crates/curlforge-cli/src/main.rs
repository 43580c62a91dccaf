//! `curlforge` command-line front end: simulate catalog systems, run
//! invariant suites, compare formulations, and sweep linear stability.
//!
//! Exit codes: 0 success / all checks pass, 1 an invariant or comparison
//! failed, 2 usage error, 3 numerical blow-up.

mod commands;
mod manifest;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "curlforge", version, about = "Curl forces with dissipative and gyroscopic couplings")]
struct Cli {
    /// Optional key=value config file (keys: t0, t1, dt, tolerance).
    /// Command-line flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the system catalog with parameter schemas and defaults.
    List,
    /// Integrate a system and write a CSV trajectory plus a JSON manifest.
    Simulate {
        #[arg(long)]
        system: String,
        /// Repeated name=value parameter overrides.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        /// Potential profile for the entries that take one.
        #[arg(long, value_parser = ["linear", "quadratic"])]
        potential: Option<String>,
        /// Initial flat state, comma-separated (q.., p.. [, z]).
        #[arg(long)]
        x0: String,
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// CSV output path; the manifest lands beside it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suite for a system and emit the JSON report.
    Check {
        #[arg(long)]
        system: String,
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        #[arg(long, value_parser = ["linear", "quadratic"])]
        potential: Option<String>,
        /// Initial flat state, comma-separated.
        #[arg(long)]
        x0: String,
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate several systems from matched configuration data and
    /// report pairwise configuration-trajectory divergence.
    Compare {
        /// Comma-separated catalog names (at least two).
        #[arg(long)]
        systems: String,
        /// Shared overrides; scope to one system with SYSTEM.NAME=VALUE.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        #[arg(long, value_parser = ["linear", "quadratic"])]
        potential: Option<String>,
        /// Configuration initial data: x,y,xdot,ydot (or x,xdot in 1D).
        #[arg(long = "x0-config")]
        x0_config: String,
        /// Initial Herglotz action for contact systems.
        #[arg(long, default_value_t = 0.0)]
        z0: f64,
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Pairwise divergence tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalue sweep over a parameter grid of a linear-family system.
    Stability {
        #[arg(long)]
        system: String,
        /// Repeated NAME=V1,V2,... grid axes (cross product).
        #[arg(long = "grid", value_name = "NAME=V1,V2,...")]
        grid: Vec<String>,
        /// Fixed name=value parameters for axes not swept.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Defaults that a config file may override: time window, step, tolerance.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t0: 0.0,
            t1: 10.0,
            dt: 1e-3,
            tolerance: 1e-7,
        }
    }
}

impl RunConfig {
    fn load(path: &PathBuf) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", lineno + 1))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| format!("config line {}: bad number '{}'", lineno + 1, value))?;
            match key.trim() {
                "t0" => cfg.t0 = value,
                "t1" => cfg.t1 = value,
                "dt" => cfg.dt = value,
                "tolerance" => cfg.tolerance = value,
                other => return Err(format!("config line {}: unknown key '{other}'", lineno + 1)),
            }
        }
        Ok(cfg)
    }
}

/// A command failure carrying its exit code.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }

    pub fn check(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

pub fn parse_params(raw: &[String]) -> Result<BTreeMap<String, f64>, Failure> {
    let mut map = BTreeMap::new();
    for item in raw {
        let (name, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--param '{item}': expected name=value")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| Failure::usage(format!("--param '{item}': bad number")))?;
        map.insert(name.to_string(), value);
    }
    Ok(map)
}

pub fn parse_vector(raw: &str, flag: &str) -> Result<Vec<f64>, Failure> {
    raw.split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("{flag}: bad number '{piece}'")))
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(cfg) => cfg,
            Err(message) => {
                eprintln!("error: {message}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };

    let result = match cli.command {
        Command::List => commands::list(),
        Command::Simulate {
            system,
            params,
            potential,
            x0,
            t0,
            t1,
            dt,
            out,
        } => commands::simulate(
            &system,
            &params,
            potential.as_deref(),
            &x0,
            t0.unwrap_or(config.t0),
            t1.unwrap_or(config.t1),
            dt.unwrap_or(config.dt),
            &out,
        ),
        Command::Check {
            system,
            params,
            potential,
            x0,
            t1,
            dt,
            out,
        } => commands::check(
            &system,
            &params,
            potential.as_deref(),
            &x0,
            t1.unwrap_or(config.t1),
            dt.unwrap_or(config.dt),
            out.as_deref(),
        ),
        Command::Compare {
            systems,
            params,
            potential,
            x0_config,
            z0,
            t1,
            dt,
            tolerance,
            out,
        } => commands::compare(
            &systems,
            &params,
            potential.as_deref(),
            &x0_config,
            z0,
            t1.unwrap_or(config.t1),
            dt.unwrap_or(config.dt),
            tolerance.unwrap_or(config.tolerance),
            out.as_deref(),
        ),
        Command::Stability {
            system,
            grid,
            params,
            out,
        } => commands::stability(&system, &grid, &params, out.as_deref()),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
