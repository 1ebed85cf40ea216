use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use varlanczos_cli::config::{Method, RunConfig};
use varlanczos_cli::oracle::{run_oracle_suite_with, OracleOptions, DEFAULT_SEED};
use varlanczos_cli::presets::{self, preset};
use varlanczos_cli::{run_comparison, run_propagation};

#[derive(Parser)]
#[command(
    name = "varlanczos",
    version,
    about = "Variational Lanczos propagation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one trajectory and write its series.
    Propagate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run two configurations side by side and pair their error curves.
    Compare {
        /// Preset whose own baseline serves as run b.
        #[arg(long, conflicts_with_all = ["a", "b"])]
        preset: Option<String>,
        /// Run a: preset name or JSON config file.
        #[arg(long, requires = "b")]
        a: Option<String>,
        /// Run b: preset name or JSON config file.
        #[arg(long, requires = "a")]
        b: Option<String>,
        /// Directory for both runs and comparison.json.
        #[arg(long)]
        out: PathBuf,
        /// Applied to both runs.
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the dense-oracle property batteries.
    Oracle {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, hide = true)]
        corrupt_hermitian: bool,
    },
    /// Named parameter sets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
}

#[derive(Args)]
struct Source {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from a named preset (applied before the config file).
    #[arg(long)]
    preset: Option<String>,
}

/// One flag per config key.
#[derive(Args, Serialize, Default)]
struct Overrides {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<Method>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    nx: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    ny: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    x_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    y_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    y_max: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_x: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_y: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mass: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    y0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    px0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    py0: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_x: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_y: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t_final: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Oldest step whose states are reused.
    #[arg(short = 'K', long = "max-age")]
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    max_age: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    power_cap: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    auto_shrink: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cheb_terms: Option<usize>,
    #[arg(long = "cheb-dT")]
    #[serde(rename = "cheb_dT", skip_serializing_if = "Option::is_none")]
    cheb_dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    verbose: Option<bool>,
}

impl Overrides {
    fn apply(&self, cfg: &RunConfig) -> Result<RunConfig> {
        cfg.merge_json(&serde_json::to_value(self)?)
    }
}

fn resolve(source: &Source) -> Result<RunConfig> {
    let mut cfg = match &source.preset {
        Some(name) => preset(name)?.config,
        None => RunConfig::default(),
    };
    if let Some(path) = &source.config {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let overlay: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg = cfg.merge_json(&overlay)?;
    }
    Ok(cfg)
}

/// Preset name or path to a JSON config file.
fn named_or_file(source: &str) -> Result<RunConfig> {
    match preset(source) {
        Ok(p) => Ok(p.config),
        Err(_) => RunConfig::load(source.as_ref()),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Propagate { source, overrides } => {
            let cfg = overrides.apply(&resolve(&source)?)?;
            let record = run_propagation(&cfg)?;
            println!(
                "steps {}  matvecs {}  replacements {}  final error {}",
                record.steps_done,
                record.matvecs_total,
                record.replacements,
                record
                    .final_error()
                    .map_or_else(|| "-".to_string(), |e| format!("{e:.3e}"))
            );
            Ok(record.ledger.reconciles())
        }
        Command::Compare {
            preset: name,
            a,
            b,
            out,
            overrides,
        } => {
            let (cfg_a, cfg_b) = match (name, a, b) {
                (Some(name), _, _) => {
                    let p = preset(&name)?;
                    let baseline = p
                        .baseline
                        .with_context(|| format!("preset {name} has no baseline"))?;
                    (p.config, baseline)
                }
                (None, Some(a), Some(b)) => (named_or_file(&a)?, named_or_file(&b)?),
                _ => anyhow::bail!("give --preset or both --a and --b"),
            };
            let report = run_comparison(
                &overrides.apply(&cfg_a)?,
                &overrides.apply(&cfg_b)?,
                Some(&out),
            )?;
            for ((t, r), (ea, eb)) in report
                .checkpoints
                .iter()
                .zip(&report.ratio)
                .zip(report.err_a.iter().zip(&report.err_b))
            {
                println!("t = {t:8.2}  err_a {ea:.3e}  err_b {eb:.3e}  ratio {r:.3e}");
            }
            println!(
                "log-log slopes: a {}  b {}",
                fmt_opt(report.slope_a),
                fmt_opt(report.slope_b)
            );
            Ok(true)
        }
        Command::Oracle {
            seed,
            out,
            corrupt_hermitian,
        } => {
            let report = run_oracle_suite_with(seed, OracleOptions { corrupt_hermitian });
            let text = serde_json::to_string_pretty(&report)? + "\n";
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            for e in report.failures() {
                eprintln!(
                    "FAILED {}: residual {:.3e} > {:.1e}",
                    e.name, e.residual, e.tolerance
                );
            }
            Ok(report.passed)
        }
        Command::Presets {
            action: PresetAction::List,
        } => {
            for p in presets::presets() {
                let long = if presets::is_long(p.name) {
                    "  [long]"
                } else {
                    ""
                };
                println!("{:<12} {}{long}", p.name, p.description);
            }
            Ok(true)
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |s| format!("{s:.3}"))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
