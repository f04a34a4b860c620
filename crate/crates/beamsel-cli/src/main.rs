use anyhow::Result;
use beamsel_cli::commands::execute;
use beamsel_cli::config::{CommandKind, RunConfig};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

const CONFIG_REFERENCE: &str = "\
CONFIG FILE REFERENCE (TOML; unknown top-level keys are rejected):
  command            run | sweep | bounds | casestudy
  seed               u64 master seed (default 0); all randomness derives from it
  out_dir            output directory, created if missing (default \"results\")
  trials             Monte Carlo trials per point, >= 100 (default 1000)
  workers            worker threads, 0 = runtime default

  [environment]      reward model (linear power units unless noted)
    kind = \"stationary\"   n_beams, big_gain, small_gain, best_index, noise_scale
    kind = \"ranked_ramp\"  n_beams, top, step, noise_scale,
                           [environment.change] rank_lo, rank_hi (1 = best),
                           post_mean, slot_law { kind = fixed|uniform|beta, ... }
    kind = \"blocked_best\" n_beams, gain, interim_frac, blocked_frac,
                           noise_scale, slot_law, horizon (slots)
    slot laws: fixed { slot }; uniform { lo, hi } (slots, inclusive);
               beta { alpha, beta, lo, hi } (shape > 0, window in slots)

  [[policies]]       kind = exhaustive | cbe | sh | kshes
                     kshes extras: k (change rank), r_star_offset,
                     min_round_samples (halving degrades below this)

  budget             slots for `run`
  [sweep]            budgets = [slots, ...]
  [bounds_grid]      distances_m = [m, ...], budgets = [slots, ...], n_beams,
                     small_gain (linear), noise_scale (linear, default 1)
  [casestudy]        n_grid = [powers of two], fractions = [(0,1), ...],
                     optional [casestudy.config] overriding the shipped
                     defaults (channel, frame_slots, interim_frac,
                     blocked_frac, k, min_round_samples, data_gain,
                     noise_scale)

ENVIRONMENT VARIABLE OVERRIDES (lower precedence than flags):
  BEAMSEL_CONFIG, BEAMSEL_SEED, BEAMSEL_OUT, BEAMSEL_WORKERS, BEAMSEL_TRIALS

OUTPUTS: RFC 4180 CSV files (header row, '.' decimal separator, UTF-8) plus
manifest.json recording the resolved config and seed; rerunning with the same
seed reproduces every CSV byte-for-byte regardless of worker count.";

/// Beam-acquisition simulator: policy error sweeps, closed-form bounds and
/// the communication/sensing trade-off case study.
#[derive(Parser, Debug)]
#[command(name = "beamsel", version, after_long_help = CONFIG_REFERENCE)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, env = "BEAMSEL_CONFIG", global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, env = "BEAMSEL_SEED", global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, env = "BEAMSEL_OUT", global = true)]
    out: Option<PathBuf>,

    /// Worker thread count override (0 = runtime default).
    #[arg(long, env = "BEAMSEL_WORKERS", global = true)]
    workers: Option<usize>,

    /// Trials-per-point override.
    #[arg(long, env = "BEAMSEL_TRIALS", global = true)]
    trials: Option<u64>,

    /// Validate the configuration and exit without running.
    #[arg(long, global = true)]
    check: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Single error estimate at one budget.
    Run,
    /// Policy comparison sweep over budgets.
    Sweep,
    /// Closed-form bound curves over a distance x budget grid.
    Bounds,
    /// Communication/sensing trade-off case study.
    Casestudy,
}

impl Command {
    fn kind(self) -> CommandKind {
        match self {
            Command::Run => CommandKind::Run,
            Command::Sweep => CommandKind::Sweep,
            Command::Bounds => CommandKind::Bounds,
            Command::Casestudy => CommandKind::Casestudy,
        }
    }
}

fn error_record(kind: &str, detail: serde_json::Value) -> String {
    serde_json::json!({ "error": { "kind": kind, "detail": detail } }).to_string()
}

fn run(cli: Cli) -> Result<ExitCode> {
    let Some(path) = cli.config.clone() else {
        eprintln!(
            "{}",
            error_record("usage", serde_json::json!("--config <path> is required"))
        );
        return Ok(ExitCode::from(2));
    };
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!(
                "{}",
                error_record(
                    "io",
                    serde_json::json!(format!("reading {}: {e}", path.display()))
                )
            );
            return Ok(ExitCode::from(2));
        }
    };
    let mut cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(violations) => {
            eprintln!(
                "{}",
                error_record("invalid_config", serde_json::json!(violations))
            );
            return Ok(ExitCode::from(2));
        }
    };
    // Precedence: flag (or env var, handled by clap) over file.
    if let Some(cmd) = cli.command {
        cfg.command = cmd.kind();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    let violations = cfg.validate();
    if !violations.is_empty() {
        eprintln!(
            "{}",
            error_record("invalid_config", serde_json::json!(violations))
        );
        return Ok(ExitCode::from(2));
    }
    if cli.check {
        println!("configuration ok: command = {}", cfg.command.name());
        return Ok(ExitCode::SUCCESS);
    }
    match execute(&cfg) {
        Ok(manifest) => {
            for artifact in &manifest.artifacts {
                println!("wrote {} ({} rows)", artifact.path.display(), artifact.rows);
            }
            println!("wrote {}", cfg.out_dir.join("manifest.json").display());
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!(
                "{}",
                error_record("execution", serde_json::json!(format!("{e:#}")))
            );
            Ok(ExitCode::FAILURE)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!(
                "{}",
                error_record("internal", serde_json::json!(format!("{e:#}")))
            );
            ExitCode::FAILURE
        }
    }
}
