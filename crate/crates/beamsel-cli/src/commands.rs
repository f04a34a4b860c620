//! Command execution: dispatch a validated config, write CSV artifacts and
//! the reproducibility manifest.

use crate::config::{CommandKind, RunConfig};
use anyhow::{bail, Context, Result};
use beamsel_core::bounds::{bound_cbe, bound_exhaustive, bound_karnin};
use beamsel_core::env::{channel_to_means, directivity_factor, CaseStudyChannel};
use beamsel_core::experiments::{
    csv_bytes, estimate_errors_paired, optimize_case_study, run_comparison_sweep, CaseStudyConfig,
    ComparisonPlan, ComparisonRow,
};
use beamsel_core::rng::StreamFactory;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

/// One CSV row of the `bounds` command output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub config_hash: String,
    pub bound_name: String,
    pub grid_point: String,
    pub value: f64,
    pub vacuous: bool,
}

/// Case-study optimum row: the best second axis value per first axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumRow {
    pub axis: String,
    pub at: f64,
    pub best: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactRecord {
    pub path: PathBuf,
    pub rows: usize,
    pub columns: Vec<String>,
}

/// Everything `execute` produced, echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub trials: u64,
    pub workers: usize,
    /// Seconds since the Unix epoch; the only non-reproducible field.
    pub created_unix_s: u64,
    pub config: RunConfig,
    pub artifacts: Vec<ArtifactRecord>,
}

/// FNV-1a over the canonical config text: a stable identifier tying every
/// CSV row back to the exact configuration that produced it.
pub fn config_hash(cfg: &RunConfig) -> String {
    let text = cfg.serialize();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

fn write_named_csv<T: Serialize>(
    dir: &Path,
    name: &str,
    rows: &[T],
    artifacts: &mut Vec<ArtifactRecord>,
) -> Result<()> {
    let path = dir.join(name);
    let bytes = csv_bytes(rows);
    let columns = match bytes.split(|&b| b == b'\n').next() {
        Some(header) if !header.is_empty() => String::from_utf8_lossy(header)
            .trim_end_matches('\r')
            .split(',')
            .map(str::to_string)
            .collect(),
        _ => Vec::new(),
    };
    fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
    artifacts.push(ArtifactRecord {
        path,
        rows: rows.len(),
        columns,
    });
    Ok(())
}

fn bounds_rows(cfg: &RunConfig) -> Result<Vec<BoundsRow>> {
    let grid = cfg.bounds_grid.as_ref().expect("validated");
    let hash = config_hash(cfg);
    let mut rows = Vec::new();
    for &distance in &grid.distances_m {
        let channel = CaseStudyChannel {
            distance_m: distance,
            ..CaseStudyChannel::default_100m()
        };
        let snr = channel.ref_snr()?;
        let big = snr * directivity_factor(grid.n_beams);
        for &t in &grid.budgets {
            let point = format!("d={distance}m,T={t}");
            let spec = channel_to_means(&channel, grid.n_beams)?;
            let gp = beamsel_core::GapProfile::from_spec(&spec);
            let ex = bound_exhaustive(t, grid.n_beams, gp.delta_min, grid.noise_scale, gp.mu_max);
            rows.push(BoundsRow {
                config_hash: hash.clone(),
                bound_name: "exhaustive".into(),
                grid_point: point.clone(),
                value: ex.value,
                vacuous: ex.vacuous,
            });
            let ka = bound_karnin(t, grid.n_beams, big, grid.small_gain);
            rows.push(BoundsRow {
                config_hash: hash.clone(),
                bound_name: "karnin_sh".into(),
                grid_point: point.clone(),
                value: ka.value,
                vacuous: ka.vacuous,
            });
            let cb = bound_cbe(t, grid.n_beams, big, grid.small_gain, grid.noise_scale)?;
            rows.push(BoundsRow {
                config_hash: hash.clone(),
                bound_name: "cbe".into(),
                grid_point: point,
                value: cb.bound.value,
                vacuous: cb.bound.vacuous,
            });
        }
    }
    Ok(rows)
}

/// Executes a validated config; returns the manifest (also written to disk).
pub fn execute(cfg: &RunConfig) -> Result<Manifest> {
    if cfg.workers > 0 {
        // Ignore the error if a global pool already exists (repeat calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global();
    }
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating output dir {}", cfg.out_dir.display()))?;
    let factory = StreamFactory::new(cfg.seed);
    let mut artifacts = Vec::new();

    match cfg.command {
        CommandKind::Run => {
            let template = cfg.environment.clone().expect("validated");
            let budget = cfg.budget.expect("validated");
            let paired = estimate_errors_paired(
                &cfg.policies,
                &template,
                budget,
                cfg.trials,
                &factory,
                0,
            )?;
            let spec = template
                .make_spec(&mut factory.lane(u64::MAX, 0, beamsel_core::rng::LANE_ENV))?;
            let rows: Vec<ComparisonRow> = cfg
                .policies
                .iter()
                .zip(&paired.estimates)
                .map(|(p, e)| ComparisonRow {
                    policy: p.name().to_string(),
                    n_beams: spec.n_beams(),
                    t_budget: budget,
                    error: e.rate,
                    ci_lo: e.ci_lo,
                    ci_hi: e.ci_hi,
                    trials: e.trials,
                    seed: cfg.seed,
                })
                .collect();
            write_named_csv(&cfg.out_dir, "run.csv", &rows, &mut artifacts)?;
        }
        CommandKind::Sweep => {
            let plan = ComparisonPlan {
                template: cfg.environment.clone().expect("validated"),
                policies: cfg.policies.clone(),
                budgets: cfg.sweep.as_ref().expect("validated").budgets.clone(),
                trials: cfg.trials,
            };
            let rows = run_comparison_sweep(&plan, &factory)?;
            write_named_csv(&cfg.out_dir, "sweep.csv", &rows, &mut artifacts)?;
        }
        CommandKind::Bounds => {
            let rows = bounds_rows(cfg)?;
            write_named_csv(&cfg.out_dir, "bounds.csv", &rows, &mut artifacts)?;
        }
        CommandKind::Casestudy => {
            let block = cfg.casestudy.as_ref().expect("validated");
            let cs_cfg = block.config.clone().unwrap_or_else(CaseStudyConfig::default);
            let table =
                optimize_case_study(&cs_cfg, &block.n_grid, &block.fractions, cfg.trials, &factory)?;
            write_named_csv(&cfg.out_dir, "casestudy_points.csv", &table.points, &mut artifacts)?;
            let mut optima: Vec<OptimumRow> = table
                .best_n_per_fraction
                .iter()
                .map(|&(f, n)| OptimumRow {
                    axis: "best_n_for_fraction".into(),
                    at: f,
                    best: n as f64,
                })
                .collect();
            optima.extend(table.best_fraction_per_n.iter().map(|&(n, f)| OptimumRow {
                axis: "best_fraction_for_n".into(),
                at: n as f64,
                best: f,
            }));
            write_named_csv(&cfg.out_dir, "casestudy_optima.csv", &optima, &mut artifacts)?;
        }
    }

    let manifest = Manifest {
        tool: "beamsel".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cfg.command.name().into(),
        seed: cfg.seed,
        trials: cfg.trials,
        workers: cfg.workers,
        created_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config: cfg.clone(),
        artifacts,
    };
    let manifest_path = cfg.out_dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest)?)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    if manifest.artifacts.is_empty() {
        bail!("no artifacts produced");
    }
    Ok(manifest)
}
