//! Beam-selection policies: exhaustive search, grouped concurrent
//! exploration, sequential halving, and sequential halving truncated to a
//! known change rank followed by equal allocation.
//!
//! All policies consume a realized [`Environment`] and a slot budget `T`, and
//! sample in a round-robin order so that global time advances across beams;
//! abrupt changes therefore land mid-round exactly as they would on air.
//! Integer divisions floor and the remainder slots are discarded, keeping
//! per-round allocations uniform. Ranking ties break toward the lower beam
//! index.

use crate::detection::{group_params, GroupHypothesisParams};
use crate::env::{argmax, Environment};
use crate::error::{Error, Result};
use crate::grouping::{decode, GroupDesign};
use crate::rng::SimRng;
use serde::{Deserialize, Serialize};

/// Truncated-halving knobs beyond the change rank `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KshesOptions {
    pub k: usize,
    /// Additive offset on the truncation depth `r*` (the analysis admits
    /// off-by-one readings); clamped to the valid range.
    #[serde(default)]
    pub r_star_offset: i32,
    /// Halving rounds run only when they can give each surviving beam at
    /// least this many samples; otherwise the policy degrades to its
    /// equal-allocation phase over the current survivors.
    #[serde(default = "KshesOptions::default_min_round_samples")]
    pub min_round_samples: u64,
}

impl KshesOptions {
    fn default_min_round_samples() -> u64 {
        1
    }

    pub fn new(k: usize) -> Self {
        Self {
            k,
            r_star_offset: 0,
            min_round_samples: 1,
        }
    }
}

/// Policy selector used by the experiment harness and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Exhaustive,
    Cbe,
    Sh,
    Kshes {
        k: usize,
        #[serde(default)]
        r_star_offset: i32,
        #[serde(default = "KshesOptions::default_min_round_samples")]
        min_round_samples: u64,
    },
}

impl Policy {
    pub fn kshes(k: usize) -> Self {
        Policy::Kshes {
            k,
            r_star_offset: 0,
            min_round_samples: 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Exhaustive => "exhaustive",
            Policy::Cbe => "cbe",
            Policy::Sh => "sh",
            Policy::Kshes { .. } => "kshes",
        }
    }

    pub fn run(&self, env: &Environment, budget: u64, rng: &mut SimRng) -> Result<PolicyOutcome> {
        match *self {
            Policy::Exhaustive => run_exhaustive(env, budget, rng),
            Policy::Cbe => run_cbe(env, budget, rng),
            Policy::Sh => run_sh(env, budget, rng),
            Policy::Kshes {
                k,
                r_star_offset,
                min_round_samples,
            } => run_kshes_opts(
                env,
                budget,
                &KshesOptions {
                    k,
                    r_star_offset,
                    min_round_samples,
                },
                rng,
            ),
        }
    }
}

/// One elimination (or allocation) round of a policy's audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round_index: usize,
    /// Beams entering the round, ascending.
    pub surviving: Vec<usize>,
    pub samples_per_beam: u64,
    /// Per-beam reward sums over this round, aligned with `surviving`.
    pub sums: Vec<f64>,
}

/// Audit record of one group test in grouped exploration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupTestRecord {
    pub group: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub detected: bool,
}

/// A policy's selection plus its audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub selected_beam: usize,
    pub samples_used: u64,
    pub rounds: Vec<RoundRecord>,
    /// Group verdicts (grouped exploration only).
    pub group_tests: Vec<GroupTestRecord>,
    /// Set when a stationary-case policy was run on a changing environment.
    pub flagged_nonstationary: bool,
}

impl PolicyOutcome {
    /// Detection verdicts, when the policy was grouped exploration.
    pub fn verdicts(&self) -> Option<Vec<bool>> {
        if self.group_tests.is_empty() {
            None
        } else {
            Some(self.group_tests.iter().map(|g| g.detected).collect())
        }
    }
}

fn log2_beams(n: usize) -> Result<usize> {
    if crate::grouping::is_valid_beam_count(n) {
        Ok(n.trailing_zeros() as usize)
    } else {
        Err(Error::NotPowerOfTwo(n))
    }
}

/// Samples every beam in `beams` `reps` times, round-robin (beam-major inner
/// loop), starting at global slot `*t`. Returns per-beam reward sums.
fn equal_allocation(
    env: &Environment,
    beams: &[usize],
    reps: u64,
    t: &mut u64,
    rng: &mut SimRng,
) -> Vec<f64> {
    let mut sums = vec![0.0; beams.len()];
    for _ in 0..reps {
        for (slot, &beam) in beams.iter().enumerate() {
            sums[slot] += env.sample_beam(beam, *t, rng);
            *t += 1;
        }
    }
    sums
}

/// Keeps the `keep` highest-sum beams; ties prefer the lower beam index.
/// Returns the kept beams in ascending index order.
fn top_beams(beams: &[usize], sums: &[f64], keep: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..beams.len()).collect();
    order.sort_unstable_by(|&p, &q| {
        sums[q]
            .total_cmp(&sums[p])
            .then_with(|| beams[p].cmp(&beams[q]))
    });
    let mut kept: Vec<usize> = order[..keep].iter().map(|&p| beams[p]).collect();
    kept.sort_unstable();
    kept
}

/// Exhaustive search: every beam sampled `floor(T / N)` times round-robin;
/// selects the argmax of the reward sums.
pub fn run_exhaustive(env: &Environment, budget: u64, rng: &mut SimRng) -> Result<PolicyOutcome> {
    let n = env.n_beams();
    let reps = budget / n as u64;
    if reps == 0 {
        return Err(Error::InsufficientBudget {
            budget,
            required: n as u64,
        });
    }
    let beams: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    let sums = equal_allocation(env, &beams, reps, &mut t, rng);
    let selected = beams[argmax(&sums)];
    Ok(PolicyOutcome {
        selected_beam: selected,
        samples_used: t,
        rounds: vec![RoundRecord {
            round_index: 1,
            surviving: beams,
            samples_per_beam: reps,
            sums,
        }],
        group_tests: Vec::new(),
        flagged_nonstationary: false,
    })
}

/// Grouped concurrent exploration: the budget splits evenly over the
/// `log2(N)` beam groups, each group is energy-tested for the user, and the
/// detection pattern decodes to a beam index.
///
/// Requires a two-level (stationary) gain profile; running on a changing
/// environment is permitted for comparison studies but flagged in the
/// outcome.
pub fn run_cbe(env: &Environment, budget: u64, rng: &mut SimRng) -> Result<PolicyOutcome> {
    let n = env.n_beams();
    let design = GroupDesign::build(n)?;
    let d = design.n_groups() as u64;
    let t_group = budget / d;
    if t_group == 0 {
        return Err(Error::InsufficientBudget {
            budget,
            required: d,
        });
    }
    let gains = env.spec().two_level()?;
    let params: GroupHypothesisParams = group_params(
        n,
        gains.big_gain,
        gains.small_gain,
        env.noise_scale(),
        t_group,
    )?;
    let mut t = 0u64;
    let mut verdicts = Vec::with_capacity(d as usize);
    let mut group_tests = Vec::with_capacity(d as usize);
    for k in 0..design.n_groups() {
        let group = design.group(k);
        let mut statistic = 0.0;
        for _ in 0..t_group {
            let y = env.sample_group(group, t, rng)?;
            statistic += y * y;
            t += 1;
        }
        let detected = statistic >= params.gamma;
        verdicts.push(detected);
        group_tests.push(GroupTestRecord {
            group: k,
            statistic,
            threshold: params.gamma,
            detected,
        });
    }
    Ok(PolicyOutcome {
        selected_beam: decode(&verdicts),
        samples_used: t,
        rounds: Vec::new(),
        group_tests,
        flagged_nonstationary: env.spec().change().is_some(),
    })
}

/// Sequential halving: `log2(N)` rounds, each sampling the survivors
/// `floor(T / (|S_r| log2 N))` times round-robin and keeping the top half by
/// per-round reward sum.
pub fn run_sh(env: &Environment, budget: u64, rng: &mut SimRng) -> Result<PolicyOutcome> {
    let n = env.n_beams();
    let d = log2_beams(n)?;
    if budget / (n as u64 * d as u64) == 0 {
        return Err(Error::InsufficientBudget {
            budget,
            required: n as u64 * d as u64,
        });
    }
    let mut surviving: Vec<usize> = (0..n).collect();
    let mut rounds = Vec::with_capacity(d);
    let mut t = 0u64;
    for r in 1..=d {
        let reps = budget / (surviving.len() as u64 * d as u64);
        let sums = equal_allocation(env, &surviving, reps, &mut t, rng);
        let keep = surviving.len() / 2;
        let next = top_beams(&surviving, &sums, keep.max(1));
        rounds.push(RoundRecord {
            round_index: r,
            surviving,
            samples_per_beam: reps,
            sums,
        });
        surviving = next;
    }
    debug_assert_eq!(surviving.len(), 1);
    Ok(PolicyOutcome {
        selected_beam: surviving[0],
        samples_used: t,
        rounds,
        group_tests: Vec::new(),
        flagged_nonstationary: false,
    })
}

/// Halving rounds budgeted for `K`: stops eliminating once at most `2K`
/// beams remain, i.e. after `r* = floor(log2(N / 2K))` rounds.
pub fn kshes_r_star(n_beams: usize, k: usize) -> usize {
    let mut r = 0usize;
    while (n_beams >> (r + 1)) >= 2 * k {
        r += 1;
    }
    r
}

/// Sequential halving truncated at `r*`, then exhaustive equal allocation.
///
/// Runs `r* = floor(log2(N / 2K))` halving rounds (so at least `2K` beams
/// survive), then spends every remaining slot sampling the survivors
/// round-robin; the selection is the argmax of the post-`r*` sums only.
/// `K = N/2` gives `r* = 0`, which reduces decision-for-decision to
/// exhaustive search.
///
/// When the budget cannot fund even one sample per beam in a halving round
/// (`T < N log2 N`), the remaining halving rounds are skipped and the policy
/// degrades toward pure equal allocation over the current survivors; the
/// final phase still requires one sample per survivor.
pub fn run_kshes(
    env: &Environment,
    budget: u64,
    k: usize,
    rng: &mut SimRng,
) -> Result<PolicyOutcome> {
    run_kshes_opts(env, budget, &KshesOptions::new(k), rng)
}

/// [`run_kshes`] with explicit truncation and budget-degradation knobs.
pub fn run_kshes_opts(
    env: &Environment,
    budget: u64,
    opts: &KshesOptions,
    rng: &mut SimRng,
) -> Result<PolicyOutcome> {
    let n = env.n_beams();
    let d = log2_beams(n)?;
    let k = opts.k;
    if k == 0 || 2 * k > n {
        return Err(Error::KOutOfRange { k, max: n / 2 });
    }
    let r_star =
        (kshes_r_star(n, k) as i64 + opts.r_star_offset as i64).clamp(0, d as i64 - 1) as usize;

    let mut surviving: Vec<usize> = (0..n).collect();
    let mut rounds = Vec::new();
    let mut t = 0u64;
    for r in 1..=r_star {
        let reps = budget / (surviving.len() as u64 * d as u64);
        if reps < opts.min_round_samples.max(1) {
            break; // budget-starved: stop eliminating, fall through to equal allocation
        }
        let sums = equal_allocation(env, &surviving, reps, &mut t, rng);
        let keep = surviving.len() / 2;
        let next = top_beams(&surviving, &sums, keep.max(1));
        rounds.push(RoundRecord {
            round_index: r,
            surviving,
            samples_per_beam: reps,
            sums,
        });
        surviving = next;
    }

    let remaining = budget - t;
    let reps = remaining / surviving.len() as u64;
    if reps == 0 {
        return Err(Error::InsufficientBudget {
            budget,
            required: t + surviving.len() as u64,
        });
    }
    let sums = equal_allocation(env, &surviving, reps, &mut t, rng);
    let selected = surviving[argmax(&sums)];
    rounds.push(RoundRecord {
        round_index: rounds.len() + 1,
        surviving,
        samples_per_beam: reps,
        sums,
    });
    Ok(PolicyOutcome {
        selected_beam: selected,
        samples_used: t,
        rounds,
        group_tests: Vec::new(),
        flagged_nonstationary: false,
    })
}
