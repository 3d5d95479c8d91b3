//! Seeded Monte Carlo comparison of the allocation schemes.
//!
//! Channels follow a pathloss-plus-Rayleigh model: both link gains of user
//! `i` are `L0 · ρ_i² · D_i^{-α}` with `L0` the reference attenuation at one
//! meter and `ρ_i² ~ Exp(1)` the block fade (one fade per user per trial,
//! shared by both link directions, so reciprocity holds whenever the two
//! pathloss exponents agree). Fades come from one counter-based stream per
//! `(seed, trial, user)`, which makes every trial reproducible in isolation
//! and the whole run schedule-independent.

use crate::common::solve_common;
use crate::model::{effective_snr, evaluate_rates, harvested_energy};
use crate::sum::{solve_conventional_tdma, solve_sum, SumSolution};
use crate::{Allocation, Channels, Controls, Error, Instance, Params, Report, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Short-term fading model for the channel draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    None,
    Rayleigh,
}

impl std::str::FromStr for Fading {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Fading::None),
            "rayleigh" => Ok(Fading::Rayleigh),
            other => Err(Error::invalid(
                "fading",
                format!("unknown model {other:?}; expected \"none\" or \"rayleigh\""),
            )),
        }
    }
}

/// Scenario description for a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub user_distances: Vec<f64>,
    pub pathloss_exponent_dl: f64,
    pub pathloss_exponent_ul: f64,
    /// Average attenuation at the one-meter reference distance, in dB.
    pub reference_loss_db: f64,
    pub fading: Fading,
    pub physical: Params,
    pub trials: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        if self.user_distances.is_empty() {
            return Err(Error::invalid("user_distances", "need at least one user"));
        }
        if self.user_distances.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::invalid("user_distances", "distances must be > 0"));
        }
        if !(self.pathloss_exponent_dl >= 2.0) || !(self.pathloss_exponent_ul >= 2.0) {
            return Err(Error::invalid(
                "pathloss_exponent",
                "exponents must be >= 2",
            ));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "need at least one trial"));
        }
        Ok(())
    }

    pub fn user_count(&self) -> usize {
        self.user_distances.len()
    }
}

/// Allocation schemes the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scheme {
    SumOpt,
    CommonOpt,
    Eta,
    ConventionalTdma,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::SumOpt,
        Scheme::CommonOpt,
        Scheme::Eta,
        Scheme::ConventionalTdma,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::SumOpt => "sum_opt",
            Scheme::CommonOpt => "common_opt",
            Scheme::Eta => "eta",
            Scheme::ConventionalTdma => "conventional_tdma",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum_opt" => Ok(Scheme::SumOpt),
            "common_opt" => Ok(Scheme::CommonOpt),
            "eta" => Ok(Scheme::Eta),
            "conventional_tdma" => Ok(Scheme::ConventionalTdma),
            other => Err(Error::invalid(
                "schemes",
                format!("unknown scheme {other:?}"),
            )),
        }
    }
}

/// One trial's channel draw and the per-scheme outcomes.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub trial: usize,
    pub channel: Channels,
    pub solutions: Vec<(Scheme, Report)>,
}

/// Per-scheme averages over the usable trials.
#[derive(Debug, Clone)]
pub struct SchemeStats {
    pub scheme: Scheme,
    pub mean_per_user_rate: Vec<f64>,
    pub mean_sum_rate: f64,
    pub mean_min_rate: f64,
    /// Mean of `τ_K/τ_1` over trials (last over first user slot); `None`
    /// for single-user scenarios or slot-free baselines.
    pub mean_slot_ratio_last_first: Option<f64>,
}

/// Aggregate outcome of a comparison run; carries the seed so any figure can
/// be regenerated exactly.
#[derive(Debug, Clone)]
pub struct ComparisonResult {
    pub seed: u64,
    pub trials_requested: usize,
    pub trials_used: usize,
    pub failed_trials: usize,
    pub stats: Vec<SchemeStats>,
}

fn fade_rng(seed: u64, trial: u64, user: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&user.to_le_bytes());
    key[24..32].copy_from_slice(b"wpcnfade");
    ChaCha8Rng::from_seed(key)
}

/// Unit-mean exponential block fade for one user of one trial.
fn block_fade(seed: u64, trial: u64, user: u64) -> f64 {
    let mut rng = fade_rng(seed, trial, user);
    let u: f64 = rng.gen(); // [0, 1)
    -(1.0 - u).ln()
}

/// Draws the per-user link gains of one trial.
pub fn draw_channels(config: &ScenarioConfig, trial_index: usize) -> Result<Channels> {
    config.validate()?;
    let reference = 10f64.powf(-config.reference_loss_db / 10.0);
    let users = config.user_count();
    let mut dl = Vec::with_capacity(users);
    let mut ul = Vec::with_capacity(users);
    for (i, &d) in config.user_distances.iter().enumerate() {
        let fade = match config.fading {
            Fading::None => 1.0,
            Fading::Rayleigh => block_fade(config.seed, trial_index as u64, i as u64),
        };
        dl.push(reference * fade * d.powf(-config.pathloss_exponent_dl));
        ul.push(reference * fade * d.powf(-config.pathloss_exponent_ul));
    }
    let mut channels = Channels::new(dl, ul)?;
    channels.distances = Some(config.user_distances.clone());
    Ok(channels)
}

/// Effective SNRs of a conventional TDMA uplink given the same average
/// energy budget the harvest-then-transmit reference delivered: every user
/// spends `Ē = (1/K)·Σ E_i` per block, where `E_i` is harvested during the
/// reference's optimal downlink slot.
pub fn conventional_tdma_instance(
    config: &ScenarioConfig,
    channels: &Channels,
    wpcn_reference: &SumSolution<f64>,
) -> Result<Instance> {
    config.validate()?;
    let energies = harvested_energy(&config.physical, channels, wpcn_reference.allocation.tau0())?;
    let users = energies.len();
    let mean_energy = energies.iter().sum::<f64>() / users as f64;
    let denom = config.physical.snr_gap * config.physical.noise_power;
    let gamma = channels
        .ul_gains
        .iter()
        .map(|&g| g * mean_energy / denom)
        .collect();
    Instance::from_gamma(gamma)
}

/// Runs one trial: draws channels and solves every requested scheme.
pub fn run_trial(
    config: &ScenarioConfig,
    schemes: &[Scheme],
    controls: &Controls,
    trial: usize,
) -> Result<TrialResult> {
    let channel = draw_channels(config, trial)?;
    let instance = effective_snr(&config.physical, &channel)?;
    let needs_sum = schemes
        .iter()
        .any(|s| matches!(s, Scheme::SumOpt | Scheme::ConventionalTdma));
    let sum_sol = if needs_sum {
        Some(solve_sum(&instance, controls)?)
    } else {
        None
    };
    let mut solutions = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let report = match scheme {
            Scheme::SumOpt => sum_sol.as_ref().unwrap().report.clone(),
            Scheme::CommonOpt => solve_common(&instance, controls, None)?.report,
            Scheme::Eta => {
                evaluate_rates(&instance, &Allocation::equal_split(instance.user_count())?)?
            }
            Scheme::ConventionalTdma => {
                let tdma =
                    conventional_tdma_instance(&config, &channel, sum_sol.as_ref().unwrap())?;
                solve_conventional_tdma(&tdma)?.report
            }
        };
        solutions.push((scheme, report));
    }
    Ok(TrialResult {
        trial,
        channel,
        solutions,
    })
}

/// Runs the configured number of trials and averages each scheme's rates.
/// Failed trials (degenerate draws) are excluded and counted. Trials execute
/// in parallel but are reduced in trial order, so results are bit-identical
/// across schedules.
pub fn run_comparison(
    config: &ScenarioConfig,
    schemes: &[Scheme],
    controls: &Controls,
) -> Result<ComparisonResult> {
    config.validate()?;
    if schemes.is_empty() {
        return Err(Error::invalid("schemes", "need at least one scheme"));
    }
    let outcomes: Vec<Result<TrialResult>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, schemes, controls, trial))
        .collect();

    let users = config.user_count();
    let mut used = 0usize;
    let mut failed = 0usize;
    let mut rate_sums = vec![vec![0.0f64; users]; schemes.len()];
    let mut sum_sums = vec![0.0f64; schemes.len()];
    let mut min_sums = vec![0.0f64; schemes.len()];
    let mut ratio_sums = vec![0.0f64; schemes.len()];
    let mut ratio_counts = vec![0usize; schemes.len()];
    for outcome in outcomes {
        let trial = match outcome {
            Ok(t) => t,
            Err(_) => {
                failed += 1;
                continue;
            }
        };
        used += 1;
        for (k, (_, report)) in trial.solutions.iter().enumerate() {
            for (j, &r) in report.per_user_rates.iter().enumerate() {
                rate_sums[k][j] += r;
            }
            sum_sums[k] += report.sum_rate;
            min_sums[k] += report.min_rate;
            if users >= 2 {
                let first = report.allocation.slot(1);
                let last = report.allocation.slot(users);
                if first > 0.0 {
                    let ratio = last / first;
                    if ratio.is_finite() {
                        ratio_sums[k] += ratio;
                        ratio_counts[k] += 1;
                    }
                }
            }
        }
    }
    if used == 0 {
        return Err(Error::Degenerate {
            message: format!("all {} trials failed", config.trials),
        });
    }
    let n = used as f64;
    let stats = schemes
        .iter()
        .enumerate()
        .map(|(k, &scheme)| SchemeStats {
            scheme,
            mean_per_user_rate: rate_sums[k].iter().map(|s| s / n).collect(),
            mean_sum_rate: sum_sums[k] / n,
            mean_min_rate: min_sums[k] / n,
            mean_slot_ratio_last_first: if ratio_counts[k] > 0 {
                Some(ratio_sums[k] / ratio_counts[k] as f64)
            } else {
                None
            },
        })
        .collect();
    Ok(ComparisonResult {
        seed: config.seed,
        trials_requested: config.trials,
        trials_used: used,
        failed_trials: failed,
        stats,
    })
}

/// Re-runs the comparison for each pathloss exponent (applied to both link
/// directions) with shared fade streams, so the per-α results are paired.
pub fn sweep_pathloss(
    config: &ScenarioConfig,
    alphas: &[f64],
    schemes: &[Scheme],
    controls: &Controls,
) -> Result<Vec<(f64, ComparisonResult)>> {
    if alphas.is_empty() {
        return Err(Error::invalid("alphas", "need at least one exponent"));
    }
    let mut out = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let mut cfg = config.clone();
        cfg.pathloss_exponent_dl = alpha;
        cfg.pathloss_exponent_ul = alpha;
        out.push((alpha, run_comparison(&cfg, schemes, controls)?));
    }
    Ok(out)
}

/// Re-runs the comparison for each user count, spacing users evenly out to
/// the base scenario's farthest distance: `D_i = (D_max/K)·i`.
pub fn sweep_users(
    base_config: &ScenarioConfig,
    k_values: &[usize],
    schemes: &[Scheme],
    controls: &Controls,
) -> Result<Vec<(usize, ComparisonResult)>> {
    base_config.validate()?;
    if k_values.is_empty() || k_values.iter().any(|&k| k == 0) {
        return Err(Error::invalid("k_values", "user counts must be >= 1"));
    }
    let d_max = base_config
        .user_distances
        .iter()
        .cloned()
        .fold(f64::NAN, f64::max);
    let mut out = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let mut cfg = base_config.clone();
        cfg.user_distances = (1..=k).map(|i| d_max * i as f64 / k as f64).collect();
        out.push((k, run_comparison(&cfg, schemes, controls)?));
    }
    Ok(out)
}
