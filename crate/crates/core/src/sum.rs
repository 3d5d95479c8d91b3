//! Closed-form sum-throughput maximization, plus the conventional-TDMA
//! baseline used for comparisons.
//!
//! With `A = Σγ_i` and `z*` the root of `z·ln z − z + 1 = A` above 1, the
//! sum-optimal block split is
//!
//! ```text
//! tau_0* = (z* − 1)/(A + z* − 1),    tau_i* = γ_i/(A + z* − 1)
//! ```
//!
//! which uses the whole block and gives every active user the same operating
//! SNR `γ_i·tau_0*/tau_i* = z* − 1`.

use crate::model::{evaluate_rates, rate_of, NetworkInstance, ThroughputReport, TimeAllocation};
use crate::num::Real;
use crate::rootfind::{solve_f_eq_a, SolverControls};
use crate::{Error, Result};

/// Solution of a sum-throughput maximization.
#[derive(Debug, Clone)]
pub struct SumSolution<F> {
    pub allocation: TimeAllocation<F>,
    /// Root of the downlink-fraction equation; greater than 1 for the
    /// harvest-then-transmit solve, exactly 1 for the no-downlink TDMA
    /// baseline (where the same formulas give `tau_0 = 0`).
    pub z_star: F,
    /// Total effective SNR `A = Σγ_i`.
    pub total_snr: F,
    pub report: ThroughputReport<F>,
}

fn total_positive_snr<F: Real>(instance: &NetworkInstance<F>) -> Result<F> {
    instance.validate()?;
    let total = instance.gamma.iter().fold(F::zero(), |acc, &g| acc + g);
    if !(total > F::zero()) {
        return Err(Error::Degenerate {
            message: "every effective SNR is zero".into(),
        });
    }
    Ok(total)
}

/// Maximum sum throughput, in closed form.
pub fn solve_sum<F: Real>(
    instance: &NetworkInstance<F>,
    controls: &SolverControls<F>,
) -> Result<SumSolution<F>> {
    let total = total_positive_snr(instance)?;
    let z = solve_f_eq_a(total, controls)?;
    let denom = total + z - F::one();
    let mut tau = Vec::with_capacity(instance.user_count() + 1);
    tau.push((z - F::one()) / denom);
    for &g in &instance.gamma {
        tau.push(g / denom);
    }
    let allocation = TimeAllocation::new(tau)?;
    let report = evaluate_rates(instance, &allocation)?;
    Ok(SumSolution {
        allocation,
        z_star: z,
        total_snr: total,
        report,
    })
}

/// The downlink fraction written through the root alone:
/// `tau_0* = (z − 1)/(z·ln z)`. Equal to the closed-form expression because
/// `A + z − 1 = z·ln z` at the root.
pub fn tau0_alternative_form<F: Real>(z_star: F) -> Result<F> {
    if !(z_star > F::one()) {
        return Err(Error::Domain {
            op: "tau0_alternative_form",
            message: format!("requires z > 1, got {z_star}"),
        });
    }
    let w = z_star - F::one();
    Ok(w / (z_star * w.ln_1p()))
}

/// Sum-optimal allocation for a conventional TDMA uplink with fixed per-block
/// energy and no downlink phase: `tau_0 = 0`, `tau_i = γ_i/Σγ_j`, rates
/// `R_i = tau_i·log2(1 + γ_i/tau_i)`.
///
/// The caller supplies `γ_i = g_i·Ē/(Γσ²)`; building that vector from a
/// harvest-then-transmit reference lives in the simulation module.
pub fn solve_conventional_tdma<F: Real>(instance: &NetworkInstance<F>) -> Result<SumSolution<F>> {
    let total = total_positive_snr(instance)?;
    let mut tau = Vec::with_capacity(instance.user_count() + 1);
    tau.push(F::zero());
    for &g in &instance.gamma {
        tau.push(g / total);
    }
    let allocation = TimeAllocation::new(tau)?;
    // Full-block SNR: the per-slot power does not scale with a harvest slot,
    // so the rate formula carries no tau_0 factor.
    let rates: Vec<F> = instance
        .gamma
        .iter()
        .enumerate()
        .map(|(i, &g)| rate_of(g, F::one(), allocation.slot(i + 1)))
        .collect();
    let report = ThroughputReport::new(rates, allocation.clone())?;
    Ok(SumSolution {
        allocation,
        z_star: F::one(),
        total_snr: total,
        report,
    })
}

/// KKT residuals at a sum solution: the common multiplier `ν·ln2` implied by
/// the stationarity conditions, and the largest deviation of
/// `t(γ_i·tau_0/tau_i)` from it over active users. Used by tests and the CLI
/// metadata block.
pub fn sum_kkt_residual<F: Real>(
    instance: &NetworkInstance<F>,
    alloc: &TimeAllocation<F>,
) -> (F, F) {
    let tau0 = alloc.tau0();
    let mut nu_ln2 = F::zero();
    for (i, &g) in instance.gamma.iter().enumerate() {
        if g > F::zero() {
            nu_ln2 = nu_ln2 + g / (F::one() + g * tau0 / alloc.slot(i + 1));
        }
    }
    let mut worst = F::zero();
    for (i, &g) in instance.gamma.iter().enumerate() {
        if g > F::zero() {
            let x = g * tau0 / alloc.slot(i + 1);
            worst = worst.max((crate::rootfind::t_eval(x) - nu_ln2).abs());
        }
    }
    (nu_ln2, worst)
}
