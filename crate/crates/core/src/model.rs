//! Problem data and the throughput model.
//!
//! One block of unit length is split into a downlink energy-broadcast slot
//! `tau_0` and per-user uplink slots `tau_1 ... tau_K`. User `i` harvests
//! `E_i = ζ·P_A·h_i·tau_0`, transmits at `P_i = η·E_i/tau_i`, and achieves
//! `R_i = tau_i · log2(1 + γ_i·tau_0/tau_i)` bps/Hz, where the effective SNR
//! `γ_i = ζ·h_i·g_i·P_A/(Γ·σ²)` is the single scalar per user that the
//! optimization depends on.

use crate::num::{cast, Real};
use crate::{Error, Result};

/// Physical constants of the network.
///
/// All values are linear units (watts, dimensionless ratios); dB conversion
/// belongs at the configuration boundary. `bandwidth_hz` is carried only for
/// converting bps/Hz into bps when reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams<F> {
    /// Access-point transmit power in watts.
    pub transmit_power_hap: F,
    /// Energy harvesting efficiency ζ, in (0, 1).
    pub harvest_efficiency: F,
    /// SNR gap Γ of the modulation/coding scheme, linear, >= 1.
    pub snr_gap: F,
    /// Receiver noise power σ² in watts.
    pub noise_power: F,
    /// Fraction η of the harvested energy spent on transmission, in (0, 1].
    pub energy_use_fraction: F,
    /// System bandwidth in hertz (reporting only).
    pub bandwidth_hz: F,
}

impl<F: Real> PhysicalParams<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.transmit_power_hap > F::zero()) {
            return Err(Error::invalid("transmit_power_hap", "must be > 0"));
        }
        if !(self.noise_power > F::zero()) {
            return Err(Error::invalid("noise_power", "must be > 0"));
        }
        if !(self.snr_gap >= F::one()) {
            return Err(Error::invalid("snr_gap", "must be >= 1 (linear)"));
        }
        if !(self.harvest_efficiency > F::zero() && self.harvest_efficiency < F::one()) {
            return Err(Error::invalid("harvest_efficiency", "must lie in (0, 1)"));
        }
        if !(self.energy_use_fraction > F::zero() && self.energy_use_fraction <= F::one()) {
            return Err(Error::invalid("energy_use_fraction", "must lie in (0, 1]"));
        }
        if !(self.bandwidth_hz > F::zero()) {
            return Err(Error::invalid("bandwidth_hz", "must be > 0"));
        }
        Ok(())
    }
}

/// Per-user downlink/uplink power gains for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<F> {
    pub dl_gains: Vec<F>,
    pub ul_gains: Vec<F>,
    /// Access-point distances in meters, when the gains came from a pathloss
    /// model. Metadata only.
    pub distances: Option<Vec<F>>,
}

impl<F: Real> ChannelRealization<F> {
    pub fn new(dl_gains: Vec<F>, ul_gains: Vec<F>) -> Result<Self> {
        let ch = ChannelRealization {
            dl_gains,
            ul_gains,
            distances: None,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn user_count(&self) -> usize {
        self.dl_gains.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dl_gains.is_empty() {
            return Err(Error::invalid("dl_gains", "need at least one user"));
        }
        if self.ul_gains.len() != self.dl_gains.len() {
            return Err(Error::DimensionMismatch {
                context: "channel gain vectors",
                expected: self.dl_gains.len(),
                got: self.ul_gains.len(),
            });
        }
        for (i, (&h, &g)) in self.dl_gains.iter().zip(&self.ul_gains).enumerate() {
            if !(h >= F::zero()) || !h.is_finite() || !(g >= F::zero()) || !g.is_finite() {
                return Err(Error::NonFinite {
                    user: i + 1,
                    context: "channel power gain",
                });
            }
        }
        if let Some(d) = &self.distances {
            if d.len() != self.dl_gains.len() {
                return Err(Error::DimensionMismatch {
                    context: "distance vector",
                    expected: self.dl_gains.len(),
                    got: d.len(),
                });
            }
        }
        Ok(())
    }
}

/// Provenance of a [`NetworkInstance`] built from physical data.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance<F> {
    pub params: PhysicalParams<F>,
    pub channels: ChannelRealization<F>,
}

/// Per-block problem data: the effective SNR vector, which fully determines
/// every allocation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance<F> {
    pub gamma: Vec<F>,
    pub source: Option<Provenance<F>>,
}

impl<F: Real> NetworkInstance<F> {
    /// Instance from a raw effective-SNR vector.
    pub fn from_gamma(gamma: Vec<F>) -> Result<Self> {
        let inst = NetworkInstance {
            gamma,
            source: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn user_count(&self) -> usize {
        self.gamma.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma.is_empty() {
            return Err(Error::invalid("gamma", "need at least one user"));
        }
        for (i, &g) in self.gamma.iter().enumerate() {
            if !(g >= F::zero()) || !g.is_finite() {
                return Err(Error::NonFinite {
                    user: i + 1,
                    context: "effective SNR",
                });
            }
        }
        if let Some(src) = &self.source {
            src.params.validate()?;
            src.channels.validate()?;
            let rel = cast::<F>(1e-12).max(F::epsilon() * cast(8.0));
            for (i, &g) in self.gamma.iter().enumerate() {
                let expect = snr_of(&src.params, &src.channels, i);
                let scale = expect.abs().max(F::min_positive_value());
                if ((g - expect) / scale).abs() > rel {
                    return Err(Error::invalid(
                        "gamma",
                        format!("entry {} does not match its physical provenance", i + 1),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn snr_of<F: Real>(params: &PhysicalParams<F>, channels: &ChannelRealization<F>, i: usize) -> F {
    params.harvest_efficiency
        * params.transmit_power_hap
        * channels.dl_gains[i]
        * channels.ul_gains[i]
        / (params.snr_gap * params.noise_power)
}

/// Fractions of the unit block: `tau[0]` is the downlink energy slot,
/// `tau[1..]` the uplink slots. Entries are nonnegative and sum to at most
/// one (small numerical slack).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAllocation<F> {
    tau: Vec<F>,
}

impl<F: Real> TimeAllocation<F> {
    pub fn new(tau: Vec<F>) -> Result<Self> {
        if tau.len() < 2 {
            return Err(Error::invalid(
                "tau",
                "need tau_0 plus at least one user slot",
            ));
        }
        let mut total = F::zero();
        for (i, &t) in tau.iter().enumerate() {
            if !(t >= F::zero()) || !t.is_finite() {
                return Err(Error::invalid(
                    "tau",
                    format!("entry {i} must be finite and >= 0"),
                ));
            }
            total = total + t;
        }
        let slack = cast::<F>(1e-9).max(F::epsilon() * cast(8.0));
        if total > F::one() + slack {
            return Err(Error::invalid("tau", format!("entries sum to {total} > 1")));
        }
        Ok(TimeAllocation { tau })
    }

    /// Equal split `tau_i = 1/(K+1)` over the downlink slot and K user slots.
    pub fn equal_split(users: usize) -> Result<Self> {
        if users == 0 {
            return Err(Error::invalid("users", "need at least one user"));
        }
        let share = F::one() / cast::<F>((users + 1) as f64);
        TimeAllocation::new(vec![share; users + 1])
    }

    pub fn tau0(&self) -> F {
        self.tau[0]
    }

    /// Uplink slot of user `i` (1-based, matching the block layout).
    pub fn slot(&self, user: usize) -> F {
        self.tau[user]
    }

    pub fn user_count(&self) -> usize {
        self.tau.len() - 1
    }

    pub fn as_slice(&self) -> &[F] {
        &self.tau
    }

    pub fn total(&self) -> F {
        self.tau.iter().fold(F::zero(), |acc, &t| acc + t)
    }
}

/// Rates achieved by an allocation, in bps/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport<F> {
    pub per_user_rates: Vec<F>,
    pub sum_rate: F,
    pub min_rate: F,
    pub allocation: TimeAllocation<F>,
}

impl<F: Real> ThroughputReport<F> {
    /// Builds a report from precomputed rates; `sum_rate` and `min_rate` are
    /// derived, never caller-supplied.
    pub fn new(per_user_rates: Vec<F>, allocation: TimeAllocation<F>) -> Result<Self> {
        if per_user_rates.len() != allocation.user_count() {
            return Err(Error::DimensionMismatch {
                context: "rates vs allocation",
                expected: allocation.user_count(),
                got: per_user_rates.len(),
            });
        }
        let sum_rate = per_user_rates.iter().fold(F::zero(), |acc, &r| acc + r);
        let min_rate = per_user_rates
            .iter()
            .fold(F::infinity(), |acc, &r| acc.min(r));
        Ok(ThroughputReport {
            per_user_rates,
            sum_rate,
            min_rate,
            allocation,
        })
    }
}

/// Effective SNR of every user: `γ_i = ζ·h_i·g_i·P_A/(Γ·σ²)`, with the
/// physical inputs recorded as provenance.
pub fn effective_snr<F: Real>(
    params: &PhysicalParams<F>,
    channels: &ChannelRealization<F>,
) -> Result<NetworkInstance<F>> {
    params.validate()?;
    channels.validate()?;
    let mut gamma = Vec::with_capacity(channels.user_count());
    for i in 0..channels.user_count() {
        let g = snr_of(params, channels, i);
        if !g.is_finite() {
            return Err(Error::NonFinite {
                user: i + 1,
                context: "effective SNR overflowed",
            });
        }
        gamma.push(g);
    }
    Ok(NetworkInstance {
        gamma,
        source: Some(Provenance {
            params: params.clone(),
            channels: channels.clone(),
        }),
    })
}

/// Energy harvested by each user during a downlink slot of length `tau0`:
/// `E_i = ζ·P_A·h_i·tau0` joules per unit block.
pub fn harvested_energy<F: Real>(
    params: &PhysicalParams<F>,
    channels: &ChannelRealization<F>,
    tau0: F,
) -> Result<Vec<F>> {
    params.validate()?;
    channels.validate()?;
    if !(tau0 >= F::zero() && tau0 <= F::one()) {
        return Err(Error::invalid("tau0", "must lie in [0, 1]"));
    }
    Ok(channels
        .dl_gains
        .iter()
        .map(|&h| params.harvest_efficiency * params.transmit_power_hap * h * tau0)
        .collect())
}

/// Average transmit power `P = η·E/tau` of a user spending energy `E` over a
/// slot of length `tau`.
pub fn user_tx_power<F: Real>(energy: F, eta: F, tau_i: F) -> Result<F> {
    if !(energy >= F::zero()) {
        return Err(Error::invalid("energy", "must be >= 0"));
    }
    if !(eta > F::zero() && eta <= F::one()) {
        return Err(Error::invalid("eta", "must lie in (0, 1]"));
    }
    if !(tau_i > F::zero()) {
        return Err(Error::invalid(
            "tau_i",
            "slot length must be > 0; a zero-length slot carries zero rate",
        ));
    }
    Ok(eta * energy / tau_i)
}

pub(crate) fn rate_of<F: Real>(gamma: F, tau0: F, tau_i: F) -> F {
    if tau_i <= F::zero() {
        // continuity convention: tau·log2(1 + c/tau) -> 0 as tau -> 0+
        return F::zero();
    }
    tau_i * (gamma * tau0 / tau_i).ln_1p() / F::LN_2()
}

/// Per-user rates `R_i = tau_i·log2(1 + γ_i·tau0/tau_i)` with `R_i = 0` when
/// `tau_i = 0` (continuity at the boundary).
pub fn evaluate_rates<F: Real>(
    instance: &NetworkInstance<F>,
    alloc: &TimeAllocation<F>,
) -> Result<ThroughputReport<F>> {
    instance.validate()?;
    if alloc.user_count() != instance.user_count() {
        return Err(Error::DimensionMismatch {
            context: "allocation vs instance",
            expected: instance.user_count(),
            got: alloc.user_count(),
        });
    }
    let tau0 = alloc.tau0();
    let rates = instance
        .gamma
        .iter()
        .enumerate()
        .map(|(i, &g)| rate_of(g, tau0, alloc.slot(i + 1)))
        .collect();
    ThroughputReport::new(rates, alloc.clone())
}

/// Analytic Hessian of `R_user` with respect to the full allocation vector,
/// as a dense `(K+1)×(K+1)` matrix. Nonzero only in the `(0,0)`, `(0,user)`
/// and `(user,user)` entries. Requires an interior point in the two
/// coordinates involved.
pub fn rate_hessian<F: Real>(
    instance: &NetworkInstance<F>,
    alloc: &TimeAllocation<F>,
    user: usize,
) -> Result<Vec<Vec<F>>> {
    instance.validate()?;
    if user == 0 || user > instance.user_count() {
        return Err(Error::invalid("user", "must be a 1-based user index"));
    }
    if alloc.user_count() != instance.user_count() {
        return Err(Error::DimensionMismatch {
            context: "allocation vs instance",
            expected: instance.user_count(),
            got: alloc.user_count(),
        });
    }
    let tau0 = alloc.tau0();
    let tau_i = alloc.slot(user);
    if !(tau0 > F::zero() && tau_i > F::zero()) {
        return Err(Error::Boundary {
            message: format!("rate_hessian needs tau0 > 0 and tau_{user} > 0"),
        });
    }
    let n = instance.user_count() + 1;
    let mut h = vec![vec![F::zero(); n]; n];
    let gamma = instance.gamma[user - 1];
    if gamma == F::zero() {
        return Ok(h);
    }
    let beta = F::one() + gamma * tau0 / tau_i;
    let scale = gamma * gamma / (F::LN_2() * beta * beta);
    h[0][0] = -scale / tau_i;
    h[user][user] = -scale * tau0 * tau0 / (tau_i * tau_i * tau_i);
    h[0][user] = scale * tau0 / (tau_i * tau_i);
    h[user][0] = h[0][user];
    Ok(h)
}
