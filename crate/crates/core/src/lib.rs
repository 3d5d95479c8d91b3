//! Time-allocation optimization for wireless powered communication networks.
//!
//! A hybrid access point broadcasts energy downlink for a fraction `tau_0` of
//! each block; users then send data uplink in TDMA slots `tau_1 ... tau_K`
//! powered entirely by what they harvested. This crate computes optimal
//! allocations of the block time under three objectives:
//!
//! * [`sum::solve_sum`]: maximum sum throughput, in closed form;
//! * [`common::solve_common`]: maximum common (max-min) throughput, via
//!   bisection over a dual feasibility oracle;
//! * [`common::solve_rate_profile`]: maximum sum throughput subject to a
//!   fixed per-user rate profile.
//!
//! [`sim`] draws fading channels and runs seeded Monte Carlo comparisons of
//! the optimal schemes against equal-time and conventional-TDMA baselines.
//!
//! The math modules are generic over the scalar type (any [`Real`], i.e.
//! `f32` or `f64`); the simulator and the type aliases at the crate root are
//! pinned to `f64`.

pub mod common;
mod error;
pub mod model;
mod num;
pub mod rootfind;
pub mod sim;
pub mod sum;
#[cfg(test)]
pub(crate) mod test_oracle;

pub use error::Error;
pub use num::Real;

pub use common::{CommonSolution, Feasibility, RateProfile, WeightedSolution, Weights};
pub use model::{
    effective_snr, evaluate_rates, harvested_energy, rate_hessian, user_tx_power,
    ChannelRealization, NetworkInstance, PhysicalParams, ThroughputReport, TimeAllocation,
};
pub use rootfind::SolverControls;
pub use sum::SumSolution;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Double-precision aliases used by the simulator and the CLI.
pub type Params = PhysicalParams<f64>;
pub type Channels = ChannelRealization<f64>;
pub type Instance = NetworkInstance<f64>;
pub type Allocation = TimeAllocation<f64>;
pub type Report = ThroughputReport<f64>;
pub type Controls = SolverControls<f64>;
