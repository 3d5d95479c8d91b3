//! Weighted sum-throughput maximization, the dual feasibility oracle, and
//! common-throughput (max-min) optimization.
//!
//! The weighted problem `max Σ λ_i R_i(τ)` has a semi-closed form: each user
//! operates at SNR `z_i` solving `t(z_i) = (μ/λ_i)·ln 2` where the time
//! price `μ` balances `Σ λ_i γ_i/(1+z_i) = μ·ln 2`; then
//! `τ_0 = 1/(1 + Σ γ_j/z_j)` and `τ_i = (γ_i/z_i)·τ_0`. A target rate vector
//! is feasible iff the dual value `G(λ) = -Σ λ_i (R_i(τ*) - target_i)` stays
//! nonpositive over λ ≥ 0; the search for a positive certificate runs an
//! ellipsoid cut loop. Common-throughput maximization bisects the target
//! level over that oracle, then polishes the final allocation to the
//! tangency point of the equal-rate manifold, where every user holds the
//! common rate and the block is fully used.

use crate::model::{evaluate_rates, rate_of, NetworkInstance, ThroughputReport, TimeAllocation};
use crate::num::{cast, Real};
use crate::rootfind::{newton_bisect, solve_t_warm, t_eval, SolverControls};
use crate::sum::{solve_sum, SumSolution};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Nonnegative throughput weights with at least one active entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights<F> {
    lambda: Vec<F>,
}

impl<F: Real> Weights<F> {
    pub fn new(lambda: Vec<F>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::invalid("lambda", "need at least one weight"));
        }
        let mut any_positive = false;
        for (i, &l) in lambda.iter().enumerate() {
            if !(l >= F::zero()) || !l.is_finite() {
                return Err(Error::invalid(
                    "lambda",
                    format!("entry {} must be finite and >= 0", i + 1),
                ));
            }
            any_positive |= l > F::zero();
        }
        if !any_positive {
            return Err(Error::invalid("lambda", "all weights are zero"));
        }
        Ok(Weights { lambda })
    }

    pub fn uniform(users: usize) -> Result<Self> {
        Weights::new(vec![F::one(); users])
    }

    pub fn as_slice(&self) -> &[F] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

/// Target rate proportions `β_i > 0`, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct RateProfile<F> {
    beta: Vec<F>,
}

impl<F: Real> RateProfile<F> {
    pub fn new(beta: Vec<F>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::invalid("beta", "need at least one share"));
        }
        let mut total = F::zero();
        for (i, &b) in beta.iter().enumerate() {
            if !(b > F::zero()) || !b.is_finite() {
                return Err(Error::invalid(
                    "beta",
                    format!("entry {} must be finite and > 0", i + 1),
                ));
            }
            total = total + b;
        }
        let slack = cast::<F>(1e-12).max(F::epsilon() * cast(16.0));
        if (total - F::one()).abs() > slack {
            return Err(Error::invalid(
                "beta",
                format!("shares sum to {total}, not 1"),
            ));
        }
        Ok(RateProfile { beta })
    }

    pub fn as_slice(&self) -> &[F] {
        &self.beta
    }
}

/// Localization ellipsoid `{λ : (λ-center)ᵀ P⁻¹ (λ-center) <= 1}` with
/// `shape = P` stored row-major.
#[derive(Debug, Clone)]
pub struct EllipsoidState<F> {
    pub center: Vec<F>,
    shape: Vec<F>,
    pub iteration: usize,
}

impl<F: Real> EllipsoidState<F> {
    /// Ball of the given radius.
    pub fn new(center: Vec<F>, radius: F) -> Self {
        let n = center.len();
        let mut shape = vec![F::zero(); n * n];
        for i in 0..n {
            shape[i * n + i] = radius * radius;
        }
        EllipsoidState {
            center,
            shape,
            iteration: 0,
        }
    }

    pub fn shape(&self) -> &[F] {
        &self.shape
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn mat_vec(&self, v: &[F]) -> Vec<F> {
        let n = self.dim();
        let mut out = vec![F::zero(); n];
        for i in 0..n {
            let mut acc = F::zero();
            for j in 0..n {
                acc = acc + self.shape[i * n + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    /// `vᵀ P v`.
    pub fn quad(&self, v: &[F]) -> F {
        self.mat_vec(v)
            .iter()
            .zip(v)
            .fold(F::zero(), |acc, (&pv, &vi)| acc + pv * vi)
    }

    /// Symmetry plus positive definiteness, checked via an in-place Cholesky
    /// factorization attempt.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let tol = F::epsilon() * cast::<F>(64.0);
        for i in 0..n {
            for j in 0..i {
                let a = self.shape[i * n + j];
                let b = self.shape[j * n + i];
                let scale = a.abs().max(b.abs()).max(F::one());
                if (a - b).abs() > tol * scale {
                    return Err(Error::invalid("shape", "matrix is not symmetric"));
                }
            }
        }
        let mut lower = vec![F::zero(); n * n];
        for j in 0..n {
            let mut diag = self.shape[j * n + j];
            for k in 0..j {
                diag = diag - lower[j * n + k] * lower[j * n + k];
            }
            if !(diag > F::zero()) {
                return Err(Error::invalid("shape", "matrix is not positive definite"));
            }
            let root = diag.sqrt();
            lower[j * n + j] = root;
            for i in (j + 1)..n {
                let mut v = self.shape[i * n + j];
                for k in 0..j {
                    v = v - lower[i * n + k] * lower[j * n + k];
                }
                lower[i * n + j] = v / root;
            }
        }
        Ok(())
    }

    /// Standard central cut through the center, keeping the half-space
    /// `{λ : gᵀ(λ - center) <= 0}`. Returns `sqrt(gᵀPg)` as seen before the
    /// update, or `None` on numerical breakdown.
    fn cut(&mut self, g: &[F]) -> Option<F> {
        let n = self.dim();
        let gpg = self.quad(g);
        if !(gpg > F::zero()) || !gpg.is_finite() {
            return None;
        }
        let width = gpg.sqrt();
        let pg = self.mat_vec(g);
        let nf = cast::<F>(n as f64);
        let step = F::one() / (nf + F::one());
        for i in 0..n {
            self.center[i] = self.center[i] - step * pg[i] / width;
        }
        if n == 1 {
            // 1-D ellipsoid update degenerates to interval halving.
            self.shape[0] = self.shape[0] / cast(4.0);
        } else {
            let grow = nf * nf / (nf * nf - F::one());
            let shrink = cast::<F>(2.0) / (nf + F::one());
            for i in 0..n {
                for j in 0..n {
                    let rank1 = pg[i] * pg[j] / gpg;
                    self.shape[i * n + j] = grow * (self.shape[i * n + j] - shrink * rank1);
                }
            }
        }
        self.iteration += 1;
        Some(width)
    }
}

/// Solution of the weighted sum-throughput problem.
#[derive(Debug, Clone)]
pub struct WeightedSolution<F> {
    pub allocation: TimeAllocation<F>,
    /// Lagrange multiplier `μ*` on the total-time constraint.
    pub time_price: F,
    /// Operating SNR `z_i = γ_i·τ_0/τ_i` per user; infinite for users whose
    /// weight is zero (their slot collapses to zero).
    pub slot_snrs: Vec<F>,
}

/// Cutoff above which `t(z) = c` has no representable root and the user's
/// slot is treated as collapsed (`z = ∞`, `τ_i = 0`).
fn t_cutoff<F: Real>() -> F {
    cast(if F::epsilon() > cast::<F>(1e-10) {
        80.0
    } else {
        700.0
    })
}

/// Warm-start state for repeated weighted solves at nearby weights (the
/// ellipsoid loop re-solves hundreds of times while the weights drift).
#[derive(Debug, Clone)]
struct WeightedWarmStart<F> {
    time_price: Option<F>,
    slot_snrs: Vec<F>,
}

impl<F: Real> Default for WeightedWarmStart<F> {
    fn default() -> Self {
        WeightedWarmStart {
            time_price: None,
            slot_snrs: Vec::new(),
        }
    }
}

fn weighted_core<F: Real>(
    instance: &NetworkInstance<F>,
    lambda: &[F],
    controls: &SolverControls<F>,
    warm: &mut WeightedWarmStart<F>,
) -> Result<WeightedSolution<F>> {
    let users = instance.user_count();
    if lambda.len() != users {
        return Err(Error::DimensionMismatch {
            context: "weights vs instance",
            expected: users,
            got: lambda.len(),
        });
    }
    let ln2 = F::LN_2();
    let active: Vec<usize> = (0..users)
        .filter(|&i| lambda[i] > F::zero() && instance.gamma[i] > F::zero())
        .collect();
    if active.is_empty() {
        return Err(Error::Degenerate {
            message: "no user has both positive weight and positive SNR".into(),
        });
    }
    let weighted_snr: F = active
        .iter()
        .fold(F::zero(), |acc, &i| acc + lambda[i] * instance.gamma[i]);

    // Inner roots are polished to machine precision so the stationarity
    // residuals stay far below the promised 1e-9.
    let inner = SolverControls {
        rel_tol: F::epsilon() * cast(8.0),
        abs_tol: F::epsilon(),
        ..controls.clone()
    };
    let tol = controls
        .abs_tol
        .max(cast::<F>(2.5e-13).max(F::epsilon() * cast(64.0)) * (F::one() + weighted_snr));

    // Residual of the price equation, strictly decreasing and convex in μ:
    // at μ→0 it tends to Σλγ > 0, at μ = Σλγ/ln2 it is strictly negative.
    let mut mu_lo = F::zero();
    let mut mu_hi = weighted_snr / ln2;
    let mut mu = match warm.time_price {
        Some(prev) if prev > F::zero() && prev < mu_hi => prev,
        _ => mu_hi / cast(2.0),
    };
    let mut z = if warm.slot_snrs.len() == users {
        std::mem::take(&mut warm.slot_snrs)
    } else {
        vec![F::infinity(); users]
    };
    let cutoff = t_cutoff::<F>();
    let mut converged = false;
    for _ in 0..controls.max_iters {
        let mut price_sum = F::zero();
        let mut slot_sum = F::zero();
        for &i in &active {
            let c = mu * ln2 / lambda[i];
            if c > cutoff {
                z[i] = F::infinity();
                continue;
            }
            let warm = if z[i].is_finite() { z[i] } else { F::nan() };
            z[i] = solve_t_warm(c, warm, &inner)?;
            price_sum = price_sum + lambda[i] * instance.gamma[i] / (F::one() + z[i]);
            slot_sum = slot_sum + instance.gamma[i] / z[i];
        }
        let residual = price_sum - mu * ln2;
        if residual.abs() <= tol {
            converged = true;
            break;
        }
        if residual > F::zero() {
            mu_lo = mu;
        } else {
            mu_hi = mu;
        }
        // Newton step with the analytic slope r'(μ) = -ln2/τ0; the residual
        // is convex decreasing so the step converges from the left, with a
        // bisection fallback whenever it leaves the bracket.
        let tau0_hat = F::one() / (F::one() + slot_sum);
        let mut next = mu + residual * tau0_hat / ln2;
        if !(next > mu_lo && next < mu_hi) {
            next = (mu_lo + mu_hi) / cast(2.0);
        }
        mu = next;
    }
    if !converged {
        return Err(Error::IterationLimit {
            op: "solve_weighted_sum",
            iters: controls.max_iters,
            detail: format!("price bracket [{mu_lo}, {mu_hi}]"),
        });
    }

    // zero-weight users keep z = ∞; positive-weight zero-SNR users still get
    // their stationarity root (their slot is zero regardless)
    for i in 0..users {
        if lambda[i] > F::zero() && instance.gamma[i] == F::zero() {
            let c = mu * ln2 / lambda[i];
            z[i] = if c > cutoff {
                F::infinity()
            } else {
                solve_t_warm(c, F::nan(), &inner)?
            };
        }
    }

    let slot_sum = active.iter().fold(F::zero(), |acc, &i| {
        if z[i].is_finite() {
            acc + instance.gamma[i] / z[i]
        } else {
            acc
        }
    });
    let tau0 = F::one() / (F::one() + slot_sum);
    let mut tau = Vec::with_capacity(users + 1);
    tau.push(tau0);
    for i in 0..users {
        if z[i].is_finite() && instance.gamma[i] > F::zero() && lambda[i] > F::zero() {
            tau.push(instance.gamma[i] / z[i] * tau0);
        } else {
            tau.push(F::zero());
        }
    }
    warm.time_price = Some(mu);
    warm.slot_snrs = z.clone();
    Ok(WeightedSolution {
        allocation: TimeAllocation::new(tau)?,
        time_price: mu,
        slot_snrs: z,
    })
}

/// Optimal allocation of `max Σ λ_i R_i(τ)` over the block simplex.
pub fn solve_weighted_sum<F: Real>(
    instance: &NetworkInstance<F>,
    weights: &Weights<F>,
    controls: &SolverControls<F>,
) -> Result<WeightedSolution<F>> {
    instance.validate()?;
    weighted_core(
        instance,
        weights.as_slice(),
        controls,
        &mut WeightedWarmStart::default(),
    )
}

/// Stationarity residuals of a weighted solution: the largest deviation in
/// the per-user equation `t(z_i) = (μ/λ_i)·ln2` and in the price equation
/// `Σ λ_i γ_i/(1+z_i) = μ·ln2`. Exposed for tests and run metadata.
pub fn weighted_kkt_residuals<F: Real>(
    instance: &NetworkInstance<F>,
    weights: &Weights<F>,
    solution: &WeightedSolution<F>,
) -> (F, F) {
    let ln2 = F::LN_2();
    let lambda = weights.as_slice();
    let mut worst_user = F::zero();
    let mut price_sum = F::zero();
    for i in 0..instance.user_count() {
        let z = solution.slot_snrs[i];
        if !z.is_finite() {
            continue;
        }
        if lambda[i] > F::zero() {
            worst_user = worst_user.max((t_eval(z) - solution.time_price * ln2 / lambda[i]).abs());
            price_sum = price_sum + lambda[i] * instance.gamma[i] / (F::one() + z);
        }
    }
    (worst_user, (price_sum - solution.time_price * ln2).abs())
}

fn dual_with_targets<F: Real>(
    instance: &NetworkInstance<F>,
    lambda: &[F],
    targets: &[F],
    controls: &SolverControls<F>,
    warm: &mut WeightedWarmStart<F>,
) -> Result<(F, TimeAllocation<F>, Vec<F>)> {
    let ws = weighted_core(instance, lambda, controls, warm)?;
    let tau0 = ws.allocation.tau0();
    let rates: Vec<F> = instance
        .gamma
        .iter()
        .enumerate()
        .map(|(i, &g)| rate_of(g, tau0, ws.allocation.slot(i + 1)))
        .collect();
    let g_val = lambda
        .iter()
        .zip(&rates)
        .zip(targets)
        .fold(F::zero(), |acc, ((&l, &r), &t)| acc - l * (r - t));
    Ok((g_val, ws.allocation, rates))
}

/// Dual value `G(λ) = -Σ λ_i (R_i(τ*) - target_rate)` of the feasibility
/// problem at a common target, along with the minimizing allocation.
pub fn dual_value<F: Real>(
    instance: &NetworkInstance<F>,
    weights: &Weights<F>,
    target_rate: F,
    controls: &SolverControls<F>,
) -> Result<(F, TimeAllocation<F>)> {
    instance.validate()?;
    if !(target_rate > F::zero()) || !target_rate.is_finite() {
        return Err(Error::invalid("target_rate", "must be positive and finite"));
    }
    let targets = vec![target_rate; instance.user_count()];
    let (g, alloc, _) = dual_with_targets(
        instance,
        weights.as_slice(),
        &targets,
        controls,
        &mut WeightedWarmStart::default(),
    )?;
    Ok((g, alloc))
}

/// Outcome of a feasibility check: an allocation meeting every target, or a
/// weight vector certifying a positive dual value.
#[derive(Debug, Clone)]
pub enum Feasibility<F> {
    Feasible { allocation: TimeAllocation<F> },
    Infeasible { certificate: Weights<F> },
}

impl<F> Feasibility<F> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible { .. })
    }
}

/// Decides whether per-user rate targets are simultaneously achievable.
///
/// Runs the ellipsoid method on the dual: any iterate with `G(λ) > 0` is an
/// infeasibility certificate; any weighted-optimal allocation covering every
/// target is a feasibility certificate; if the guaranteed dual gap
/// `sqrt(υᵀPυ)` drops below `ellipsoid_gap_tol` with all dual values
/// nonpositive, the targets are declared feasible with the best allocation
/// seen.
pub fn check_feasibility<F: Real>(
    instance: &NetworkInstance<F>,
    target_rates: &[F],
    controls: &SolverControls<F>,
) -> Result<Feasibility<F>> {
    instance.validate()?;
    let users = instance.user_count();
    if target_rates.len() != users {
        return Err(Error::DimensionMismatch {
            context: "targets vs instance",
            expected: users,
            got: target_rates.len(),
        });
    }
    for (i, &t) in target_rates.iter().enumerate() {
        if !(t >= F::zero()) || !t.is_finite() {
            return Err(Error::invalid(
                "target_rates",
                format!("entry {} must be finite and >= 0", i + 1),
            ));
        }
    }
    // Anything is feasible against all-zero targets.
    if target_rates.iter().all(|&t| t <= F::zero()) {
        return Ok(Feasibility::Feasible {
            allocation: TimeAllocation::equal_split(users)?,
        });
    }
    // A zero-SNR user never reaches a positive target; the unit weight on
    // that user is already a positive-dual certificate.
    for i in 0..users {
        if instance.gamma[i] == F::zero() && target_rates[i] > F::zero() {
            let mut lam = vec![F::zero(); users];
            lam[i] = F::one();
            return Ok(Feasibility::Infeasible {
                certificate: Weights::new(lam)?,
            });
        }
    }

    let nf = cast::<F>(users as f64);
    let mut state = EllipsoidState::new(vec![F::one() / nf; users], cast::<F>(10.0) * nf);
    let cap = controls.ellipsoid_cap(users);
    let mut best_dual = F::neg_infinity();
    let mut best_margin = F::neg_infinity();
    let mut best_alloc: Option<TimeAllocation<F>> = None;
    let mut warm = WeightedWarmStart::default();
    let mut tried_construction = false;

    for _ in 0..cap {
        // Constraint cut while the center violates λ >= 0.
        let most_negative = (0..users)
            .filter(|&i| state.center[i] < F::zero())
            .min_by(|&a, &b| state.center[a].partial_cmp(&state.center[b]).unwrap());
        if let Some(i) = most_negative {
            let mut dir = vec![F::zero(); users];
            dir[i] = -F::one();
            if state.cut(&dir).is_none() {
                break;
            }
            continue;
        }
        if state.center.iter().all(|&l| l <= F::zero()) {
            // center pinned at the origin: push back into the orthant
            let dir = vec![-F::one(); users];
            if state.cut(&dir).is_none() {
                break;
            }
            continue;
        }

        let (g_val, alloc, rates) =
            dual_with_targets(instance, &state.center, target_rates, controls, &mut warm)?;
        best_dual = best_dual.max(g_val);
        if g_val > F::zero() {
            return Ok(Feasibility::Infeasible {
                certificate: Weights::new(state.center.clone())?,
            });
        }
        let margin = rates
            .iter()
            .zip(target_rates)
            .fold(F::infinity(), |acc, (&r, &t)| acc.min(r - t));
        if margin > best_margin {
            best_margin = margin;
            best_alloc = Some(alloc.clone());
        }
        if margin >= -controls.rate_tol {
            return Ok(Feasibility::Feasible { allocation: alloc });
        }

        // One constructive attempt per check: building an allocation on the
        // exact-target manifold is cheap, and succeeding is a feasibility
        // certificate in its own right. Infeasibility is still only ever
        // declared through a positive dual value.
        if !tried_construction {
            tried_construction = true;
            let candidate = equalize_targets(instance, target_rates, &alloc, controls)?;
            if covers(instance, &candidate, target_rates, controls.rate_tol) {
                return Ok(Feasibility::Feasible {
                    allocation: candidate,
                });
            }
        }

        let subgradient: Vec<F> = rates
            .iter()
            .zip(target_rates)
            .map(|(&r, &t)| r - t)
            .collect();
        match state.cut(&subgradient) {
            Some(width) if width < controls.ellipsoid_gap_tol => {
                // Every dual value is below best_dual + width <= gap_tol, so
                // no positive certificate exists up to that slack. The best
                // iterate need not cover the targets (the dual maximum sits
                // at the origin for strictly feasible targets), so build the
                // covering allocation on the exact-target manifold.
                let seed = best_alloc.expect("at least one dual evaluation");
                let allocation = equalize_targets(instance, target_rates, &seed, controls)?;
                return Ok(Feasibility::Feasible { allocation });
            }
            Some(_) => {}
            None => break,
        }
    }
    Err(Error::Indeterminate {
        iters: state.iteration,
        best_dual: best_dual.to_f64().unwrap_or(f64::NAN),
    })
}

/// Whether an allocation achieves every target within the tolerance.
fn covers<F: Real>(
    instance: &NetworkInstance<F>,
    alloc: &TimeAllocation<F>,
    targets: &[F],
    tol: F,
) -> bool {
    let tau0 = alloc.tau0();
    instance
        .gamma
        .iter()
        .enumerate()
        .all(|(i, &g)| rate_of(g, tau0, alloc.slot(i + 1)) >= targets[i] - tol)
}

/// Common- or profile-throughput solution.
#[derive(Debug, Clone)]
pub struct CommonSolution<F> {
    /// Maximized level: the per-user common rate for [`solve_common`], the
    /// profile-constrained sum throughput for [`solve_rate_profile`].
    pub common_rate: F,
    pub allocation: TimeAllocation<F>,
    pub report: ThroughputReport<F>,
    pub bisection_iters: usize,
    pub converged: bool,
    /// Set when some user has zero effective SNR, pinning the optimum at 0.
    pub degenerate: bool,
    /// Final bisection bracket `[feasible, infeasible)`.
    pub bracket: (F, F),
}

/// Slot length achieving `rate_of(γ, τ0, τ) = target`, if the asymptotic
/// ceiling `γ·τ0/ln2` allows it.
fn slot_for_target<F: Real>(
    gamma: F,
    tau0: F,
    target: F,
    controls: &SolverControls<F>,
) -> Option<F> {
    if target <= F::zero() {
        return Some(F::zero());
    }
    if !(gamma > F::zero() && tau0 > F::zero()) {
        return None;
    }
    let ceiling = gamma * tau0 / F::LN_2();
    if target >= ceiling * (F::one() - cast(1e-12)) {
        return None;
    }
    let mut hi = F::one();
    for _ in 0..80 {
        if rate_of(gamma, tau0, hi) >= target {
            break;
        }
        hi = hi * cast(2.0);
        if hi > cast(1e9) {
            return None;
        }
    }
    // dR/dτ = t(γ·τ0/τ)/ln2 with t the stationarity function
    newton_bisect(
        "slot_for_target",
        |t| rate_of(gamma, tau0, t),
        |t| t_eval(gamma * tau0 / t) / F::LN_2(),
        target,
        F::zero(),
        hi,
        controls.residual_tol(target),
        controls.max_iters,
    )
    .ok()
}

/// Moves a target-covering allocation onto the exact-target manifold:
/// bisects the downlink slot on `h(τ0) = 1 − τ0 − Σ_i slot_i(τ0)`, which is
/// nonnegative at the seed and negative at τ0 = 1, then absorbs the residual
/// budget into τ0 so the block sums to one exactly.
fn equalize_targets<F: Real>(
    instance: &NetworkInstance<F>,
    targets: &[F],
    seed: &TimeAllocation<F>,
    controls: &SolverControls<F>,
) -> Result<TimeAllocation<F>> {
    let users = instance.user_count();
    let slots = |tau0: F| -> Option<Vec<F>> {
        let mut out = Vec::with_capacity(users);
        for i in 0..users {
            out.push(slot_for_target(
                instance.gamma[i],
                tau0,
                targets[i],
                controls,
            )?);
        }
        Some(out)
    };
    let budget_excess = |tau0: F| -> F {
        match slots(tau0) {
            Some(s) => F::one() - tau0 - s.iter().fold(F::zero(), |a, &x| a + x),
            None => F::neg_infinity(),
        }
    };

    let mut lo = seed.tau0();
    if !(budget_excess(lo) >= F::zero()) {
        // The seed may sit outside the achievable band (it only covers the
        // targets within rate_tol, or not at all when it came from a dual
        // gap exit). Every user's rate ceiling γ_i·τ0/ln2 must clear its
        // target, which bounds τ0 from below analytically; on the reachable
        // interval the excess is unimodal, so a ternary search finds its
        // peak. A negative peak means the targets sit beyond the manifold
        // and the seed is the best available answer.
        let mut reach = F::zero();
        for i in 0..users {
            if targets[i] > F::zero() && instance.gamma[i] > F::zero() {
                reach = reach.max(targets[i] * F::LN_2() / instance.gamma[i]);
            }
        }
        let mut a = cast::<F>(1e-6).max(reach * (F::one() + cast(1e-9)));
        let mut b = F::one() - cast::<F>(1e-6);
        if a >= b {
            return Ok(seed.clone());
        }
        for _ in 0..160 {
            let third = (b - a) / cast(3.0);
            let m1 = a + third;
            let m2 = b - third;
            if budget_excess(m1) < budget_excess(m2) {
                a = m1;
            } else {
                b = m2;
            }
            if (b - a) < cast(1e-10) {
                break;
            }
        }
        let peak = (a + b) / cast(2.0);
        if budget_excess(peak) >= F::zero() {
            lo = peak;
        } else {
            return Ok(seed.clone());
        }
    }
    let mut hi = F::one();
    for _ in 0..120 {
        let mid = (lo + hi) / cast(2.0);
        if budget_excess(mid) >= F::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= F::epsilon() * cast(8.0) {
            break;
        }
    }
    let final_slots = slots(lo).expect("feasible side of the bracket");
    let used = final_slots.iter().fold(F::zero(), |a, &x| a + x);
    let mut tau = Vec::with_capacity(users + 1);
    tau.push(F::one() - used);
    tau.extend(final_slots);
    TimeAllocation::new(tau)
}

/// Largest level `s` such that slots achieving `s·shape_i` for every user
/// fit the budget `1 − τ0`, together with those slots. Levels are sought in
/// `[0, s_hi]`.
fn equal_level_at<F: Real>(
    instance: &NetworkInstance<F>,
    shape: &[F],
    tau0: F,
    s_hi: F,
    controls: &SolverControls<F>,
) -> (F, Option<Vec<F>>) {
    let users = instance.user_count();
    let slots_for = |s: F| -> Option<Vec<F>> {
        let mut out = Vec::with_capacity(users);
        let mut used = F::zero();
        for i in 0..users {
            let slot = slot_for_target(instance.gamma[i], tau0, s * shape[i], controls)?;
            used = used + slot;
            if used > F::one() - tau0 {
                return None;
            }
            out.push(slot);
        }
        Some(out)
    };
    let mut lo = F::zero();
    let mut hi = s_hi;
    let mut best = None;
    for _ in 0..60 {
        let mid = (lo + hi) / cast(2.0);
        match slots_for(mid) {
            Some(slots) => {
                lo = mid;
                best = Some(slots);
            }
            None => hi = mid,
        }
        if (hi - lo) <= F::epsilon() * (F::one() + hi) {
            break;
        }
    }
    (lo, best)
}

/// The tangency point of the equal-rate manifold: maximizes the achievable
/// level `s` (rates `s·shape_i`, full block usage) over the downlink slot by
/// ternary search. Returns the optimal allocation and its level.
fn maximize_equal_level<F: Real>(
    instance: &NetworkInstance<F>,
    shape: &[F],
    s_hi: F,
    controls: &SolverControls<F>,
) -> Result<(F, TimeAllocation<F>)> {
    let mut a = cast::<F>(1e-9);
    let mut b = F::one() - cast::<F>(1e-9);
    for _ in 0..70 {
        let third = (b - a) / cast(3.0);
        let m1 = a + third;
        let m2 = b - third;
        let l1 = equal_level_at(instance, shape, m1, s_hi, controls).0;
        let l2 = equal_level_at(instance, shape, m2, s_hi, controls).0;
        if l1 < l2 {
            a = m1;
        } else {
            b = m2;
        }
        if (b - a) < cast(1e-8) {
            break;
        }
    }
    let tau0 = (a + b) / cast(2.0);
    let (level, slots) = equal_level_at(instance, shape, tau0, s_hi, controls);
    let slots = slots.ok_or_else(|| Error::Degenerate {
        message: "no positive equal-rate level is achievable".into(),
    })?;
    let used = slots.iter().fold(F::zero(), |acc, &x| acc + x);
    let mut tau = Vec::with_capacity(slots.len() + 1);
    tau.push(F::one() - used);
    tau.extend(slots);
    Ok((level, TimeAllocation::new(tau)?))
}

fn degenerate_solution<F: Real>(instance: &NetworkInstance<F>) -> Result<CommonSolution<F>> {
    let allocation = TimeAllocation::equal_split(instance.user_count())?;
    let report = evaluate_rates(instance, &allocation)?;
    Ok(CommonSolution {
        common_rate: F::zero(),
        allocation,
        report,
        bisection_iters: 0,
        converged: true,
        degenerate: true,
        bracket: (F::zero(), F::zero()),
    })
}

fn solution_from_sum<F: Real>(sum: SumSolution<F>) -> CommonSolution<F> {
    let rate = sum.report.sum_rate;
    CommonSolution {
        common_rate: rate,
        allocation: sum.allocation.clone(),
        report: sum.report,
        bisection_iters: 0,
        converged: true,
        degenerate: false,
        bracket: (rate, rate),
    }
}

fn bisect_targets<F: Real>(
    instance: &NetworkInstance<F>,
    controls: &SolverControls<F>,
    r_max_init: F,
    shape: &[F],
) -> Result<CommonSolution<F>> {
    if !(r_max_init > F::zero()) || !r_max_init.is_finite() {
        return Err(Error::invalid("r_max_init", "must be positive and finite"));
    }
    let targets_at = |level: F| -> Vec<F> { shape.iter().map(|&b| b * level).collect() };
    let mut r_min = F::zero();
    let mut r_max = r_max_init;
    let mut last_feasible: Option<TimeAllocation<F>> = None;
    let mut iters = 0usize;
    while (r_max - r_min) >= controls.bisection_tol {
        iters += 1;
        if iters > 200 {
            return Err(Error::IterationLimit {
                op: "solve_common",
                iters,
                detail: format!("level bracket [{r_min}, {r_max}]"),
            });
        }
        let level = (r_min + r_max) / cast(2.0);
        match check_feasibility(instance, &targets_at(level), controls)? {
            Feasibility::Feasible { allocation } => {
                r_min = level;
                last_feasible = Some(allocation);
            }
            Feasibility::Infeasible { .. } => r_max = level,
        }
    }
    if r_max_init - r_min < controls.bisection_tol {
        return Err(Error::RMaxTooSmall {
            given: r_max_init.to_f64().unwrap_or(f64::NAN),
        });
    }
    let allocation = match last_feasible {
        Some(seed) => {
            // The certificate covers the targets but sits anywhere on the
            // level set; polish to the tangency point, where the level is
            // maximal and the whole block is used. Levels in the low-SNR
            // regime move very little across a wide slot range, so the
            // certificate itself can be far from the optimizing split.
            let (level, polished) = maximize_equal_level(instance, shape, r_max, controls)?;
            if level >= r_min - controls.rate_tol {
                polished
            } else {
                equalize_targets(instance, &targets_at(r_min), &seed, controls)?
            }
        }
        None => {
            // optimum below the bisection tolerance: an all-downlink block
            // achieves every (zero) rate exactly
            let mut tau = vec![F::zero(); instance.user_count() + 1];
            tau[0] = F::one();
            TimeAllocation::new(tau)?
        }
    };
    let report = evaluate_rates(instance, &allocation)?;
    Ok(CommonSolution {
        common_rate: F::zero(), // caller fills from the report
        allocation,
        report,
        bisection_iters: iters,
        converged: true,
        degenerate: false,
        bracket: (r_min, r_max),
    })
}

/// Maximum rate achievable by every user simultaneously, by bisection over
/// the dual feasibility oracle (`r_max_init = None` starts from the maximum
/// sum rate, a provable upper bound).
pub fn solve_common<F: Real>(
    instance: &NetworkInstance<F>,
    controls: &SolverControls<F>,
    r_max_init: Option<F>,
) -> Result<CommonSolution<F>> {
    instance.validate()?;
    if instance.gamma.iter().any(|&g| g == F::zero()) {
        if instance.gamma.iter().all(|&g| g == F::zero()) {
            return Err(Error::Degenerate {
                message: "every effective SNR is zero".into(),
            });
        }
        return degenerate_solution(instance);
    }
    let sum_sol = solve_sum(instance, controls)?;
    if instance.user_count() == 1 {
        return Ok(solution_from_sum(sum_sol));
    }
    let users = instance.user_count();
    let ceiling = r_max_init.unwrap_or(sum_sol.report.sum_rate);
    let mut out = bisect_targets(instance, controls, ceiling, &vec![F::one(); users])?;
    out.common_rate = out.report.min_rate;
    Ok(out)
}

/// Maximum sum throughput subject to per-user shares `R_i >= β_i·R̄`; the
/// returned `common_rate` is the achieved sum `R̄`.
pub fn solve_rate_profile<F: Real>(
    instance: &NetworkInstance<F>,
    profile: &RateProfile<F>,
    controls: &SolverControls<F>,
) -> Result<CommonSolution<F>> {
    instance.validate()?;
    let users = instance.user_count();
    if profile.as_slice().len() != users {
        return Err(Error::DimensionMismatch {
            context: "profile vs instance",
            expected: users,
            got: profile.as_slice().len(),
        });
    }
    if instance.gamma.iter().any(|&g| g == F::zero()) {
        if instance.gamma.iter().all(|&g| g == F::zero()) {
            return Err(Error::Degenerate {
                message: "every effective SNR is zero".into(),
            });
        }
        return degenerate_solution(instance);
    }
    let sum_sol = solve_sum(instance, controls)?;
    if users == 1 {
        return Ok(solution_from_sum(sum_sol));
    }
    // A profile matching the unconstrained optimum attains the sum-rate
    // bound exactly; pad so the ceiling stays strictly above the optimum.
    let sum_rate = sum_sol.report.sum_rate;
    let ceiling = sum_rate + sum_rate * cast(1e-3) + cast::<F>(10.0) * controls.bisection_tol;
    let mut out = bisect_targets(instance, controls, ceiling, profile.as_slice())?;
    out.common_rate = out.report.sum_rate;
    Ok(out)
}

/// One point of a weight sweep: the weights used and the rates they induce.
#[derive(Debug, Clone)]
pub struct RegionPoint<F> {
    pub weights: Vec<F>,
    pub rates: Vec<F>,
    pub sum_rate: F,
}

/// Sweeps normalized weights and solves the weighted problem at each,
/// tracing the achievable-rate boundary for two users. For K != 2 the sweep
/// has no boundary semantics; weights come from a seeded stream.
pub fn throughput_region<F: Real>(
    instance: &NetworkInstance<F>,
    n_weights: usize,
    controls: &SolverControls<F>,
) -> Result<Vec<RegionPoint<F>>> {
    instance.validate()?;
    if n_weights < 2 {
        return Err(Error::invalid(
            "n_weights",
            "need at least two sweep points",
        ));
    }
    let users = instance.user_count();
    let weight_list: Vec<Vec<F>> = if users == 2 {
        (0..n_weights)
            .map(|j| {
                let theta = std::f64::consts::FRAC_PI_2 * j as f64 / (n_weights - 1) as f64;
                let (mut c, mut s) = (theta.cos(), theta.sin());
                if c.abs() < 1e-15 {
                    c = 0.0;
                }
                if s.abs() < 1e-15 {
                    s = 0.0;
                }
                vec![cast(c), cast(s)]
            })
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACE0 ^ n_weights as u64);
        (0..n_weights)
            .map(|_| {
                let raw: Vec<f64> = (0..users).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter()
                    .map(|x| cast(x / total.max(1e-300)))
                    .collect()
            })
            .collect()
    };
    let mut out = Vec::with_capacity(n_weights);
    for lambda in weight_list {
        let ws = weighted_core(
            instance,
            &lambda,
            controls,
            &mut WeightedWarmStart::default(),
        )?;
        let report = evaluate_rates(instance, &ws.allocation)?;
        out.push(RegionPoint {
            weights: lambda,
            rates: report.per_user_rates,
            sum_rate: report.sum_rate,
        });
    }
    Ok(out)
}
