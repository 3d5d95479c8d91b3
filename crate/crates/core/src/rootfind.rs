//! Scalar root finders for the two transcendental equations behind the
//! closed-form allocations: `f(z) = z·ln z − z + 1 = A` and
//! `t(x) = ln(1+x) − x/(1+x) = c`.
//!
//! Both functions are strictly increasing on the search domain, so a
//! safeguarded Newton iteration inside a sign-change bracket converges
//! unconditionally; any Newton step that would leave the bracket falls back
//! to bisection.

use crate::num::{cast, Real};
use crate::{Error, Result};

/// Tolerances and iteration caps for every iterative procedure in the crate.
///
/// Root-finder convergence is `|residual| <= max(abs_tol, rel_tol * |target|)`.
/// `bisection_tol` is the common-throughput bisection width δ in bps/Hz,
/// `rate_tol` the slack used when comparing per-user rates against targets,
/// and the ellipsoid fields govern the dual feasibility search
/// (`ellipsoid_max_iters = None` selects `max(500, 42·K·(K+1))`).
#[derive(Debug, Clone)]
pub struct SolverControls<F> {
    pub rel_tol: F,
    pub abs_tol: F,
    pub max_iters: usize,
    pub bisection_tol: F,
    pub rate_tol: F,
    pub ellipsoid_gap_tol: F,
    pub ellipsoid_max_iters: Option<usize>,
}

impl<F: Real> Default for SolverControls<F> {
    fn default() -> Self {
        // Clamp to the scalar's precision so f32 instantiations stay usable.
        let eps = F::epsilon();
        let clamp = |x: f64, scale: F| cast::<F>(x).max(scale);
        SolverControls {
            rel_tol: clamp(1e-12, eps * cast(32.0)),
            abs_tol: clamp(1e-14, eps),
            max_iters: 200,
            bisection_tol: clamp(1e-5, eps * cast(1e3)),
            rate_tol: clamp(1e-6, eps * cast(1e4)),
            ellipsoid_gap_tol: clamp(1e-7, eps * cast(1e3)),
            ellipsoid_max_iters: None,
        }
    }
}

impl<F: Real> SolverControls<F> {
    pub(crate) fn residual_tol(&self, target: F) -> F {
        self.abs_tol.max(self.rel_tol * target.abs())
    }

    pub(crate) fn ellipsoid_cap(&self, users: usize) -> usize {
        self.ellipsoid_max_iters
            .unwrap_or_else(|| 500usize.max(42 * users * (users + 1)))
    }
}

/// `f(z) = z·ln z − z + 1`, evaluated as `(1+w)·ln1p(w) − w` with `w = z−1`
/// so the cancellation near `z = 1` (where `f ~ w²/2`) keeps full relative
/// accuracy.
pub fn f_eval<F: Real>(z: F) -> F {
    let w = z - F::one();
    (F::one() + w) * w.ln_1p() - w
}

/// `f'(z) = ln z`.
pub fn f_deriv<F: Real>(z: F) -> F {
    (z - F::one()).ln_1p()
}

/// `t(x) = ln(1+x) − x/(1+x)`; behaves like `x²/2` near zero.
pub fn t_eval<F: Real>(x: F) -> F {
    x.ln_1p() - x / (F::one() + x)
}

/// `t'(x) = x/(1+x)²`.
pub fn t_deriv<F: Real>(x: F) -> F {
    let b = F::one() + x;
    x / (b * b)
}

/// Safeguarded Newton on a strictly increasing `f` with `f(lo) < target <= f(hi)`.
pub(crate) fn newton_bisect<F: Real>(
    op: &'static str,
    f: impl Fn(F) -> F,
    df: impl Fn(F) -> F,
    target: F,
    mut lo: F,
    mut hi: F,
    tol: F,
    max_iters: usize,
) -> Result<F> {
    let two = cast::<F>(2.0);
    let mut x = (lo + hi) / two;
    for _ in 0..max_iters {
        let residual = f(x) - target;
        if residual.abs() <= tol {
            return Ok(x);
        }
        if residual > F::zero() {
            hi = x;
        } else {
            lo = x;
        }
        let slope = df(x);
        let mut next = if slope > F::zero() {
            x - residual / slope
        } else {
            F::nan()
        };
        if !(next > lo && next < hi) {
            next = (lo + hi) / two;
        }
        x = next;
    }
    Err(Error::IterationLimit {
        op,
        iters: max_iters,
        detail: format!("bracket [{lo}, {hi}]"),
    })
}

/// Root `z* > 1` of `f(z) = A` for `A > 0`.
///
/// `f` is convex with its minimum `f(1) = 0`, so for `0 < A <= 1` a second
/// root below 1 exists; the bracket `[1, z_hi]` excludes it structurally.
pub fn solve_f_eq_a<F: Real>(a: F, controls: &SolverControls<F>) -> Result<F> {
    if !(a > F::zero()) || !a.is_finite() {
        return Err(Error::Domain {
            op: "solve_f_eq_a",
            message: format!("A must be positive and finite, got {a}"),
        });
    }
    let mut hi = cast::<F>(2.0);
    // f grows superlinearly, so doubling reaches any representable A quickly.
    for _ in 0..1100 {
        if f_eval(hi) >= a {
            break;
        }
        hi = hi * cast(2.0);
        if !hi.is_finite() {
            return Err(Error::Domain {
                op: "solve_f_eq_a",
                message: format!("no representable root for A = {a}"),
            });
        }
    }
    let root = newton_bisect(
        "solve_f_eq_a",
        f_eval,
        f_deriv,
        a,
        F::one(),
        hi,
        controls.residual_tol(a),
        controls.max_iters,
    )?;
    debug_assert!(root > F::one());
    Ok(root)
}

/// Root `x* > 0` of `t(x) = c` for `c > 0`; `t` is strictly increasing with
/// `t(0) = 0` and grows like `ln x`.
pub fn solve_t_eq_c<F: Real>(c: F, controls: &SolverControls<F>) -> Result<F> {
    if !(c > F::zero()) || !c.is_finite() {
        return Err(Error::Domain {
            op: "solve_t_eq_c",
            message: format!("c must be positive and finite, got {c}"),
        });
    }
    let mut hi = F::one();
    for _ in 0..1100 {
        if t_eval(hi) >= c {
            break;
        }
        hi = hi * cast(2.0);
        if !hi.is_finite() {
            return Err(Error::Domain {
                op: "solve_t_eq_c",
                message: format!("no representable root for c = {c}"),
            });
        }
    }
    newton_bisect(
        "solve_t_eq_c",
        t_eval,
        t_deriv,
        c,
        F::zero(),
        hi,
        controls.residual_tol(c),
        controls.max_iters,
    )
}

/// Newton polish from a warm start, falling back to the bracketed solve when
/// the guess is unusable. Used by the weighted-sum inner loop where the same
/// equation is re-solved for nearby right-hand sides.
pub(crate) fn solve_t_warm<F: Real>(c: F, guess: F, controls: &SolverControls<F>) -> Result<F> {
    let tol = controls.residual_tol(c);
    let mut x = if guess.is_finite() && guess > F::zero() {
        guess
    } else {
        // asymptotics: t(x) ~ x^2/2 small, ~ ln x - 1 large
        if c < F::one() {
            (c + c).sqrt()
        } else {
            (c + F::one()).exp()
        }
    };
    for _ in 0..8 {
        let residual = t_eval(x) - c;
        if residual.abs() <= tol {
            return Ok(x);
        }
        let slope = t_deriv(x);
        if !(slope > F::zero()) {
            break;
        }
        let next = x - residual / slope;
        if !(next > F::zero()) || !next.is_finite() {
            break;
        }
        x = next;
    }
    solve_t_eq_c(c, controls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn controls() -> SolverControls<f64> {
        SolverControls::default()
    }

    #[test]
    fn root_at_a_one_is_e() {
        let z = solve_f_eq_a(1.0, &controls()).unwrap();
        assert!((z - std::f64::consts::E).abs() < 1e-12, "z = {z}");
    }

    #[test]
    fn root_at_a_ten() {
        let z = solve_f_eq_a(10.0, &controls()).unwrap();
        assert!((z - 8.174364667724810).abs() < 1e-9, "z = {z}");
        let tau0 = (z - 1.0) / (10.0 + z - 1.0);
        assert!((tau0 - 0.417736830824802).abs() < 1e-9, "tau0 = {tau0}");
    }

    #[test]
    fn small_a_approaches_one_from_above() {
        // f(z) ~ (z-1)^2/2 near 1, so z* - 1 ~ sqrt(2A)
        let z = solve_f_eq_a(1e-10, &controls()).unwrap();
        assert!(z > 1.0);
        let expected = (2e-10f64).sqrt();
        assert!(
            ((z - 1.0) - expected).abs() < 1e-3 * expected,
            "z-1 = {}",
            z - 1.0
        );
    }

    #[test]
    fn never_returns_the_subunit_root() {
        for &a in &[1e-6, 0.01, 0.3, 0.9999, 1.0] {
            let z = solve_f_eq_a(a, &controls()).unwrap();
            assert!(z > 1.0, "A = {a} gave z = {z}");
        }
    }

    #[test]
    fn rejects_nonpositive_a() {
        assert!(matches!(
            solve_f_eq_a(0.0, &controls()),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            solve_f_eq_a(-3.0, &controls()),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            solve_t_eq_c(0.0, &controls()),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            solve_t_eq_c(-1.0, &controls()),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn iteration_limit_reports_bracket() {
        let tight = SolverControls {
            max_iters: 2,
            abs_tol: 1e-300,
            rel_tol: 1e-300,
            ..controls()
        };
        match solve_f_eq_a(10.0, &tight) {
            Err(Error::IterationLimit { detail, .. }) => assert!(detail.contains("bracket")),
            other => panic!("expected iteration limit, got {other:?}"),
        }
    }

    #[test]
    fn t_inverse_known_point() {
        // t(1) = ln 2 - 1/2
        let c = std::f64::consts::LN_2 - 0.5;
        let x = solve_t_eq_c(c, &controls()).unwrap();
        assert!((x - 1.0).abs() < 1e-12, "x = {x}");
    }

    #[test]
    fn t_inverse_small_c() {
        let x = solve_t_eq_c(1e-10, &controls()).unwrap();
        let expected = (2e-10f64).sqrt();
        assert!(x > 0.0 && (x - expected).abs() < 1e-3 * expected);
    }

    #[test]
    fn round_trips_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let c = controls();
        for _ in 0..1000 {
            let a = 10f64.powf(rng.gen_range(-6.0..6.0));
            let z = solve_f_eq_a(a, &c).unwrap();
            assert!((f_eval(z) - a).abs() <= c.residual_tol(a) * 1.01, "A = {a}");

            let t_target = rng.gen_range(1e-9..10.0);
            let x = solve_t_eq_c(t_target, &c).unwrap();
            assert!((t_eval(x) - t_target).abs() <= c.residual_tol(t_target) * 1.01);
        }
    }

    #[test]
    fn root_increases_with_a() {
        let c = controls();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut grid: Vec<f64> = (0..200)
            .map(|_| 10f64.powf(rng.gen_range(-4.0..5.0)))
            .collect();
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let roots: Vec<f64> = grid.iter().map(|&a| solve_f_eq_a(a, &c).unwrap()).collect();
        for pair in roots.windows(2) {
            assert!(pair[1] > pair[0]);
        }
    }

    #[test]
    fn warm_start_matches_cold() {
        let c = controls();
        for &target in &[1e-4, 0.3, 2.0, 40.0] {
            let cold = solve_t_eq_c(target, &c).unwrap();
            let warm = solve_t_warm(target, cold * 1.05, &c).unwrap();
            assert!((t_eval(warm) - target).abs() <= c.residual_tol(target) * 1.01);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let c = SolverControls::<f32>::default();
        let z = solve_f_eq_a(10.0f32, &c).unwrap();
        assert!((z - 8.174365).abs() < 1e-3);
    }
}
