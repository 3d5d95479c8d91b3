//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]`/failure line (run with `--nocapture` to see them all).
//!
//! Criteria A2 (reference rate triple) and A9d (normalized sum over the
//! user sweep) assert reference values that are inconsistent with the rate
//! model itself; they are kept as stated and fail with the computed values
//! in the message rather than being loosened to pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use wpcn_core::common::{solve_common, solve_weighted_sum, weighted_kkt_residuals, Weights};
use wpcn_core::model::{evaluate_rates, rate_hessian};
use wpcn_core::rootfind::solve_f_eq_a;
use wpcn_core::sim::{run_trial, sweep_users, Fading, ScenarioConfig, Scheme};
use wpcn_core::sum::{solve_sum, tau0_alternative_form};
use wpcn_core::{Allocation, Controls, Instance, Params};

fn controls() -> Controls {
    Controls::default()
}

fn inst(gamma: &[f64]) -> Instance {
    Instance::from_gamma(gamma.to_vec()).unwrap()
}

fn fig4() -> Instance {
    inst(&[10f64.powf(2.2), 10.0])
}

/// Best runtime of a few repetitions, so load from parallel tests does not
/// contaminate single-solve timing claims.
fn best_runtime<T>(mut f: impl FnMut() -> T) -> (T, std::time::Duration) {
    let mut best = std::time::Duration::MAX;
    let mut out = None;
    for _ in 0..5 {
        let start = Instant::now();
        out = Some(f());
        best = best.min(start.elapsed());
    }
    (out.unwrap(), best)
}

mod oracle;
use oracle::{grid_search, oracle_rate};

// Diagnostic (run with --ignored): worst oracle-vs-solver gaps across many
// seeds, for revalidating the enumeration oracle's accuracy margin after
// solver or oracle changes.
#[test]
#[ignore]
fn probe_oracle_gaps() {
    let c = controls();
    let mut worst_min = (0.0f64, vec![]);
    let mut worst_sum = (0.0f64, vec![]);
    for seed in [0x0A4u64, 1, 2, 3, 4, 5] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let users = rng.gen_range(1..=3);
            let gamma: Vec<f64> = (0..users).map(|_| rng.gen_range(0.1..300.0)).collect();
            let instance = inst(&gamma);
            let s = solve_sum(&instance, &c).unwrap().report.sum_rate;
            let so = grid_search(&gamma, false);
            if (s - so).abs() > worst_sum.0 {
                worst_sum = ((s - so).abs(), gamma.clone());
            }
            let m = solve_common(&instance, &c, None).unwrap().common_rate;
            let mo = grid_search(&gamma, true);
            if (m - mo).abs() > worst_min.0 {
                worst_min = ((m - mo).abs(), gamma.clone());
            }
        }
        println!(
            "after seed {seed}: worst sum gap {:.3e}, worst min gap {:.3e}",
            worst_sum.0, worst_min.0
        );
    }
    println!("worst min on {:?}", worst_min.1);
    println!("worst sum on {:?}", worst_sum.1);
}

// ---------------------------------------------------------------------------

#[test]
fn a01_single_user_downlink_fraction() {
    let instance = inst(&[10.0]);
    let c = controls();
    let (sol, runtime) = best_runtime(|| solve_sum(&instance, &c).unwrap());
    let tau0 = sol.allocation.tau0();
    assert!(
        (tau0 - 0.42).abs() <= 0.01,
        "tau0 {tau0} outside 0.42 +/- 0.01"
    );
    assert!((tau0 - 0.417736830824802).abs() < 1e-12);
    assert!(runtime.as_micros() < 1000, "runtime {runtime:?} >= 1 ms");
    println!("[PASS] A01 single-user downlink fraction: tau0 = {tau0:.6} (0.42 +/- 0.01), solve {runtime:?}");
}

#[test]
fn a02_two_user_sum_optimum() {
    let instance = fig4();
    let c = controls();
    let (sol, runtime) = best_runtime(|| solve_sum(&instance, &c).unwrap());
    let tau = sol.allocation.as_slice();
    let reference = [0.2441, 0.7114, 0.0445];
    for (i, (&t, &r)) in tau.iter().zip(&reference).enumerate() {
        assert!((t - r).abs() <= 1e-3, "tau[{i}] = {t} vs {r} +/- 1e-3");
    }
    assert!(runtime.as_micros() < 1000, "runtime {runtime:?} >= 1 ms");
    println!(
        "[PASS] A02 (allocation half): tau = [{:.4}, {:.4}, {:.4}] within 1e-3 of [0.2441, 0.7114, 0.0445], solve {runtime:?}",
        tau[0], tau[1], tau[2]
    );
    let rates = (
        sol.report.per_user_rates[0],
        sol.report.per_user_rates[1],
        sol.report.sum_rate,
    );
    let rate_refs = (4.13, 0.45, 4.58);
    let ok = (rates.0 - rate_refs.0).abs() <= 0.01
        && (rates.1 - rate_refs.1).abs() <= 0.01
        && (rates.2 - rate_refs.2).abs() <= 0.01;
    assert!(
        ok,
        "[FAIL] A02 (rate half): computed rates ({:.4}, {:.4}, sum {:.4}) vs required ({}, {}, sum {}) +/- 0.01; \
         the required triple is not consistent with the rate model at the required allocation \
         (rates there evaluate to 4.1200/0.2583/4.3782), so this criterion cannot hold together \
         with the allocation half",
        rates.0, rates.1, rates.2, rate_refs.0, rate_refs.1, rate_refs.2
    );
    println!("[PASS] A02 two-user sum optimum");
}

#[test]
fn a03_common_throughput() {
    let instance = fig4();
    let c = controls();
    let start = Instant::now();
    let sol = solve_common(&instance, &c, None).unwrap();
    let runtime = start.elapsed();
    assert!(
        (sol.common_rate - 1.46).abs() <= 0.02,
        "common rate {} outside 1.46 +/- 0.02",
        sol.common_rate
    );
    let r = &sol.report.per_user_rates;
    assert!((r[0] - r[1]).abs() <= 1e-6, "rates not equal: {r:?}");
    assert!((sol.allocation.total() - 1.0).abs() <= 1e-9);
    assert!(runtime.as_secs_f64() < 1.0, "runtime {runtime:?} >= 1 s");
    println!(
        "[PASS] A03 common throughput: {:.6} bps/Hz (1.46 +/- 0.02), equal rates, full block, solve {runtime:?}",
        sol.common_rate
    );
}

#[test]
fn a04_oracle_equivalence() {
    let start = Instant::now();
    let c = controls();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0A4);
    let mut worst_sum = 0.0f64;
    let mut worst_min = 0.0f64;
    for case in 0..50 {
        let users = rng.gen_range(1..=3);
        let gamma: Vec<f64> = (0..users).map(|_| rng.gen_range(0.1..300.0)).collect();
        let instance = inst(&gamma);

        let sum_sol = solve_sum(&instance, &c).unwrap();
        let sum_oracle = grid_search(&gamma, false);
        let gap = sum_sol.report.sum_rate - sum_oracle;
        assert!(gap >= -1e-9, "case {case}: solver below oracle by {gap}");
        assert!(gap.abs() <= 1e-3, "case {case}: sum gap {gap} on {gamma:?}");
        worst_sum = worst_sum.max(gap.abs());

        let common_sol = solve_common(&instance, &c, None).unwrap();
        let min_oracle = grid_search(&gamma, true);
        let gap = common_sol.common_rate - min_oracle;
        assert!(
            gap.abs() <= 1e-3,
            "case {case}: common gap {gap} on {gamma:?}"
        );
        worst_min = worst_min.max(gap.abs());
    }
    let runtime = start.elapsed();
    assert!(runtime.as_secs() < 120, "runtime {runtime:?} >= 2 min");
    println!(
        "[PASS] A04 oracle equivalence: 50 instances, worst |sum gap| {worst_sum:.2e}, worst |common gap| {worst_min:.2e}, total {runtime:?}"
    );
}

#[test]
fn a05_weighted_kkt_residuals() {
    let c = controls();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0A5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let users = rng.gen_range(1..=4);
        let gamma: Vec<f64> = (0..users).map(|_| rng.gen_range(0.1..300.0)).collect();
        let lambda: Vec<f64> = (0..users).map(|_| rng.gen_range(0.1..1.0)).collect();
        let instance = inst(&gamma);
        let weights = Weights::new(lambda).unwrap();
        let ws = solve_weighted_sum(&instance, &weights, &c).unwrap();
        let (user_res, price_res) = weighted_kkt_residuals(&instance, &weights, &ws);
        assert!(user_res <= 1e-9, "per-user residual {user_res}");
        assert!(price_res <= 1e-9, "price residual {price_res}");
        worst = worst.max(user_res).max(price_res);
    }
    // unit weights reproduce the closed form
    let mut worst_entry = 0.0f64;
    for _ in 0..100 {
        let users = rng.gen_range(1..=4);
        let gamma: Vec<f64> = (0..users).map(|_| rng.gen_range(0.1..300.0)).collect();
        let instance = inst(&gamma);
        let ws = solve_weighted_sum(&instance, &Weights::uniform(users).unwrap(), &c).unwrap();
        let sum = solve_sum(&instance, &c).unwrap();
        for (a, b) in ws
            .allocation
            .as_slice()
            .iter()
            .zip(sum.allocation.as_slice())
        {
            assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
            worst_entry = worst_entry.max((a - b).abs());
        }
    }
    println!(
        "[PASS] A05 weighted stationarity: 200 pairs, worst residual {worst:.2e}; unit weights match closed form to {worst_entry:.2e}"
    );
}

#[test]
fn a06_concavity_and_hessian() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0A6);
    // midpoint concavity on 1000 random triples
    for _ in 0..1000 {
        let users = rng.gen_range(1..=5);
        let gamma: Vec<f64> = (0..users).map(|_| rng.gen_range(1e-3..100.0)).collect();
        let instance = inst(&gamma);
        let draw = |rng: &mut ChaCha8Rng| -> Allocation {
            let raw: Vec<f64> = (0..=users).map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            Allocation::new(raw.into_iter().map(|x| x / total).collect()).unwrap()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let mid = Allocation::new(
            a.as_slice()
                .iter()
                .zip(b.as_slice())
                .map(|(&x, &y)| 0.5 * (x + y))
                .collect(),
        )
        .unwrap();
        let ra = evaluate_rates(&instance, &a).unwrap().sum_rate;
        let rb = evaluate_rates(&instance, &b).unwrap().sum_rate;
        let rm = evaluate_rates(&instance, &mid).unwrap().sum_rate;
        assert!(rm >= 0.5 * (ra + rb) - 1e-9, "concavity violated");
    }

    // analytic Hessian vs central differences on 100 interior points
    let h = 1e-5;
    let mut worst_rel = 0.0f64;
    for _ in 0..100 {
        let users = rng.gen_range(1..=4);
        let gamma: Vec<f64> = (0..users).map(|_| rng.gen_range(1.0..100.0)).collect();
        let instance = inst(&gamma);
        let raw: Vec<f64> = (0..=users).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let alloc = Allocation::new(raw.iter().map(|x| x / total).collect()).unwrap();
        let user = rng.gen_range(1..=users);
        let analytic = rate_hessian(&instance, &alloc, user).unwrap();

        let g = gamma[user - 1];
        let tau = alloc.as_slice();
        let f = |t: &[f64]| oracle_rate(g, t[0], t[user]);
        let n = tau.len();
        let mut fd = vec![vec![0.0; n]; n];
        for j in 0..n {
            for m in 0..n {
                let mut tpp = tau.to_vec();
                let mut tpm = tau.to_vec();
                let mut tmp = tau.to_vec();
                let mut tmm = tau.to_vec();
                if j == m {
                    tpp[j] += h;
                    tmm[j] -= h;
                    fd[j][m] = (f(&tpp) - 2.0 * f(tau) + f(&tmm)) / (h * h);
                } else {
                    tpp[j] += h;
                    tpp[m] += h;
                    tpm[j] += h;
                    tpm[m] -= h;
                    tmp[j] -= h;
                    tmp[m] += h;
                    tmm[j] -= h;
                    tmm[m] -= h;
                    fd[j][m] = (f(&tpp) - f(&tpm) - f(&tmp) + f(&tmm)) / (4.0 * h * h);
                }
            }
        }
        let scale = analytic
            .iter()
            .flatten()
            .fold(0.0f64, |acc, &x| acc.max(x.abs()))
            .max(1.0);
        for (ra, rf) in analytic.iter().zip(&fd) {
            for (&a, &fdv) in ra.iter().zip(rf) {
                let rel = (a - fdv).abs() / scale;
                assert!(rel <= 1e-5, "entry {a} vs fd {fdv} (scale {scale})");
                worst_rel = worst_rel.max(rel);
            }
        }

        // negative semidefiniteness on 100 random directions
        for _ in 0..100 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut quad = 0.0;
            for j in 0..n {
                for m in 0..n {
                    quad += v[j] * analytic[j][m] * v[m];
                }
            }
            assert!(quad <= 1e-12, "v'Hv = {quad}");
        }
    }
    println!(
        "[PASS] A06 concavity (1000 triples) and Hessian consistency (100 points, worst rel {worst_rel:.2e}, v'Hv <= 1e-12)"
    );
}

#[test]
fn a07_downlink_fraction_monotone() {
    let c = controls();
    let grid = [0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0, 1000.0];
    let mut previous = f64::INFINITY;
    let mut worst_form_gap = 0.0f64;
    for &a in &grid {
        let z = solve_f_eq_a(a, &c).unwrap();
        let direct = (z - 1.0) / (a + z - 1.0);
        let alternative = tau0_alternative_form(z).unwrap();
        let gap = (direct - alternative).abs();
        assert!(gap <= 1e-12, "A = {a}: form gap {gap}");
        worst_form_gap = worst_form_gap.max(gap);
        assert!(direct < previous, "tau0 not strictly decreasing at A = {a}");
        previous = direct;
    }
    println!(
        "[PASS] A07 downlink fraction strictly decreasing over 8 levels; closed forms agree to {worst_form_gap:.2e}"
    );
}

#[test]
fn a08_near_far_slot_ratio_flip() {
    let c = controls();
    let g1 = 10f64.powf(2.2);
    let mut previous_common_ratio = 0.0;
    for &alpha in &[2.0, 2.5, 3.0, 3.5, 4.0] {
        let expected = 2f64.powf(-2.0 * alpha); // (D1/D2)^{2a} with D2 = 2 D1
        let gamma = [g1, g1 * expected];
        let instance = inst(&gamma);
        let sum = solve_sum(&instance, &c).unwrap();
        let sum_ratio = sum.allocation.slot(2) / sum.allocation.slot(1);
        assert!(
            (sum_ratio - expected).abs() <= 1e-10,
            "alpha {alpha}: sum slot ratio {sum_ratio} vs {expected}"
        );
        let common = solve_common(&instance, &c, None).unwrap();
        let common_ratio = common.allocation.slot(2) / common.allocation.slot(1);
        assert!(
            common_ratio > 1.0,
            "alpha {alpha}: common ratio {common_ratio} <= 1"
        );
        assert!(
            common_ratio > previous_common_ratio,
            "alpha {alpha}: common ratio {common_ratio} not increasing"
        );
        previous_common_ratio = common_ratio;
    }
    println!(
        "[PASS] A08 near-far flip: sum slot ratio equals (D1/D2)^(2a) to 1e-10; common ratio > 1 and increasing (up to {previous_common_ratio:.3})"
    );
}

#[test]
fn a09_monte_carlo_trends() {
    let start = Instant::now();
    let c = controls();
    let physical = Params {
        transmit_power_hap: 0.1,
        harvest_efficiency: 0.5,
        snr_gap: 10f64.powf(0.98),
        noise_power: 1e-13,
        energy_use_fraction: 1.0,
        bandwidth_hz: 1e6,
    };
    let config = ScenarioConfig {
        user_distances: vec![5.0, 10.0],
        pathloss_exponent_dl: 2.0,
        pathloss_exponent_ul: 2.0,
        reference_loss_db: 30.0,
        fading: Fading::Rayleigh,
        physical,
        trials: 200,
        seed: 0x5ec,
    };
    let schemes = [Scheme::SumOpt, Scheme::CommonOpt, Scheme::Eta];

    // (a)-(c) on the two-user scenario, per-trial where demanded
    let mut mean_rates = [0.0f64; 2];
    let mut mean_sum = 0.0f64;
    let mut mean_common = 0.0f64;
    for trial in 0..config.trials {
        let result = run_trial(&config, &schemes, &c, trial).unwrap();
        let by: std::collections::BTreeMap<_, _> =
            result.solutions.iter().map(|(s, r)| (*s, r)).collect();
        let sum_opt = &by[&Scheme::SumOpt];
        let common = &by[&Scheme::CommonOpt];
        let eta = &by[&Scheme::Eta];
        assert!(
            sum_opt.sum_rate >= eta.sum_rate - 1e-9,
            "trial {trial}: sum-optimal below equal-time"
        );
        assert!(
            common.min_rate >= eta.min_rate - 1e-4,
            "trial {trial}: common optimum below equal-time minimum"
        );
        mean_rates[0] += sum_opt.per_user_rates[0];
        mean_rates[1] += sum_opt.per_user_rates[1];
        mean_sum += sum_opt.sum_rate;
        mean_common += common.min_rate;
    }
    let n = config.trials as f64;
    mean_rates[0] /= n;
    mean_rates[1] /= n;
    mean_sum /= n;
    mean_common /= n;
    assert!(
        mean_rates[0] > 3.0 * mean_rates[1],
        "(a) near/far factor {} <= 3",
        mean_rates[0] / mean_rates[1]
    );
    println!(
        "[pass] A09a near user dominates: {:.3} vs {:.3} bps/Hz (factor {:.1})",
        mean_rates[0],
        mean_rates[1],
        mean_rates[0] / mean_rates[1]
    );
    assert!(
        mean_common < mean_sum / 2.0,
        "(b) common {mean_common} not below normalized sum {}",
        mean_sum / 2.0
    );
    println!(
        "[pass] A09b fairness price: common {mean_common:.3} < sum/K {:.3}",
        mean_sum / 2.0
    );
    println!("[pass] A09c per-trial dominance over equal-time held on all 200 trials");

    // (d) monotonicity over the user sweep
    let sweep = sweep_users(
        &config,
        &[1, 2, 5, 10],
        &[Scheme::SumOpt, Scheme::CommonOpt],
        &c,
    )
    .unwrap();
    let commons: Vec<f64> = sweep
        .iter()
        .map(|(_, r)| r.stats[1].mean_min_rate)
        .collect();
    let normalized_sums: Vec<f64> = sweep
        .iter()
        .map(|(k, r)| r.stats[0].mean_sum_rate / *k as f64)
        .collect();
    for (i, pair) in commons.windows(2).enumerate() {
        assert!(
            pair[1] < pair[0],
            "(d) common rate not decreasing at step {i}: {commons:?}"
        );
    }
    println!("[pass] A09d common rate decreases over K: {commons:?}");
    let runtime = start.elapsed();
    assert!(runtime.as_secs() < 300, "runtime {runtime:?} >= 5 min");
    for (i, pair) in normalized_sums.windows(2).enumerate() {
        assert!(
            pair[1] < pair[0],
            "[FAIL] A09 (d, normalized sum): not decreasing at step {i}: K = [1, 2, 5, 10] give {normalized_sums:?}; \
             with users at D_i = (10 m / K)·i the K = 2 pool gains a 5 m user whose effective SNR \
             is 16x the 10 m user's, so the normalized sum rises from K = 1 to K = 2 before \
             decaying -- the monotone-decrease requirement cannot hold from K = 1",
        );
    }
    println!("[PASS] A09 Monte Carlo trends ({runtime:?})");
}

#[test]
fn a10_simulate_determinism() {
    let dir = std::env::temp_dir().join(format!("wpcn-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("scenario.toml");
    std::fs::write(
        &cfg,
        "distances_m = [5.0, 10.0]\nfading = \"rayleigh\"\nseed = 31\ntrials = 50\n",
    )
    .unwrap();
    let out_a = dir.join("a.csv");
    let out_b = dir.join("b.csv");
    for out in [&out_a, &out_b] {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_wpcn"))
            .args([
                "simulate",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "same seed produced different bytes");
    println!(
        "[PASS] A10 determinism: two seeded simulate runs are byte-identical ({} bytes)",
        a.len()
    );
}
