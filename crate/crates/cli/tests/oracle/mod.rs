//! Test-local enumeration oracle: simplex lattice search at resolution 1e-3
//! with one finer local refinement pass. Shares nothing with the solvers.
//!
//! The refinement step is much finer for the minimum-rate objective: its
//! surface is kinked at rate crossings, so the lattice value trails the true
//! optimum by (slope × step) rather than the quadratic falloff a smooth
//! objective enjoys, and slopes reach ~10 bps/Hz per unit slot time at the
//! top of the SNR range.

pub fn oracle_rate(gamma: f64, tau0: f64, tau: f64) -> f64 {
    if tau > 0.0 {
        tau * (1.0 + gamma * tau0 / tau).log2()
    } else {
        0.0
    }
}

fn enumerate_simplex(dims: usize, steps: usize, visit: &mut dyn FnMut(&[f64])) {
    fn rec(
        point: &mut Vec<usize>,
        idx: usize,
        remaining: usize,
        steps: usize,
        visit: &mut dyn FnMut(&[f64]),
    ) {
        if idx + 1 == point.len() {
            point[idx] = remaining;
            let scaled: Vec<f64> = point.iter().map(|&k| k as f64 / steps as f64).collect();
            visit(&scaled);
            return;
        }
        for k in 0..=remaining {
            point[idx] = k;
            rec(point, idx + 1, remaining - k, steps, visit);
        }
    }
    let mut point = vec![0usize; dims];
    rec(&mut point, 0, steps, steps, visit);
}

fn box_scan(
    center: &[f64],
    radius: f64,
    step: f64,
    eval: &dyn Fn(&[f64]) -> f64,
    best_v: &mut f64,
    best_p: &mut Vec<f64>,
) {
    let free = center.len() - 1;
    let steps = (2.0 * radius / step).round() as usize;
    let mut idx = vec![0usize; free];
    let mut point = vec![0.0; free + 1];
    loop {
        let mut used = 0.0;
        let mut ok = true;
        for d in 0..free {
            let v = center[d] - radius + idx[d] as f64 * step;
            if v < 0.0 {
                ok = false;
                break;
            }
            used += v;
            point[d] = v;
        }
        if ok && used <= 1.0 + 1e-12 {
            point[free] = (1.0 - used).max(0.0);
            let v = eval(&point);
            if v > *best_v {
                *best_v = v;
                *best_p = point.clone();
            }
        }
        let mut d = 0;
        loop {
            if d == free {
                return;
            }
            idx[d] += 1;
            if idx[d] <= steps {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Exhaustive 1e-3 lattice maximum of the minimum rate, with subtree pruning
/// against a known-achievable floor (any prefix whose running minimum cannot
/// beat it is skipped; rates only shrink the minimum further down).
fn lattice_max_min(gamma: &[f64], floor: f64) -> f64 {
    const N: usize = 1000;
    fn descend(
        gamma: &[f64],
        user: usize,
        tau0: f64,
        remaining_steps: usize,
        prefix_min: f64,
        best: &mut f64,
    ) {
        if user + 1 == gamma.len() {
            // last user takes the whole remaining budget
            let tau = remaining_steps as f64 / N as f64;
            let v = prefix_min.min(oracle_rate(gamma[user], tau0, tau));
            if v > *best {
                *best = v;
            }
            return;
        }
        for k in 0..=remaining_steps {
            let tau = k as f64 / N as f64;
            let m = prefix_min.min(oracle_rate(gamma[user], tau0, tau));
            if m > *best {
                descend(gamma, user + 1, tau0, remaining_steps - k, m, best);
            }
        }
    }
    let mut best = floor;
    for k0 in 0..=N {
        let tau0 = k0 as f64 / N as f64;
        descend(gamma, 0, tau0, N - k0, f64::INFINITY, &mut best);
    }
    best
}

pub fn grid_search(gamma: &[f64], minimum_rate: bool) -> f64 {
    let eval = move |p: &[f64]| -> f64 {
        let rates = gamma
            .iter()
            .zip(&p[1..])
            .map(|(&g, &t)| oracle_rate(g, p[0], t));
        if minimum_rate {
            rates.fold(f64::INFINITY, f64::min)
        } else {
            rates.sum()
        }
    };
    let coarse = 100usize;
    let mut best_v = f64::NEG_INFINITY;
    let mut best_p = vec![0.0; gamma.len() + 1];
    enumerate_simplex(gamma.len() + 1, coarse, &mut |p| {
        let v = eval(p);
        if v > best_v {
            best_v = v;
            best_p = p.to_vec();
        }
    });
    let center = best_p.clone();
    box_scan(
        &center,
        2.0 / coarse as f64,
        1e-3,
        &eval,
        &mut best_v,
        &mut best_p,
    );
    let fine = if minimum_rate { 2e-5 } else { 1e-4 };
    let center = best_p.clone();
    box_scan(&center, 2e-3, fine, &eval, &mut best_v, &mut best_p);
    if minimum_rate {
        // the kinked minimum can strand the local cascade on the wrong
        // downlink slice; the pruned full lattice recovers it
        best_v = lattice_max_min(gamma, best_v);
    }
    best_v
}
