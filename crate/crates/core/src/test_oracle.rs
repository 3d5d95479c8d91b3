//! Brute-force enumeration oracles for unit tests: coarse simplex grid plus
//! one local refinement around the coarse argmax. Valid as global maximizers
//! because both objectives (sum rate and min rate) are concave on the
//! simplex. Deliberately shares no code with the solvers.

fn rate(gamma: f64, tau0: f64, tau: f64) -> f64 {
    if tau > 0.0 {
        tau * (1.0 + gamma * tau0 / tau).log2()
    } else {
        0.0
    }
}

fn sum_objective(gamma: &[f64], point: &[f64]) -> f64 {
    gamma
        .iter()
        .zip(&point[1..])
        .map(|(&g, &t)| rate(g, point[0], t))
        .sum()
}

fn min_objective(gamma: &[f64], point: &[f64]) -> f64 {
    gamma
        .iter()
        .zip(&point[1..])
        .map(|(&g, &t)| rate(g, point[0], t))
        .fold(f64::INFINITY, f64::min)
}

/// Min of `R_i/β_i`; with β = (1/K,...) this is K · min rate.
fn profile_objective(gamma: &[f64], beta: &[f64], point: &[f64]) -> f64 {
    gamma
        .iter()
        .zip(beta)
        .zip(&point[1..])
        .map(|((&g, &b), &t)| rate(g, point[0], t) / b)
        .fold(f64::INFINITY, f64::min)
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

fn refine_box(center: &[f64], radius: f64, step: f64, visit: &mut dyn FnMut(&[f64])) {
    let fine = step;
    let free = center.len() - 1;
    let steps = (2.0 * radius / fine).round() as usize;
    let mut idx = vec![0usize; free];
    loop {
        let mut point = Vec::with_capacity(center.len());
        let mut used = 0.0;
        let mut ok = true;
        for d in 0..free {
            let v = center[d] - radius + idx[d] as f64 * fine;
            if v < 0.0 {
                ok = false;
                break;
            }
            used += v;
            point.push(v);
        }
        if ok && used <= 1.0 + 1e-12 {
            point.push((1.0 - used).max(0.0));
            visit(&point);
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

fn grid_optimize(dims: usize, coarse: usize, fine: f64, eval: &dyn Fn(&[f64]) -> f64) -> f64 {
    let mut best_v = f64::NEG_INFINITY;
    let mut best_p = vec![0.0; dims];
    enumerate_simplex(dims, coarse, &mut |p| {
        let v = eval(p);
        if v > best_v {
            best_v = v;
            best_p = p.to_vec();
        }
    });
    let radius = 2.0 / coarse as f64;
    let center = best_p.clone();
    refine_box(&center, radius, fine, &mut |p| {
        let v = eval(p);
        if v > best_v {
            best_v = v;
            best_p = p.to_vec();
        }
    });
    // second, tighter pass: the min-rate objective is kinked and loses
    // first-order accuracy to lattice offset without it
    let center = best_p.clone();
    refine_box(&center, 2.0 * fine, fine / 10.0, &mut |p| {
        let v = eval(p);
        if v > best_v {
            best_v = v;
        }
    });
    best_v
}

/// Grid-search maximum of the sum rate.
pub fn grid_max_sum(gamma: &[f64], coarse: usize, fine: f64) -> f64 {
    grid_optimize(gamma.len() + 1, coarse, fine, &|p| sum_objective(gamma, p))
}

/// Grid-search maximum of the minimum per-user rate.
pub fn grid_max_min(gamma: &[f64], coarse: usize, fine: f64) -> f64 {
    grid_optimize(gamma.len() + 1, coarse, fine, &|p| min_objective(gamma, p))
}

/// Grid-search maximum of `min_i R_i/β_i` (the profile-constrained sum).
pub fn grid_max_profile(gamma: &[f64], beta: &[f64], coarse: usize, fine: f64) -> f64 {
    grid_optimize(gamma.len() + 1, coarse, fine, &|p| {
        profile_objective(gamma, beta, p)
    })
}
