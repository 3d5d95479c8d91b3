//! Rough timing of the common-throughput solve across user counts.
use std::time::Instant;
use wpcn_core::common::solve_common;
use wpcn_core::{Controls, Instance};

fn main() {
    let c = Controls::default();
    for k in [2usize, 5, 10] {
        let gamma: Vec<f64> = (1..=k)
            .map(|i| 83.77 * (10.0 / (10.0 * i as f64 / k as f64)).powi(4) / 16.0)
            .collect();
        let instance = Instance::from_gamma(gamma).unwrap();
        let start = Instant::now();
        let reps = 20;
        let mut sol = None;
        for _ in 0..reps {
            sol = Some(solve_common(&instance, &c, None).unwrap());
        }
        let per = start.elapsed() / reps;
        let sol = sol.unwrap();
        println!(
            "K={k}: {per:?} per solve, rate {:.6}, bisections {}",
            sol.common_rate, sol.bisection_iters
        );
    }
}
