//! Command dispatch: builds the result table and metadata for each
//! subcommand and writes them in the requested format.

use std::fmt;
use std::fs::File;
use std::io::Write;

use serde_json::json;
use wpcn_core::common::{
    solve_common, solve_rate_profile, solve_weighted_sum, throughput_region, weighted_kkt_residuals,
};
use wpcn_core::model::evaluate_rates;
use wpcn_core::rootfind::f_eval;
use wpcn_core::sim::{
    conventional_tdma_instance, run_comparison, sweep_pathloss, sweep_users, ComparisonResult,
};
use wpcn_core::sum::{solve_conventional_tdma, solve_sum, sum_kkt_residual};
use wpcn_core::{Error, Report};

use crate::config::{self, Loaded, ProblemSpec};
use crate::manifest::{CommandKind, OutputFormat, RunManifest};
use crate::output::{pretty, render_csv, render_json, Cell, Meta, Table};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solve(Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration: {msg}"),
            CliError::Solve(err) => write!(f, "{err}"),
            CliError::Io(msg) => write!(f, "{msg}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solve(Error::Degenerate { .. }) => 4,
            CliError::Solve(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::Solve(err)
    }
}

pub fn run(manifest: &RunManifest) -> Result<(), CliError> {
    let map = config::read_flat(&manifest.config_path)?;
    let loaded = config::load(&map, manifest.seed_override, manifest.trials_override)?;

    // Claim the output path before doing any work.
    let mut file = match &manifest.output_path {
        Some(path) => Some(
            File::create(path)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        ),
        None => None,
    };

    if manifest.verbosity > 0 {
        eprintln!(
            "running {} on {}",
            manifest.command.name(),
            manifest.config_path.display()
        );
    }
    let (mut meta, table) = dispatch(manifest.command, &loaded)?;
    meta.set_config_echo(&loaded.echo);

    let text = match manifest.output_format {
        OutputFormat::Csv => render_csv(&meta, &table),
        OutputFormat::Json => render_json(&meta, &table),
    };
    match &mut file {
        Some(f) => f
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("write failed: {e}")))?,
        None => {
            print!("{text}");
        }
    }
    if manifest.verbosity > 0 {
        eprintln!("wrote {} result rows", table.rows.len());
    }
    Ok(())
}

fn seed_of(loaded: &Loaded) -> Option<u64> {
    match &loaded.problem {
        ProblemSpec::Physical(s) => Some(s.seed),
        ProblemSpec::Direct { .. } => None,
    }
}

fn dispatch(command: CommandKind, loaded: &Loaded) -> Result<(Meta, Table), CliError> {
    match command {
        CommandKind::SolveSum => solve_sum_cmd(loaded),
        CommandKind::SolveCommon => solve_common_cmd(loaded),
        CommandKind::SolveWeighted => solve_weighted_cmd(loaded),
        CommandKind::SolveProfile => solve_profile_cmd(loaded),
        CommandKind::Region => region_cmd(loaded),
        CommandKind::Simulate => simulate_cmd(loaded),
        CommandKind::SweepAlpha => sweep_alpha_cmd(loaded),
        CommandKind::SweepUsers => sweep_users_cmd(loaded),
        CommandKind::BaselineTdma => baseline_tdma_cmd(loaded),
    }
}

/// Allocation/rate table shared by the solve commands: one row per block
/// entity plus summary rows, with display-rounded companion columns.
fn allocation_table(report: &Report, common_rate: Option<f64>) -> Table {
    let mut table = Table::new(&["entity", "tau", "rate_bpshz", "tau_4dp", "rate_4dp"]);
    let alloc = &report.allocation;
    table.push(vec![
        Cell::Text("dl_wet".into()),
        Cell::Num(alloc.tau0()),
        Cell::Empty,
        pretty(alloc.tau0()),
        Cell::Empty,
    ]);
    for (i, &rate) in report.per_user_rates.iter().enumerate() {
        let slot = alloc.slot(i + 1);
        table.push(vec![
            Cell::Text(format!("user_{}", i + 1)),
            Cell::Num(slot),
            Cell::Num(rate),
            pretty(slot),
            pretty(rate),
        ]);
    }
    table.push(vec![
        Cell::Text("summary_sum".into()),
        Cell::Num(alloc.total()),
        Cell::Num(report.sum_rate),
        pretty(alloc.total()),
        pretty(report.sum_rate),
    ]);
    table.push(vec![
        Cell::Text("summary_min".into()),
        Cell::Empty,
        Cell::Num(report.min_rate),
        Cell::Empty,
        pretty(report.min_rate),
    ]);
    if let Some(rate) = common_rate {
        table.push(vec![
            Cell::Text("summary_common".into()),
            Cell::Empty,
            Cell::Num(rate),
            Cell::Empty,
            pretty(rate),
        ]);
    }
    table
}

fn solve_sum_cmd(loaded: &Loaded) -> Result<(Meta, Table), CliError> {
    let instance = loaded.instance()?;
    let sol = solve_sum(&instance, &loaded.controls)?;
    let mut meta = Meta::new("solve-sum", seed_of(loaded));
    meta.push_num("z_star", sol.z_star);
    meta.push_num("total_snr", sol.total_snr);
    meta.push_num("root_residual", (f_eval(sol.z_star) - sol.total_snr).abs());
    let (nu_ln2, spread) = sum_kkt_residual(&instance, &sol.allocation);
    meta.push_num("stationarity_level", nu_ln2);
    meta.push_num("stationarity_spread", spread);
    Ok((meta, allocation_table(&sol.report, None)))
}

fn solve_common_cmd(loaded: &Loaded) -> Result<(Meta, Table), CliError> {
    let instance = loaded.instance()?;
    let sol = solve_common(&instance, &loaded.controls, None)?;
    let mut meta = Meta::new("solve-common", seed_of(loaded));
    meta.push("bisection_iters", json!(sol.bisection_iters));
    meta.push("converged", json!(sol.converged));
    meta.push("degenerate", json!(sol.degenerate));
    meta.push("bracket", json!([sol.bracket.0, sol.bracket.1]));
    Ok((meta, allocation_table(&sol.report, Some(sol.common_rate))))
}

fn solve_weighted_cmd(loaded: &Loaded) -> Result<(Meta, Table), CliError> {
    let instance = loaded.instance()?;
    let weights = loaded
        .weights
        .clone()
        .ok_or_else(|| CliError::Config("solve-weighted needs a weights key".into()))?;
    if weights.len() != instance.user_count() {
        return Err(CliError::Config(format!(
            "weights length {} does not match the {} users",
            weights.len(),
            instance.user_count()
        )));
    }
    let ws = solve_weighted_sum(&instance, &weights, &loaded.controls)?;
    let report = evaluate_rates(&instance, &ws.allocation)?;
    let mut meta = Meta::new("solve-weighted", seed_of(loaded));
    meta.push("weights", json!(weights.as_slice()));
    meta.push_num("time_price", ws.time_price);
    let (user_res, price_res) = weighted_kkt_residuals(&instance, &weights, &ws);
    meta.push_num("stationarity_residual", user_res);
    meta.push_num("price_residual", price_res);
    meta.push(
        "slot_snrs",
        json!(ws
            .slot_snrs
            .iter()
            .map(|z| if z.is_finite() {
                json!(z)
            } else {
                json!("inf")
            })
            .collect::<Vec<_>>()),
    );
    Ok((meta, allocation_table(&report, None)))
}

fn solve_profile_cmd(loaded: &Loaded) -> Result<(Meta, Table), CliError> {
    let instance = loaded.instance()?;
    let profile = loaded
        .profile
        .clone()
        .ok_or_else(|| CliError::Config("solve-profile needs a beta key".into()))?;
    let sol = solve_rate_profile(&instance, &profile, &loaded.controls)?;
    let mut meta = Meta::new("solve-profile", seed_of(loaded));
    meta.push("beta", json!(profile.as_slice()));
    meta.push("bisection_iters", json!(sol.bisection_iters));
    meta.push("converged", json!(sol.converged));
    meta.push("degenerate", json!(sol.degenerate));
    meta.push("bracket", json!([sol.bracket.0, sol.bracket.1]));
    Ok((meta, allocation_table(&sol.report, Some(sol.common_rate))))
}

fn region_cmd(loaded: &Loaded) -> Result<(Meta, Table), CliError> {
    let instance = loaded.instance()?;
    let points = throughput_region(&instance, loaded.n_weights, &loaded.controls)?;
    let users = instance.user_count();
    let mut columns: Vec<String> = vec!["point".into()];
    for i in 1..=users {
        columns.push(format!("weight_{i}"));
    }
    for i in 1..=users {
        columns.push(format!("rate_{i}_bpshz"));
    }
    columns.push("sum_bpshz".into());
    let column_refs: Vec<&str> = columns.iter().map(|s| s.as_str()).collect();
    let mut table = Table::new(&column_refs);
    for (idx, point) in points.iter().enumerate() {
        let mut row = vec![Cell::Int(idx as i64)];
        row.extend(point.weights.iter().map(|&w| Cell::Num(w)));
        row.extend(point.rates.iter().map(|&r| Cell::Num(r)));
        row.push(Cell::Num(point.sum_rate));
        table.push(row);
    }
    let mut meta = Meta::new("region", seed_of(loaded));
    meta.push("n_weights", json!(loaded.n_weights));
    Ok((meta, table))
}

fn comparison_rows(table: &mut Table, prefix: &[Cell], result: &ComparisonResult) {
    for stats in &result.stats {
        let scheme = Cell::Text(stats.scheme.name().into());
        let mut push = |metric: &str, value: f64| {
            let mut row = prefix.to_vec();
            row.push(scheme.clone());
            row.push(Cell::Text(metric.into()));
            row.push(Cell::Num(value));
            row.push(pretty(value));
            table.push(row);
        };
        for (i, &rate) in stats.mean_per_user_rate.iter().enumerate() {
            push(&format!("mean_rate_user_{}", i + 1), rate);
        }
        push("mean_sum_rate", stats.mean_sum_rate);
        push(
            "mean_sum_rate_normalized",
            stats.mean_sum_rate / stats.mean_per_user_rate.len() as f64,
        );
        push("mean_min_rate", stats.mean_min_rate);
        if let Some(ratio) = stats.mean_slot_ratio_last_first {
            push("mean_slot_ratio_last_first", ratio);
        }
    }
}

fn simulate_cmd(loaded: &Loaded) -> Result<(Meta, Table), CliError> {
    let scenario = loaded.scenario()?;
    let result = run_comparison(scenario, &loaded.schemes, &loaded.controls)?;
    let mut meta = Meta::new("simulate", Some(result.seed));
    meta.push("trials_requested", json!(result.trials_requested));
    meta.push("trials_used", json!(result.trials_used));
    meta.push("failed_trials", json!(result.failed_trials));
    meta.push(
        "tdma_energy_reference",
        json!("harvested at the sum-optimal downlink slot of the same trial"),
    );
    let mut table = Table::new(&["scheme", "metric", "value", "value_4dp"]);
    comparison_rows(&mut table, &[], &result);
    Ok((meta, table))
}

fn sweep_alpha_cmd(loaded: &Loaded) -> Result<(Meta, Table), CliError> {
    let scenario = loaded.scenario()?;
    let sweep = sweep_pathloss(scenario, &loaded.alphas, &loaded.schemes, &loaded.controls)?;
    let mut meta = Meta::new("sweep-alpha", Some(scenario.seed));
    meta.push("alphas", json!(loaded.alphas));
    let mut table = Table::new(&["alpha", "scheme", "metric", "value", "value_4dp"]);
    for (alpha, result) in &sweep {
        comparison_rows(&mut table, &[Cell::Num(*alpha)], result);
    }
    Ok((meta, table))
}

fn sweep_users_cmd(loaded: &Loaded) -> Result<(Meta, Table), CliError> {
    let scenario = loaded.scenario()?;
    let sweep = sweep_users(
        scenario,
        &loaded.k_values,
        &loaded.schemes,
        &loaded.controls,
    )?;
    let mut meta = Meta::new("sweep-users", Some(scenario.seed));
    meta.push("k_values", json!(loaded.k_values));
    meta.push(
        "max_distance_m",
        json!(scenario
            .user_distances
            .iter()
            .cloned()
            .fold(f64::NAN, f64::max)),
    );
    let mut table = Table::new(&["users", "scheme", "metric", "value", "value_4dp"]);
    for (k, result) in &sweep {
        comparison_rows(&mut table, &[Cell::Int(*k as i64)], result);
    }
    Ok((meta, table))
}

fn baseline_tdma_cmd(loaded: &Loaded) -> Result<(Meta, Table), CliError> {
    let mut meta = Meta::new("baseline-tdma", seed_of(loaded));
    let sol = match &loaded.problem {
        // a direct vector is taken as the TDMA effective SNRs themselves
        ProblemSpec::Direct { gamma } => {
            let instance = wpcn_core::Instance::from_gamma(gamma.clone())?;
            solve_conventional_tdma(&instance)?
        }
        // a physical scenario derives the equal energy budget from the
        // harvest-then-transmit reference on the same (trial 0) channels
        ProblemSpec::Physical(scenario) => {
            let channels = wpcn_core::sim::draw_channels(scenario, 0)?;
            let wpcn = wpcn_core::model::effective_snr(&scenario.physical, &channels)?;
            let reference = solve_sum(&wpcn, &loaded.controls)?;
            let tdma = conventional_tdma_instance(scenario, &channels, &reference)?;
            meta.push_num("reference_tau0", reference.allocation.tau0());
            meta.push("gamma_tdma", json!(tdma.gamma));
            solve_conventional_tdma(&tdma)?
        }
    };
    Ok((meta, allocation_table(&sol.report, None)))
}
