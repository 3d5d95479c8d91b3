//! Flat key-value configuration.
//!
//! A config file is TOML with only scalars and flat arrays, e.g.
//!
//! ```toml
//! gamma_db = [22.0, 10.0]
//! rel_tol = 1e-12
//! ```
//!
//! or the JSON written by a previous run (its `meta.config` object is the
//! resolved configuration, so outputs can be replayed as inputs). dB and dBm
//! values are converted to linear units here and nowhere else.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use wpcn_core::sim::{Fading, ScenarioConfig, Scheme};
use wpcn_core::{Controls, Instance, Params, RateProfile, Weights};

use crate::run::CliError;

/// A scalar or flat-array configuration value.
#[derive(Debug, Clone, PartialEq)]
pub enum Flat {
    Number(f64),
    Integer(i64),
    Text(String),
    Numbers(Vec<f64>),
    Integers(Vec<i64>),
    Texts(Vec<String>),
}

impl Flat {
    fn kind(&self) -> &'static str {
        match self {
            Flat::Number(_) => "number",
            Flat::Integer(_) => "integer",
            Flat::Text(_) => "string",
            Flat::Numbers(_) => "number list",
            Flat::Integers(_) => "integer list",
            Flat::Texts(_) => "string list",
        }
    }
}

impl fmt::Display for Flat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flat::Number(x) => write!(f, "{x}"),
            Flat::Integer(x) => write!(f, "{x}"),
            Flat::Text(s) => write!(f, "{s:?}"),
            Flat::Numbers(v) => {
                write!(f, "[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
            Flat::Integers(v) => write!(f, "{v:?}"),
            Flat::Texts(v) => write!(f, "{v:?}"),
        }
    }
}

pub type FlatMap = BTreeMap<String, Flat>;

/// Keys the loader understands; anything else is rejected by name.
const KNOWN_KEYS: &[&str] = &[
    // instance
    "gamma_db",
    "gamma_linear",
    // physical scenario
    "distances_m",
    "alpha",
    "alpha_dl",
    "alpha_ul",
    "reference_loss_db",
    "fading",
    "tx_power_dbm",
    "noise_dbm",
    "harvest_efficiency",
    "snr_gap_db",
    "energy_use_fraction",
    "bandwidth_hz",
    "trials",
    "seed",
    // per-command inputs
    "weights",
    "beta",
    "n_weights",
    "alphas",
    "k_values",
    "schemes",
    // solver controls
    "rel_tol",
    "abs_tol",
    "max_iters",
    "bisection_tol",
    "rate_tol",
    "ellipsoid_gap_tol",
    "ellipsoid_max_iters",
];

fn config_err(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

fn toml_to_flat(key: &str, value: &toml::Value) -> Result<Flat, CliError> {
    match value {
        toml::Value::Float(x) => Ok(Flat::Number(*x)),
        toml::Value::Integer(x) => Ok(Flat::Integer(*x)),
        toml::Value::String(s) => Ok(Flat::Text(s.clone())),
        toml::Value::Boolean(_) | toml::Value::Datetime(_) => {
            Err(config_err(format!("key {key}: unsupported value type")))
        }
        toml::Value::Array(items) => {
            if items.iter().all(|v| matches!(v, toml::Value::Integer(_))) {
                Ok(Flat::Integers(
                    items.iter().map(|v| v.as_integer().unwrap()).collect(),
                ))
            } else if items
                .iter()
                .all(|v| matches!(v, toml::Value::Float(_) | toml::Value::Integer(_)))
            {
                Ok(Flat::Numbers(
                    items
                        .iter()
                        .map(|v| match v {
                            toml::Value::Float(x) => *x,
                            toml::Value::Integer(x) => *x as f64,
                            _ => unreachable!(),
                        })
                        .collect(),
                ))
            } else if items.iter().all(|v| matches!(v, toml::Value::String(_))) {
                Ok(Flat::Texts(
                    items
                        .iter()
                        .map(|v| v.as_str().unwrap().to_string())
                        .collect(),
                ))
            } else {
                Err(config_err(format!(
                    "key {key}: arrays must be homogeneous scalars"
                )))
            }
        }
        toml::Value::Table(_) => Err(config_err(format!(
            "key {key}: nested tables are not part of the flat configuration format"
        ))),
    }
}

fn json_to_flat(key: &str, value: &serde_json::Value) -> Result<Flat, CliError> {
    use serde_json::Value as J;
    match value {
        J::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Flat::Integer(i))
            } else {
                Ok(Flat::Number(n.as_f64().ok_or_else(|| {
                    config_err(format!("key {key}: number out of range"))
                })?))
            }
        }
        J::String(s) => Ok(Flat::Text(s.clone())),
        J::Array(items) => {
            if items
                .iter()
                .all(|v| matches!(v, J::Number(n) if n.as_i64().is_some()))
            {
                Ok(Flat::Integers(
                    items.iter().map(|v| v.as_i64().unwrap()).collect(),
                ))
            } else if items.iter().all(|v| v.is_number()) {
                Ok(Flat::Numbers(
                    items.iter().map(|v| v.as_f64().unwrap()).collect(),
                ))
            } else if items.iter().all(|v| v.is_string()) {
                Ok(Flat::Texts(
                    items
                        .iter()
                        .map(|v| v.as_str().unwrap().to_string())
                        .collect(),
                ))
            } else {
                Err(config_err(format!(
                    "key {key}: arrays must be homogeneous scalars"
                )))
            }
        }
        _ => Err(config_err(format!("key {key}: unsupported value type"))),
    }
}

/// Reads a config file into the flat map, accepting TOML or the JSON output
/// of a previous run.
pub fn read_flat(path: &Path) -> Result<FlatMap, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let mut map = FlatMap::new();
    if text.trim_start().starts_with('{') {
        let root: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("invalid JSON in {}: {e}", path.display())))?;
        // a previous run's output carries its configuration under meta.config
        let source = root
            .get("meta")
            .and_then(|m| m.get("config"))
            .unwrap_or(&root);
        let obj = source
            .as_object()
            .ok_or_else(|| config_err("JSON configuration must be an object"))?;
        for (k, v) in obj {
            map.insert(k.clone(), json_to_flat(k, v)?);
        }
    } else {
        let table: toml::Table = text
            .parse()
            .map_err(|e| config_err(format!("invalid TOML in {}: {e}", path.display())))?;
        for (k, v) in &table {
            map.insert(k.clone(), toml_to_flat(k, v)?);
        }
    }
    let unknown: Vec<&str> = map
        .keys()
        .filter(|k| !KNOWN_KEYS.contains(&k.as_str()))
        .map(|k| k.as_str())
        .collect();
    if !unknown.is_empty() {
        return Err(config_err(format!(
            "unknown configuration keys: {}",
            unknown.join(", ")
        )));
    }
    Ok(map)
}

/// Typed accessors over the flat map.
pub struct ConfigView<'a> {
    map: &'a FlatMap,
}

impl<'a> ConfigView<'a> {
    pub fn new(map: &'a FlatMap) -> Self {
        ConfigView { map }
    }

    pub fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn wrong_type(&self, key: &str, want: &str) -> CliError {
        let got = self.map.get(key).map(|v| v.kind()).unwrap_or("missing");
        config_err(format!("key {key}: expected {want}, got {got}"))
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Flat::Number(x)) => Ok(Some(*x)),
            Some(Flat::Integer(x)) => Ok(Some(*x as f64)),
            Some(_) => Err(self.wrong_type(key, "a number")),
        }
    }

    pub fn integer(&self, key: &str) -> Result<Option<i64>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Flat::Integer(x)) => Ok(Some(*x)),
            Some(_) => Err(self.wrong_type(key, "an integer")),
        }
    }

    pub fn text(&self, key: &str) -> Result<Option<&str>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Flat::Text(s)) => Ok(Some(s)),
            Some(_) => Err(self.wrong_type(key, "a string")),
        }
    }

    pub fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Flat::Numbers(v)) => Ok(Some(v.clone())),
            Some(Flat::Integers(v)) => Ok(Some(v.iter().map(|&x| x as f64).collect())),
            Some(Flat::Number(x)) => Ok(Some(vec![*x])),
            Some(Flat::Integer(x)) => Ok(Some(vec![*x as f64])),
            Some(_) => Err(self.wrong_type(key, "a number list")),
        }
    }

    pub fn integers(&self, key: &str) -> Result<Option<Vec<i64>>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Flat::Integers(v)) => Ok(Some(v.clone())),
            Some(Flat::Integer(x)) => Ok(Some(vec![*x])),
            Some(_) => Err(self.wrong_type(key, "an integer list")),
        }
    }

    pub fn texts(&self, key: &str) -> Result<Option<Vec<String>>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Flat::Texts(v)) => Ok(Some(v.clone())),
            Some(Flat::Text(s)) => Ok(Some(vec![s.clone()])),
            Some(_) => Err(self.wrong_type(key, "a string list")),
        }
    }
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// The problem the config describes: either a raw effective-SNR vector or a
/// full physical scenario.
#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Direct { gamma: Vec<f64> },
    Physical(ScenarioConfig),
}

/// A loaded, validated configuration plus its resolved echo (the map written
/// back into run metadata so outputs replay as inputs).
#[derive(Debug, Clone)]
pub struct Loaded {
    pub problem: ProblemSpec,
    pub controls: Controls,
    pub weights: Option<Weights<f64>>,
    pub profile: Option<RateProfile<f64>>,
    pub n_weights: usize,
    pub alphas: Vec<f64>,
    pub k_values: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub echo: FlatMap,
}

fn bounded(
    view: &ConfigView,
    key: &str,
    default: f64,
    check: impl Fn(f64) -> bool,
    bound: &str,
) -> Result<f64, CliError> {
    let x = view.number(key)?.unwrap_or(default);
    if !x.is_finite() || !check(x) {
        return Err(config_err(format!("key {key}: value {x} violates {bound}")));
    }
    Ok(x)
}

/// Builds the typed configuration, applying CLI overrides and section-style
/// defaults (20 dBm transmit power, -100 dBm noise over 1 MHz, ζ = 0.5,
/// Γ = 9.8 dB, 30 dB reference loss).
pub fn load(
    map: &FlatMap,
    seed_override: Option<u64>,
    trials_override: Option<usize>,
) -> Result<Loaded, CliError> {
    let view = ConfigView::new(map);
    let mut echo = map.clone();

    // --- solver controls -------------------------------------------------
    let mut controls = Controls::default();
    if let Some(x) = view.number("rel_tol")? {
        if !(x > 0.0) {
            return Err(config_err("key rel_tol: must be > 0"));
        }
        controls.rel_tol = x;
    }
    if let Some(x) = view.number("abs_tol")? {
        if !(x > 0.0) {
            return Err(config_err("key abs_tol: must be > 0"));
        }
        controls.abs_tol = x;
    }
    if let Some(x) = view.integer("max_iters")? {
        if x < 1 {
            return Err(config_err("key max_iters: must be >= 1"));
        }
        controls.max_iters = x as usize;
    }
    if let Some(x) = view.number("bisection_tol")? {
        if !(x > 0.0) {
            return Err(config_err("key bisection_tol: must be > 0"));
        }
        controls.bisection_tol = x;
    }
    if let Some(x) = view.number("rate_tol")? {
        if !(x > 0.0) {
            return Err(config_err("key rate_tol: must be > 0"));
        }
        controls.rate_tol = x;
    }
    if let Some(x) = view.number("ellipsoid_gap_tol")? {
        if !(x > 0.0) {
            return Err(config_err("key ellipsoid_gap_tol: must be > 0"));
        }
        controls.ellipsoid_gap_tol = x;
    }
    if let Some(x) = view.integer("ellipsoid_max_iters")? {
        if x < 1 {
            return Err(config_err("key ellipsoid_max_iters: must be >= 1"));
        }
        controls.ellipsoid_max_iters = Some(x as usize);
    }

    // --- physical parameters ---------------------------------------------
    let tx_power_dbm = bounded(&view, "tx_power_dbm", 20.0, |_| true, "finiteness")?;
    let noise_dbm = bounded(&view, "noise_dbm", -100.0, |_| true, "finiteness")?;
    let harvest_efficiency = bounded(
        &view,
        "harvest_efficiency",
        0.5,
        |x| x > 0.0 && x < 1.0,
        "(0, 1)",
    )?;
    let snr_gap_db = bounded(&view, "snr_gap_db", 9.8, |x| x >= 0.0, ">= 0 dB")?;
    let energy_use_fraction = bounded(
        &view,
        "energy_use_fraction",
        1.0,
        |x| x > 0.0 && x <= 1.0,
        "(0, 1]",
    )?;
    let bandwidth_hz = bounded(&view, "bandwidth_hz", 1e6, |x| x > 0.0, "> 0")?;
    let physical = Params {
        transmit_power_hap: dbm_to_watts(tx_power_dbm),
        harvest_efficiency,
        snr_gap: db_to_linear(snr_gap_db),
        noise_power: dbm_to_watts(noise_dbm),
        energy_use_fraction,
        bandwidth_hz,
    };
    physical
        .validate()
        .map_err(|e| config_err(format!("physical parameters: {e}")))?;

    // --- seed / trials with overrides ------------------------------------
    let seed = match seed_override {
        Some(s) => s,
        None => {
            let s = view.integer("seed")?.unwrap_or(0);
            if s < 0 {
                return Err(config_err("key seed: must be >= 0"));
            }
            s as u64
        }
    };
    let trials = match trials_override {
        Some(t) => t,
        None => {
            let t = view.integer("trials")?.unwrap_or(1000);
            if t < 1 {
                return Err(config_err("key trials: must be >= 1"));
            }
            t as usize
        }
    };
    echo.insert("seed".into(), Flat::Integer(seed as i64));
    echo.insert("trials".into(), Flat::Integer(trials as i64));

    // --- the problem itself ----------------------------------------------
    let has_gamma_db = view.has("gamma_db");
    let has_gamma_lin = view.has("gamma_linear");
    let has_distances = view.has("distances_m");
    if has_gamma_db && has_gamma_lin {
        return Err(config_err(
            "gamma_db and gamma_linear are mutually exclusive",
        ));
    }
    if (has_gamma_db || has_gamma_lin) && has_distances {
        return Err(config_err(
            "specify either a gamma vector or distances_m, not both",
        ));
    }
    let problem = if has_gamma_db || has_gamma_lin {
        let gamma: Vec<f64> = if has_gamma_db {
            view.numbers("gamma_db")?
                .unwrap()
                .iter()
                .map(|&x| db_to_linear(x))
                .collect()
        } else {
            view.numbers("gamma_linear")?.unwrap()
        };
        if gamma.is_empty() {
            return Err(config_err("gamma vector must list at least one user"));
        }
        if gamma.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(config_err("key gamma: entries must be finite and >= 0"));
        }
        ProblemSpec::Direct { gamma }
    } else if has_distances {
        let distances = view.numbers("distances_m")?.unwrap();
        if distances.iter().any(|&d| !(d > 0.0)) {
            return Err(config_err("key distances_m: distances must be > 0"));
        }
        let alpha = bounded(&view, "alpha", 2.0, |x| x >= 2.0, ">= 2")?;
        let alpha_dl = bounded(&view, "alpha_dl", alpha, |x| x >= 2.0, ">= 2")?;
        let alpha_ul = bounded(&view, "alpha_ul", alpha, |x| x >= 2.0, ">= 2")?;
        let reference_loss_db = bounded(&view, "reference_loss_db", 30.0, |x| x >= 0.0, ">= 0")?;
        let fading: Fading = view
            .text("fading")?
            .unwrap_or("none")
            .parse()
            .map_err(|e| config_err(format!("{e}")))?;
        let scenario = ScenarioConfig {
            user_distances: distances,
            pathloss_exponent_dl: alpha_dl,
            pathloss_exponent_ul: alpha_ul,
            reference_loss_db,
            fading,
            physical: physical.clone(),
            trials,
            seed,
        };
        scenario
            .validate()
            .map_err(|e| config_err(format!("scenario: {e}")))?;
        ProblemSpec::Physical(scenario)
    } else {
        return Err(config_err(
            "configuration must specify the users explicitly: set gamma_db, gamma_linear, or distances_m",
        ));
    };

    // --- per-command extras ----------------------------------------------
    let weights = match view.numbers("weights")? {
        Some(v) => Some(Weights::new(v).map_err(|e| config_err(format!("key weights: {e}")))?),
        None => None,
    };
    let profile = match view.numbers("beta")? {
        Some(v) => Some(RateProfile::new(v).map_err(|e| config_err(format!("key beta: {e}")))?),
        None => None,
    };
    let n_weights = match view.integer("n_weights")? {
        Some(n) if n >= 2 => n as usize,
        Some(n) => {
            return Err(config_err(format!(
                "key n_weights: {n} is below the minimum of 2"
            )))
        }
        None => 64,
    };
    let alphas = match view.numbers("alphas")? {
        Some(v) => {
            if v.iter().any(|&a| !(2.0..=4.0).contains(&a)) {
                return Err(config_err("key alphas: exponents must lie in [2, 4]"));
            }
            v
        }
        None => vec![2.0, 2.5, 3.0, 3.5, 4.0],
    };
    let k_values = match view.integers("k_values")? {
        Some(v) => {
            if v.iter().any(|&k| k < 1) {
                return Err(config_err("key k_values: user counts must be >= 1"));
            }
            v.into_iter().map(|k| k as usize).collect()
        }
        None => vec![1, 2, 5, 10],
    };
    let schemes = match view.texts("schemes")? {
        Some(names) => {
            let mut out = Vec::with_capacity(names.len());
            for name in &names {
                out.push(
                    name.parse::<Scheme>()
                        .map_err(|e| config_err(format!("{e}")))?,
                );
            }
            out
        }
        None => Scheme::ALL.to_vec(),
    };

    Ok(Loaded {
        problem,
        controls,
        weights,
        profile,
        n_weights,
        alphas,
        k_values,
        schemes,
        echo,
    })
}

impl Loaded {
    /// The per-block instance a solve command operates on. Physical
    /// scenarios use the trial-0 channel draw (deterministic for the seed;
    /// the pure pathloss channel when fading is off).
    pub fn instance(&self) -> Result<Instance, CliError> {
        match &self.problem {
            ProblemSpec::Direct { gamma } => {
                Instance::from_gamma(gamma.clone()).map_err(CliError::Solve)
            }
            ProblemSpec::Physical(scenario) => {
                let channels =
                    wpcn_core::sim::draw_channels(scenario, 0).map_err(CliError::Solve)?;
                wpcn_core::model::effective_snr(&scenario.physical, &channels)
                    .map_err(CliError::Solve)
            }
        }
    }

    pub fn scenario(&self) -> Result<&ScenarioConfig, CliError> {
        match &self.problem {
            ProblemSpec::Physical(s) => Ok(s),
            ProblemSpec::Direct { .. } => Err(config_err(
                "this command needs a physical scenario: set distances_m instead of a gamma vector",
            )),
        }
    }
}
