//! Simulation configuration: calibrated defaults, a plain `key = value`
//! file format, and validation.

use std::path::Path;

use crate::agents::BehaviorParams;
use crate::error::{Error, Result};

/// Full configuration of one simulation run.
///
/// Defaults reproduce the calibrated market: 830 daily steps, 100 initial
/// traders growing to 1,500, 80,000 coins against 400,000 dollars of cash,
/// initial price 5 $.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Number of daily steps to simulate.
    pub horizon: usize,
    /// Traders present at t = 0.
    pub n_traders_0: usize,
    /// Trader-count target at the final day.
    pub n_traders_final: usize,
    /// Total coins distributed at t = 0.
    pub total_coins_0: f64,
    /// Initial price in dollars per coin.
    pub price_0: f64,
    /// Total cash distributed at t = 0, in dollars.
    pub total_cash_0: f64,
    /// Cash of the richest pre-generated entrant, in dollars.
    pub entrant_top_cash: f64,
    /// Pareto exponent of the entrant cash ranking.
    pub entrant_alpha: f64,
    /// Pareto exponent of the initial cash/coin ranking.
    pub initial_alpha: f64,
    /// Probability a trader is assigned the random strategy.
    pub p_random: f64,
    /// Probability a trader is assigned the chartist strategy.
    pub p_chartist: f64,
    /// Per-day behavioral parameters shared by all traders.
    pub behavior: BehaviorParams,
    /// Divisor mapping real-market magnitudes onto the artificial market.
    pub scale: f64,
    /// Base RNG seed.
    pub seed: u64,
    /// Optional empirical driver CSV; synthetic schedule when absent.
    pub data_path: Option<String>,
    /// Lower cutoff for the power-law tail fit of absolute returns.
    pub x_min: f64,
    /// Largest lag computed by the autocorrelation diagnostics.
    pub acf_max_lag: usize,
    /// Number of Monte Carlo repetitions.
    pub mc_runs: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: 830,
            n_traders_0: 100,
            n_traders_final: 1500,
            total_coins_0: 80_000.0,
            price_0: 5.0,
            total_cash_0: 400_000.0,
            entrant_top_cash: 400_000.0,
            entrant_alpha: 0.6,
            initial_alpha: 1.0,
            p_random: 0.7,
            p_chartist: 0.3,
            behavior: BehaviorParams::default(),
            scale: 100.0,
            seed: 1,
            data_path: None,
            x_min: 0.1,
            acf_max_lag: 50,
            mc_runs: 100,
        }
    }
}

const KEYS: &[&str] = &[
    "horizon",
    "n_traders_0",
    "n_traders_final",
    "total_coins_0",
    "price_0",
    "total_cash_0",
    "entrant_top_cash",
    "entrant_alpha",
    "initial_alpha",
    "p_random",
    "p_chartist",
    "scale",
    "seed",
    "data_path",
    "x_min",
    "acf_max_lag",
    "mc_runs",
    "p_active_random",
    "p_active_chartist",
    "p_market_random",
    "p_market_chartist",
    "mu",
    "k",
    "t_window",
    "beta_mean",
    "beta_std",
    "threshold",
    "expiry_mean",
    "expiry_std",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse value `{value}` for key `{key}`")))
}

impl SimConfig {
    /// Parse a config file (`key = value` lines, `#` comments) over defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = SimConfig::default();
        cfg.apply_lines(text.lines())?;
        Ok(cfg)
    }

    /// Apply `key = value` overrides in order, last write wins.
    pub fn apply_overrides<'a>(&mut self, overrides: impl IntoIterator<Item = &'a str>) -> Result<()> {
        self.apply_lines(overrides)
    }

    fn apply_lines<'a>(&mut self, lines: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for raw in lines {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected `key = value`, got `{line}`")))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Set one field by key name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "horizon" => self.horizon = parse_num(key, value)?,
            "n_traders_0" => self.n_traders_0 = parse_num(key, value)?,
            "n_traders_final" => self.n_traders_final = parse_num(key, value)?,
            "total_coins_0" => self.total_coins_0 = parse_num(key, value)?,
            "price_0" => self.price_0 = parse_num(key, value)?,
            "total_cash_0" => self.total_cash_0 = parse_num(key, value)?,
            "entrant_top_cash" => self.entrant_top_cash = parse_num(key, value)?,
            "entrant_alpha" => self.entrant_alpha = parse_num(key, value)?,
            "initial_alpha" => self.initial_alpha = parse_num(key, value)?,
            "p_random" => self.p_random = parse_num(key, value)?,
            "p_chartist" => self.p_chartist = parse_num(key, value)?,
            "scale" => self.scale = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "data_path" => {
                self.data_path = if value.is_empty() { None } else { Some(value.to_string()) }
            }
            "x_min" => self.x_min = parse_num(key, value)?,
            "acf_max_lag" => self.acf_max_lag = parse_num(key, value)?,
            "mc_runs" => self.mc_runs = parse_num(key, value)?,
            "p_active_random" => self.behavior.p_active_random = parse_num(key, value)?,
            "p_active_chartist" => self.behavior.p_active_chartist = parse_num(key, value)?,
            "p_market_random" => self.behavior.p_market_random = parse_num(key, value)?,
            "p_market_chartist" => self.behavior.p_market_chartist = parse_num(key, value)?,
            "mu" => self.behavior.mu = parse_num(key, value)?,
            "k" => self.behavior.k = parse_num(key, value)?,
            "t_window" => self.behavior.t_window = parse_num(key, value)?,
            "beta_mean" => self.behavior.beta_mean = parse_num(key, value)?,
            "beta_std" => self.behavior.beta_std = parse_num(key, value)?,
            "threshold" => self.behavior.threshold = parse_num(key, value)?,
            "expiry_mean" => self.behavior.expiry_mean = parse_num(key, value)?,
            "expiry_std" => self.behavior.expiry_std = parse_num(key, value)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key `{key}`; valid keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Check the cross-field invariants.
    pub fn validate(&self) -> Result<()> {
        fn prob(name: &str, v: f64) -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        }
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be > 0, got {v}")))
            }
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if self.n_traders_0 == 0 {
            return Err(Error::Config("n_traders_0 must be >= 1".into()));
        }
        if self.n_traders_final < self.n_traders_0 {
            return Err(Error::Config(
                "n_traders_final must be >= n_traders_0".into(),
            ));
        }
        positive("total_coins_0", self.total_coins_0)?;
        positive("price_0", self.price_0)?;
        positive("total_cash_0", self.total_cash_0)?;
        positive("entrant_top_cash", self.entrant_top_cash)?;
        positive("entrant_alpha", self.entrant_alpha)?;
        positive("initial_alpha", self.initial_alpha)?;
        positive("scale", self.scale)?;
        positive("x_min", self.x_min)?;
        positive("mu", self.behavior.mu)?;
        positive("k", self.behavior.k)?;
        positive("threshold", self.behavior.threshold)?;
        prob("p_random", self.p_random)?;
        prob("p_chartist", self.p_chartist)?;
        prob("p_active_random", self.behavior.p_active_random)?;
        prob("p_active_chartist", self.behavior.p_active_chartist)?;
        prob("p_market_random", self.behavior.p_market_random)?;
        prob("p_market_chartist", self.behavior.p_market_chartist)?;
        if (self.p_random + self.p_chartist - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "p_random + p_chartist must equal 1, got {}",
                self.p_random + self.p_chartist
            )));
        }
        if self.mc_runs == 0 {
            return Err(Error::Config("mc_runs must be >= 1".into()));
        }
        Ok(())
    }

    /// Render the fully resolved configuration in the file format, for
    /// provenance echoing next to run outputs.
    pub fn echo(&self) -> String {
        let b = &self.behavior;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("horizon", self.horizon.to_string());
        kv("n_traders_0", self.n_traders_0.to_string());
        kv("n_traders_final", self.n_traders_final.to_string());
        kv("total_coins_0", self.total_coins_0.to_string());
        kv("price_0", self.price_0.to_string());
        kv("total_cash_0", self.total_cash_0.to_string());
        kv("entrant_top_cash", self.entrant_top_cash.to_string());
        kv("entrant_alpha", self.entrant_alpha.to_string());
        kv("initial_alpha", self.initial_alpha.to_string());
        kv("p_random", self.p_random.to_string());
        kv("p_chartist", self.p_chartist.to_string());
        kv("scale", self.scale.to_string());
        kv("seed", self.seed.to_string());
        kv("data_path", self.data_path.clone().unwrap_or_default());
        kv("x_min", self.x_min.to_string());
        kv("acf_max_lag", self.acf_max_lag.to_string());
        kv("mc_runs", self.mc_runs.to_string());
        kv("p_active_random", b.p_active_random.to_string());
        kv("p_active_chartist", b.p_active_chartist.to_string());
        kv("p_market_random", b.p_market_random.to_string());
        kv("p_market_chartist", b.p_market_chartist.to_string());
        kv("mu", b.mu.to_string());
        kv("k", b.k.to_string());
        kv("t_window", b.t_window.to_string());
        kv("beta_mean", b.beta_mean.to_string());
        kv("beta_std", b.beta_std.to_string());
        kv("threshold", b.threshold.to_string());
        kv("expiry_mean", b.expiry_mean.to_string());
        kv("expiry_std", b.expiry_std.to_string());
        s
    }
}
