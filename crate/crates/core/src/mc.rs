//! Monte Carlo driver: repeated seeded runs with order-independent
//! aggregation. Runs execute on the rayon pool when the `parallel` feature
//! is enabled (the default); results are identical either way because each
//! run owns an independent RNG stream keyed by its seed.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::SimConfig;
use crate::engine::{self, MarketSeries};
use crate::error::Result;
use crate::stats;

/// Diagnostics of a single Monte Carlo run.
#[derive(Debug, Clone, Copy)]
pub struct RunSummary {
    pub seed: u64,
    pub tau3: f64,
    /// Log-log CCDF tail slope of the absolute returns, when fittable.
    pub tail_slope: Option<f64>,
    pub tail_r2: Option<f64>,
    /// Mean of the absolute-return ACF over lags 1..=20.
    pub mean_acf_abs: f64,
    /// Mean of |ACF| of the raw returns over lags 1..=20.
    pub mean_abs_acf_raw: f64,
}

/// Run seeds `base_seed..base_seed + runs`, keeping each run's series.
pub fn run_batch(cfg: &SimConfig, base_seed: u64, runs: usize) -> Result<Vec<MarketSeries>> {
    let schedule = engine::build_config_schedule(cfg)?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| base_seed + i).collect();
    #[cfg(feature = "parallel")]
    {
        seeds
            .par_iter()
            .map(|seed| engine::run_with_schedule(cfg, &schedule, *seed).map(|out| out.series))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds
            .iter()
            .map(|seed| engine::run_with_schedule(cfg, &schedule, *seed).map(|out| out.series))
            .collect()
    }
}

/// Same as [`run_batch`] but strictly one run at a time, regardless of
/// features. Used by the benchmarks and the determinism checks.
pub fn run_batch_sequential(
    cfg: &SimConfig,
    base_seed: u64,
    runs: usize,
) -> Result<Vec<MarketSeries>> {
    let schedule = engine::build_config_schedule(cfg)?;
    (0..runs as u64)
        .map(|i| engine::run_with_schedule(cfg, &schedule, base_seed + i).map(|out| out.series))
        .collect()
}

/// Per-run stylized-fact summary: unit-root statistic, tail slope, and the
/// two lag-1..20 ACF means. `x_min` follows the same fallback policy as
/// the full report.
pub fn summarize_run(seed: u64, series: &MarketSeries, x_min: f64) -> Result<RunSummary> {
    let prices = series.prices();
    let rets = stats::returns(&prices)?;
    let acf_raw = stats::acf(&rets.raw, 20)?;
    let acf_abs = stats::acf(&rets.abs, 20)?;
    let mean_acf_abs = acf_abs[1..].iter().sum::<f64>() / 20.0;
    let mean_abs_acf_raw = acf_raw[1..].iter().map(|r| r.abs()).sum::<f64>() / 20.0;
    let points = stats::ccdf(&rets.abs);
    let tail = match stats::tail_fit(&points, x_min) {
        Ok(fit) => Some(fit),
        Err(crate::Error::TooFewTailPoints { .. }) => {
            stats::tail_fit(&points, stats::quantile(&rets.abs, 0.9)).ok()
        }
        Err(err) => return Err(err),
    };
    let adf = stats::adf_tau3(&prices, stats::default_adf_lags(prices.len()))?;
    Ok(RunSummary {
        seed,
        tau3: adf.tau3,
        tail_slope: tail.map(|t| t.slope),
        tail_r2: tail.map(|t| t.r_squared),
        mean_acf_abs,
        mean_abs_acf_raw,
    })
}
