//! Command-line front end: `simulate` runs one seeded simulation,
//! `montecarlo` repeats it across consecutive seeds and aggregates, and
//! `analyze` applies the stylized-fact diagnostics to any price CSV.
//!
//! All outputs are plain CSV meant for external plotting. Every run writes
//! the fully resolved configuration next to its outputs so results can be
//! reproduced byte for byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use btcsim::engine;
use btcsim::ingest;
use btcsim::mc;
use btcsim::stats::{self, StatsReport};
use btcsim::SimConfig;

#[derive(Parser)]
#[command(
    name = "btcsim",
    version,
    about = "Agent-based Bitcoin market simulator with stylized-fact diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded simulation and write series, trades, and diagnostics.
    Simulate(RunArgs),
    /// Run many seeds and write per-day aggregates plus per-run summaries.
    Montecarlo(McArgs),
    /// Apply the diagnostics pipeline to an external `day,price` CSV.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct CommonConfig {
    /// Config file with `key = value` lines; defaults are the calibrated
    /// market.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set beta_mean=0.3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of simulated days.
    #[arg(long)]
    horizon: Option<usize>,
    /// Empirical driver CSV (`day,unique_addresses,total_coins,price`).
    #[arg(long)]
    data: Option<PathBuf>,
}

impl CommonConfig {
    fn resolve(&self) -> anyhow::Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => SimConfig::from_file(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => SimConfig::default(),
        };
        cfg.apply_overrides(self.set.iter().map(|s| s.as_str()))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(horizon) = self.horizon {
            cfg.horizon = horizon;
        }
        if let Some(data) = &self.data {
            cfg.data_path = Some(data.display().to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    common: CommonConfig,
    /// Number of runs (seeds seed..seed+runs-1).
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// CSV of `day,price`.
    prices: PathBuf,
    /// Tail-fit cutoff; falls back to the 90th percentile of |returns|
    /// when fewer than 10 CCDF points lie above it.
    #[arg(long, default_value_t = 0.1)]
    x_min: f64,
    #[arg(long, default_value_t = 50)]
    acf_max_lag: usize,
    /// ADF lag order; default floor((n-1)^(1/3)).
    #[arg(long)]
    adf_lags: Option<usize>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::Analyze(args) => cmd_analyze(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn echo_config(cfg: &SimConfig, out_dir: &Path) -> anyhow::Result<()> {
    let text = cfg.echo();
    print!("{text}");
    fs::write(out_dir.join("config_resolved.txt"), text)?;
    Ok(())
}

fn write_stats_report(report: &StatsReport, out_dir: &Path) -> anyhow::Result<()> {
    let mut acf = String::from("lag,rho_raw,rho_abs\n");
    for (lag, (raw, abs)) in report.acf_raw.iter().zip(&report.acf_abs).enumerate() {
        acf.push_str(&format!("{lag},{raw},{abs}\n"));
    }
    fs::write(out_dir.join("stats_acf.csv"), acf)?;

    let mut ccdf = String::from("x,p\n");
    for (x, p) in &report.ccdf_abs {
        ccdf.push_str(&format!("{x},{p}\n"));
    }
    fs::write(out_dir.join("stats_ccdf.csv"), ccdf)?;

    let mut summary = String::from("tau3,lags,slope,r2,xmin,n_tail\n");
    match &report.tail {
        Some(t) => summary.push_str(&format!(
            "{},{},{},{},{},{}\n",
            report.adf.tau3, report.adf.lags, t.slope, t.r_squared, t.x_min, t.n_tail
        )),
        None => summary.push_str(&format!(
            "{},{},nan,nan,nan,0\n",
            report.adf.tau3, report.adf.lags
        )),
    }
    fs::write(out_dir.join("stats_summary.csv"), summary)?;
    Ok(())
}

fn cmd_simulate(args: RunArgs) -> anyhow::Result<()> {
    let cfg = args.common.resolve()?;
    fs::create_dir_all(&args.out_dir)?;
    echo_config(&cfg, &args.out_dir)?;

    let output = engine::run(&cfg, cfg.seed)?;

    let mut series_file = fs::File::create(args.out_dir.join("series.csv"))?;
    output.series.write_csv(&mut series_file)?;
    let mut trades_file = fs::File::create(args.out_dir.join("trades.csv"))?;
    engine::write_trades_csv(&output.trades, &mut trades_file)?;

    let prices = output.series.prices();
    let report = stats::analyze_prices(&prices, cfg.acf_max_lag, cfg.x_min, None)?;
    write_stats_report(&report, &args.out_dir)?;

    println!(
        "simulated {} days, {} trades; tau3 = {:.4} (5% critical {})",
        cfg.horizon,
        output.trades.len(),
        report.adf.tau3,
        report.adf.critical_5
    );
    Ok(())
}

fn cmd_montecarlo(args: McArgs) -> anyhow::Result<()> {
    let mut cfg = args.common.resolve()?;
    if let Some(runs) = args.runs {
        cfg.mc_runs = runs;
    }
    if cfg.mc_runs < 2 {
        bail!("montecarlo needs mc_runs >= 2, got {}", cfg.mc_runs);
    }
    fs::create_dir_all(&args.out_dir)?;
    echo_config(&cfg, &args.out_dir)?;

    let batch = mc::run_batch(&cfg, cfg.seed, cfg.mc_runs)
        .with_context(|| "a Monte Carlo run failed")?;

    let price_runs: Vec<Vec<f64>> = batch.iter().map(|s| s.prices()).collect();
    let aggregate = stats::mc_aggregate(&price_runs)?;
    let mut agg_csv = String::from("day,mean_price,std_price\n");
    for (day, (mean, std)) in aggregate.iter().enumerate() {
        agg_csv.push_str(&format!("{day},{mean},{std}\n"));
    }
    fs::write(args.out_dir.join("mc_mean_std.csv"), agg_csv)?;

    let mut runs_csv = String::from("seed,tau3,tail_slope,tail_r2,mean_acf_abs,mean_abs_acf_raw\n");
    for (i, series) in batch.iter().enumerate() {
        let seed = cfg.seed + i as u64;
        let s = mc::summarize_run(seed, series, cfg.x_min)
            .with_context(|| format!("summarizing run with seed {seed}"))?;
        let fmt_opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| x.to_string());
        runs_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.seed,
            s.tau3,
            fmt_opt(s.tail_slope),
            fmt_opt(s.tail_r2),
            s.mean_acf_abs,
            s.mean_abs_acf_raw
        ));
    }
    fs::write(args.out_dir.join("mc_runs.csv"), runs_csv)?;

    let ratio_mean = aggregate
        .iter()
        .map(|(m, s)| s / m)
        .sum::<f64>()
        / aggregate.len() as f64;
    println!(
        "{} runs of {} days; time-averaged std/mean of price = {:.3}",
        cfg.mc_runs, cfg.horizon, ratio_mean
    );
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let prices = ingest::load_price_csv(&args.prices)
        .with_context(|| format!("reading {}", args.prices.display()))?;
    let report = stats::analyze_prices(&prices, args.acf_max_lag, args.x_min, args.adf_lags)?;
    fs::create_dir_all(&args.out_dir)?;
    write_stats_report(&report, &args.out_dir)?;

    let mut line = format!(
        "n = {}, tau3 = {:.4} (criticals 1%/5%/10%: {} / {} / {}), lags = {}",
        prices.len(),
        report.adf.tau3,
        report.adf.critical_1,
        report.adf.critical_5,
        report.adf.critical_10,
        report.adf.lags
    );
    if let Some(t) = &report.tail {
        line.push_str(&format!(
            ", tail slope = {:.3} (r2 = {:.3}, x_min = {:.4}, n = {})",
            t.slope, t.r_squared, t.x_min, t.n_tail
        ));
    }
    println!("{line}");
    let mut out = std::io::stdout();
    out.flush()?;
    Ok(())
}
