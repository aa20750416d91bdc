//! Stylized-fact diagnostics: relative returns, autocorrelation, the
//! empirical complementary CDF with a log-log tail fit, the augmented
//! Dickey-Fuller unit-root statistic, and Monte Carlo aggregation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Daily relative returns and their absolute values.
#[derive(Debug, Clone)]
pub struct ReturnSeries {
    pub raw: Vec<f64>,
    pub abs: Vec<f64>,
}

/// Log-log straight-line fit of the CCDF tail.
#[derive(Debug, Clone, Copy)]
pub struct TailFit {
    /// Lower cutoff actually used.
    pub x_min: f64,
    /// Fitted slope; a Pareto exponent alpha shows up as -(alpha - 1).
    pub slope: f64,
    pub r_squared: f64,
    /// Points at or above the cutoff that entered the regression.
    pub n_tail: usize,
}

/// Augmented Dickey-Fuller outcome for the trend-and-drift regression.
#[derive(Debug, Clone, Copy)]
pub struct AdfResult {
    /// t-statistic of the lagged-level coefficient.
    pub tau3: f64,
    pub lags: usize,
    pub critical_1: f64,
    pub critical_5: f64,
    pub critical_10: f64,
}

/// Published critical values for ~830 observations at 1%, 5%, 10%.
pub const ADF_CRITICAL: (f64, f64, f64) = (-3.96, -3.41, -3.12);

/// Relative returns `(p(t) - p(t-1)) / p(t-1)`.
pub fn returns(prices: &[f64]) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::Stats(format!(
            "need at least 2 prices for returns, got {}",
            prices.len()
        )));
    }
    if let Some(bad) = prices.iter().find(|p| **p <= 0.0) {
        return Err(Error::Stats(format!("non-positive price {bad}")));
    }
    let raw: Vec<f64> = prices.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect();
    let abs = raw.iter().map(|r| r.abs()).collect();
    Ok(ReturnSeries { raw, abs })
}

/// Sample autocorrelation at lags `0..=max_lag`, full-sample mean and
/// denominator (the standard biased estimator).
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if n <= max_lag + 1 {
        return Err(Error::Stats(format!(
            "series of length {n} too short for max_lag {max_lag}"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let denom: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    if denom == 0.0 {
        return Err(Error::Stats(
            "autocorrelation undefined for zero-variance series".into(),
        ));
    }
    let mut rho = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let num: f64 = (0..n - lag)
            .map(|t| (series[t] - mean) * (series[t + lag] - mean))
            .sum();
        rho.push(num / denom);
    }
    Ok(rho)
}

/// Empirical complementary CDF: distinct values ascending, each paired
/// with `P(X >= x)`. Starts at probability 1 and is non-increasing.
pub fn ccdf(values: &[f64]) -> Vec<(f64, f64)> {
    assert!(!values.is_empty(), "ccdf of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let mut points = Vec::new();
    for (idx, x) in sorted.iter().enumerate() {
        if idx == 0 || *x != sorted[idx - 1] {
            points.push((*x, (n - idx) as f64 / n as f64));
        }
    }
    points
}

/// Ordinary least squares on `(ln x, ln P)` over the points with
/// `x >= x_min`. Needs at least 10 tail points.
pub fn tail_fit(points: &[(f64, f64)], x_min: f64) -> Result<TailFit> {
    let tail: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, p)| *x >= x_min && *x > 0.0 && *p > 0.0)
        .map(|(x, p)| (x.ln(), p.ln()))
        .collect();
    let n_tail = tail.len();
    if n_tail < 10 {
        return Err(Error::TooFewTailPoints { n_tail });
    }
    let n = n_tail as f64;
    let mean_x = tail.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = tail.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    let syy: f64 = tail.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let sxy: f64 = tail
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    if sxx == 0.0 {
        return Err(Error::Stats("degenerate tail: single x value".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(TailFit {
        x_min,
        slope,
        r_squared,
        n_tail,
    })
}

/// Deterministic default lag order, `floor((n - 1)^(1/3))`.
pub fn default_adf_lags(n: usize) -> usize {
    if n <= 1 {
        return 0;
    }
    (((n - 1) as f64).powf(1.0 / 3.0)).floor() as usize
}

/// Augmented Dickey-Fuller tau in the trend-and-drift form:
/// `dp_t = a0 + a1 t + gamma p_{t-1} + sum_j phi_j dp_{t-j} + e_t`,
/// `tau3 = gamma_hat / se(gamma_hat)`. Critical values are the published
/// triple for ~830 observations.
pub fn adf_tau3(prices: &[f64], lags: usize) -> Result<AdfResult> {
    let n = prices.len();
    if n < 25 + lags {
        return Err(Error::Stats(format!(
            "ADF needs at least {} observations for {lags} lags, got {n}",
            25 + lags
        )));
    }
    let dp: Vec<f64> = prices.windows(2).map(|w| w[1] - w[0]).collect();
    let rows = n - 1 - lags;
    let cols = 3 + lags;
    let mut x = DMatrix::zeros(rows, cols);
    let mut y = DVector::zeros(rows);
    for (row, t) in (lags + 1..n).enumerate() {
        y[row] = dp[t - 1];
        x[(row, 0)] = 1.0;
        x[(row, 1)] = t as f64;
        x[(row, 2)] = prices[t - 1];
        for j in 1..=lags {
            x[(row, 2 + j)] = dp[t - 1 - j];
        }
    }
    if rows <= cols {
        return Err(Error::Stats("ADF regression has no degrees of freedom".into()));
    }

    let qr = x.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.transpose() * &y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Stats("singular ADF regression".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(cols, cols))
        .ok_or_else(|| Error::Stats("singular ADF regression".into()))?;
    let residuals = &y - &x * &coef;
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let sigma2 = rss / (rows - cols) as f64;
    // Var(coef) = sigma^2 (X'X)^-1 = sigma^2 R^-1 R^-T.
    let gamma_var = sigma2 * r_inv.row(2).iter().map(|v| v * v).sum::<f64>();
    let se = gamma_var.sqrt();
    if !se.is_finite() || se == 0.0 {
        return Err(Error::Stats("singular ADF regression".into()));
    }
    Ok(AdfResult {
        tau3: coef[2] / se,
        lags,
        critical_1: ADF_CRITICAL.0,
        critical_5: ADF_CRITICAL.1,
        critical_10: ADF_CRITICAL.2,
    })
}

/// Elementwise mean and sample standard deviation across runs of equal
/// horizon.
pub fn mc_aggregate(price_runs: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    if price_runs.len() < 2 {
        return Err(Error::Stats(format!(
            "need at least 2 runs to aggregate, got {}",
            price_runs.len()
        )));
    }
    let horizon = price_runs[0].len();
    if price_runs.iter().any(|r| r.len() != horizon) {
        return Err(Error::Stats("runs have differing horizons".into()));
    }
    let n = price_runs.len() as f64;
    let mut out = Vec::with_capacity(horizon);
    for day in 0..horizon {
        let mean = price_runs.iter().map(|r| r[day]).sum::<f64>() / n;
        let ss: f64 = price_runs.iter().map(|r| (r[day] - mean).powi(2)).sum();
        out.push((mean, (ss / (n - 1.0)).sqrt()));
    }
    Ok(out)
}

/// Empirical quantile (type 1: smallest value with at least `q` mass at or
/// below it).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    assert!((0.0..=1.0).contains(&q));
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((q * sorted.len() as f64).ceil() as usize).saturating_sub(1);
    sorted[idx.min(sorted.len() - 1)]
}

/// Full diagnostic block computed from one price series.
#[derive(Debug, Clone)]
pub struct StatsReport {
    /// Autocorrelations of raw returns, lags `0..=max_lag`.
    pub acf_raw: Vec<f64>,
    /// Autocorrelations of absolute returns, lags `0..=max_lag`.
    pub acf_abs: Vec<f64>,
    /// CCDF points of the absolute returns.
    pub ccdf_abs: Vec<(f64, f64)>,
    /// Tail fit, absent when even the fallback cutoff leaves < 10 points.
    pub tail: Option<TailFit>,
    pub adf: AdfResult,
}

/// Run the whole diagnostic pipeline on a price series.
///
/// The tail fit first tries `x_min`; if fewer than 10 CCDF points lie above
/// it (simulated return scales vary), it falls back to the 90th percentile
/// of the absolute returns.
pub fn analyze_prices(
    prices: &[f64],
    acf_max_lag: usize,
    x_min: f64,
    adf_lags: Option<usize>,
) -> Result<StatsReport> {
    if prices.len() < 25 {
        return Err(Error::Stats(format!(
            "need at least 25 prices, got {}",
            prices.len()
        )));
    }
    let rets = returns(prices)?;
    let acf_raw = acf(&rets.raw, acf_max_lag)?;
    let acf_abs = acf(&rets.abs, acf_max_lag)?;
    let ccdf_abs = ccdf(&rets.abs);
    let tail = match tail_fit(&ccdf_abs, x_min) {
        Ok(fit) => Some(fit),
        Err(Error::TooFewTailPoints { .. }) => {
            let fallback = quantile(&rets.abs, 0.9);
            tail_fit(&ccdf_abs, fallback).ok()
        }
        Err(err) => return Err(err),
    };
    let lags = adf_lags.unwrap_or_else(|| default_adf_lags(prices.len()));
    let adf = adf_tau3(prices, lags)?;
    Ok(StatsReport {
        acf_raw,
        acf_abs,
        ccdf_abs,
        tail,
        adf,
    })
}
