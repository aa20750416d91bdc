//! Empirical driver series: loading, smoothing, and the per-day schedule
//! of trader-count targets and newly mined coins.
//!
//! The simulator can run from a local CSV of blockchain aggregates
//! (unique addresses, total coins, price) or from a synthetic fallback
//! built on the fitted coin-supply polynomial, so no external data is
//! required.

use std::path::Path;

use crate::error::{Error, Result};

/// Daily empirical aggregates, one row per day with no gaps.
#[derive(Debug, Clone, Default)]
pub struct EmpiricalSeries {
    /// Unique-address counts per day.
    pub unique_addresses: Vec<f64>,
    /// Cumulative coin supply per day, in real-market units.
    pub total_coins: Vec<f64>,
    /// Daily price where known.
    pub price: Vec<Option<f64>>,
}

impl EmpiricalSeries {
    pub fn len(&self) -> usize {
        self.unique_addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unique_addresses.is_empty()
    }
}

/// Per-day drivers consumed by the engine.
#[derive(Debug, Clone)]
pub struct DriverSchedule {
    /// Target trader count per day, already scaled to the artificial market.
    pub target_traders: Vec<usize>,
    /// Coins entering the market per day, scaled; `mined_coins[0]` is 0
    /// because the initial stock is handled by the endowment.
    pub mined_coins: Vec<f64>,
}

/// Where a schedule's raw drivers come from.
#[derive(Debug, Clone, Copy)]
pub enum ScheduleSource<'a> {
    /// Loaded blockchain aggregates in real-market units.
    Empirical(&'a EmpiricalSeries),
    /// Coin supply from [`supply_polynomial`], trader counts interpolated
    /// linearly between the two endpoints.
    Synthetic { n_traders_0: usize, n_traders_final: usize },
}

/// Smoothing window applied to the unique-address counts.
pub const ADDRESS_MA_WINDOW: usize = 30;

/// Load and validate a driver CSV.
///
/// Expected header: `day,unique_addresses,total_coins,price`, `day` 0-based
/// and consecutive, `price` may be empty.
pub fn load_series(path: &Path) -> Result<EmpiricalSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;

    let headers = reader.headers().map_err(csv_error)?.clone();
    let expected = ["day", "unique_addresses", "total_coins", "price"];
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Invalid(format!(
            "bad header: expected `{}`, got `{}`",
            expected.join(","),
            got.join(",")
        )));
    }

    let mut series = EmpiricalSeries::default();
    let mut expected_day: u64 = 0;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(0);
        let field = |idx: usize| -> Result<&str> {
            record.get(idx).ok_or(Error::Parse {
                line,
                msg: format!("missing column {}", expected[idx]),
            })
        };
        let day: u64 = field(0)?.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad day `{}`", record.get(0).unwrap_or("")),
        })?;
        if day != expected_day {
            return Err(Error::Invalid(format!(
                "day sequence gap: expected day {expected_day}, found {day} (line {line})"
            )));
        }
        expected_day += 1;

        let addresses: f64 = field(1)?.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad unique_addresses `{}`", record.get(1).unwrap_or("")),
        })?;
        if addresses < 0.0 {
            return Err(Error::Invalid(format!(
                "negative unique_addresses on day {day} (line {line})"
            )));
        }
        let coins: f64 = field(2)?.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("bad total_coins `{}`", record.get(2).unwrap_or("")),
        })?;
        if let Some(prev) = series.total_coins.last() {
            if coins < *prev {
                return Err(Error::Invalid(format!(
                    "total_coins decreases on day {day} (line {line})"
                )));
            }
        }
        let price_field = field(3)?;
        let price = if price_field.is_empty() {
            None
        } else {
            Some(price_field.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad price `{price_field}`"),
            })?)
        };

        series.unique_addresses.push(addresses);
        series.total_coins.push(coins);
        series.price.push(price);
    }

    if series.is_empty() {
        return Err(Error::Invalid("no rows".into()));
    }
    Ok(series)
}

/// Load a bare price series CSV with header `day,price`, day 0-based and
/// consecutive.
pub fn load_price_csv(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != ["day", "price"] {
        return Err(Error::Invalid(format!(
            "bad header: expected `day,price`, got `{}`",
            got.join(",")
        )));
    }
    let mut prices = Vec::new();
    let mut expected_day: u64 = 0;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let day: u64 = record
            .get(0)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Parse {
                line,
                msg: format!("bad day `{}`", record.get(0).unwrap_or("")),
            })?;
        if day != expected_day {
            return Err(Error::Invalid(format!(
                "day sequence gap: expected day {expected_day}, found {day} (line {line})"
            )));
        }
        expected_day += 1;
        let price: f64 = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Parse {
                line,
                msg: format!("bad price `{}`", record.get(1).unwrap_or("")),
            })?;
        prices.push(price);
    }
    if prices.is_empty() {
        return Err(Error::Invalid("no rows".into()));
    }
    Ok(prices)
}

fn csv_error(err: csv::Error) -> Error {
    if err.is_io_error() {
        if let csv::ErrorKind::Io(io) = err.into_kind() {
            return Error::Io(io);
        }
        unreachable!("is_io_error guarantees an Io kind");
    }
    match err.position() {
        Some(pos) => Error::Parse {
            line: pos.line(),
            msg: err.to_string(),
        },
        None => Error::Invalid(err.to_string()),
    }
}

/// Trailing moving average truncated at the start of the series: element
/// `t` is the mean of inputs `max(0, t-window+1)..=t`, so day `t` never
/// uses future data. Output length equals input length.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::Invalid("moving_average window must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut running = 0.0;
    for t in 0..series.len() {
        running += series[t];
        if t >= window {
            running -= series[t - window];
        }
        let span = (t + 1).min(window);
        out.push(running / span as f64);
    }
    Ok(out)
}

/// Fitted cumulative coin supply at day `t`, already expressed at the
/// artificial market's 1/100 scale.
pub fn supply_polynomial(t: usize) -> f64 {
    let t = t as f64;
    4.709e-5 * t.powi(3) - 0.08932 * t.powi(2) + 98.88 * t + 78_880.0
}

/// Build the per-day driver schedule.
///
/// Empirical mode divides the 30-day-smoothed address counts and the daily
/// coin-supply increments by `scale`. Synthetic mode reads the supply from
/// [`supply_polynomial`] (which is already scaled, so `scale` is not applied
/// again) and interpolates trader counts linearly between the endpoints.
pub fn build_schedule(source: ScheduleSource, horizon: usize, scale: f64) -> Result<DriverSchedule> {
    if horizon == 0 {
        return Err(Error::Invalid("horizon must be >= 1".into()));
    }
    if scale <= 0.0 {
        return Err(Error::Invalid("scale must be > 0".into()));
    }
    match source {
        ScheduleSource::Empirical(series) => {
            if horizon > series.len() {
                return Err(Error::Invalid(format!(
                    "horizon {} exceeds series length {}",
                    horizon,
                    series.len()
                )));
            }
            let smoothed = moving_average(&series.unique_addresses, ADDRESS_MA_WINDOW)?;
            let target_traders = smoothed[..horizon]
                .iter()
                .map(|a| (a / scale).round() as usize)
                .collect();
            let mut mined_coins = Vec::with_capacity(horizon);
            mined_coins.push(0.0);
            for t in 1..horizon {
                let delta = series.total_coins[t] - series.total_coins[t - 1];
                mined_coins.push((delta / scale).max(0.0));
            }
            Ok(DriverSchedule {
                target_traders,
                mined_coins,
            })
        }
        ScheduleSource::Synthetic {
            n_traders_0,
            n_traders_final,
        } => {
            let target_traders = (0..horizon)
                .map(|t| {
                    if horizon == 1 {
                        return n_traders_0;
                    }
                    let frac = t as f64 / (horizon - 1) as f64;
                    let v = n_traders_0 as f64
                        + (n_traders_final as f64 - n_traders_0 as f64) * frac;
                    v.round() as usize
                })
                .collect();
            let mut mined_coins = Vec::with_capacity(horizon);
            mined_coins.push(0.0);
            for t in 1..horizon {
                let delta = supply_polynomial(t) - supply_polynomial(t - 1);
                mined_coins.push(delta.max(0.0));
            }
            Ok(DriverSchedule {
                target_traders,
                mined_coins,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::fmt::Write as _;

    fn write_csv(content: &str) -> tempfile_path::TempCsv {
        tempfile_path::TempCsv::new(content)
    }

    // Minimal self-cleaning fixture file helper.
    mod tempfile_path {
        use std::path::PathBuf;

        pub struct TempCsv(pub PathBuf);

        impl TempCsv {
            pub fn new(content: &str) -> Self {
                let mut path = std::env::temp_dir();
                let unique = format!(
                    "btcsim-ingest-{}-{:?}.csv",
                    std::process::id(),
                    std::thread::current().id()
                );
                path.push(unique);
                std::fs::write(&path, content).unwrap();
                TempCsv(path)
            }
        }

        impl Drop for TempCsv {
            fn drop(&mut self) {
                let _ = std::fs::remove_file(&self.0);
            }
        }
    }

    #[test]
    fn load_three_rows() {
        let f = write_csv(
            "day,unique_addresses,total_coins,price\n0,100,8000000,5.0\n1,110,8001000,\n2,120,8002000,5.2\n",
        );
        let s = load_series(&f.0).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.unique_addresses, vec![100.0, 110.0, 120.0]);
        assert_eq!(s.price[1], None);
        assert_eq!(s.price[2], Some(5.2));
    }

    #[test]
    fn load_rejects_day_gap() {
        let f = write_csv("day,unique_addresses,total_coins,price\n0,100,1,\n2,100,2,\n");
        let err = load_series(&f.0).unwrap_err();
        assert!(err.to_string().contains("gap"), "{err}");
    }

    #[test]
    fn load_rejects_empty_file() {
        let f = write_csv("day,unique_addresses,total_coins,price\n");
        let err = load_series(&f.0).unwrap_err();
        assert!(err.to_string().contains("no rows"), "{err}");
    }

    #[test]
    fn load_reports_line_of_malformed_row() {
        let f = write_csv("day,unique_addresses,total_coins,price\n0,100,1,\n1,abc,2,\n");
        let err = load_series(&f.0).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn load_rejects_decreasing_coins() {
        let f = write_csv("day,unique_addresses,total_coins,price\n0,100,10,\n1,100,9,\n");
        let err = load_series(&f.0).unwrap_err();
        assert!(err.to_string().contains("decreases"), "{err}");
    }

    #[test]
    fn moving_average_constant_series() {
        assert_eq!(moving_average(&[4.0, 4.0, 4.0], 2).unwrap(), vec![4.0, 4.0, 4.0]);
    }

    #[test]
    fn moving_average_trailing_means() {
        assert_eq!(moving_average(&[0.0, 2.0, 4.0], 2).unwrap(), vec![0.0, 1.0, 3.0]);
    }

    #[test]
    fn moving_average_window_larger_than_series() {
        assert_eq!(moving_average(&[5.0], 30).unwrap(), vec![5.0]);
    }

    #[test]
    fn moving_average_zero_window_is_an_error() {
        assert!(moving_average(&[1.0], 0).is_err());
    }

    #[test]
    fn supply_polynomial_fixtures() {
        // Values from direct evaluation of the cubic.
        assert_eq!(supply_polynomial(0), 78_880.0);
        assert_relative_eq!(supply_polynomial(100), 87_921.89, epsilon = 0.01);
        assert_relative_eq!(supply_polynomial(830), 126_343.30183, epsilon = 0.5);
    }

    #[test]
    fn synthetic_schedule_endpoints() {
        let sched = build_schedule(
            ScheduleSource::Synthetic {
                n_traders_0: 100,
                n_traders_final: 1500,
            },
            830,
            100.0,
        )
        .unwrap();
        assert_eq!(sched.target_traders[0], 100);
        assert_eq!(sched.target_traders[829], 1500);
        assert_eq!(sched.mined_coins[0], 0.0);
        assert!(sched.mined_coins[1..].iter().all(|m| *m > 0.0));
    }

    #[test]
    fn empirical_mined_coins_are_scaled_differences() {
        let series = EmpiricalSeries {
            unique_addresses: vec![10_000.0, 10_000.0],
            total_coins: vec![8_000_000.0, 8_010_000.0],
            price: vec![None, None],
        };
        let sched = build_schedule(ScheduleSource::Empirical(&series), 2, 100.0).unwrap();
        assert_eq!(sched.mined_coins, vec![0.0, 100.0]);
    }

    #[test]
    fn empirical_constant_addresses_give_constant_targets() {
        let n = 40;
        let series = EmpiricalSeries {
            unique_addresses: vec![10_000.0; n],
            total_coins: (0..n).map(|t| 1000.0 * t as f64).collect(),
            price: vec![None; n],
        };
        let sched = build_schedule(ScheduleSource::Empirical(&series), n, 100.0).unwrap();
        assert!(sched.target_traders.iter().all(|&t| t == 100));
    }

    #[test]
    fn empirical_horizon_beyond_series_fails() {
        let series = EmpiricalSeries {
            unique_addresses: vec![1.0; 3],
            total_coins: vec![1.0; 3],
            price: vec![None; 3],
        };
        assert!(build_schedule(ScheduleSource::Empirical(&series), 4, 100.0).is_err());
    }

    #[test]
    fn load_then_schedule_smoke() {
        let mut content = String::from("day,unique_addresses,total_coins,price\n");
        for day in 0..35 {
            writeln!(content, "{day},{},{},", 10_000 + day * 10, 8_000_000 + day * 900).unwrap();
        }
        let f = write_csv(&content);
        let series = load_series(&f.0).unwrap();
        let sched = build_schedule(ScheduleSource::Empirical(&series), 35, 100.0).unwrap();
        assert_eq!(sched.target_traders.len(), 35);
        assert_relative_eq!(sched.mined_coins[1], 9.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn moving_average_preserves_length_and_is_idempotent_on_constants(
            value in 0.0f64..1e6,
            len in 1usize..200,
            window in 1usize..40,
        ) {
            let series = vec![value; len];
            let out = moving_average(&series, window).unwrap();
            prop_assert_eq!(out.len(), len);
            for v in out {
                prop_assert!((v - value).abs() <= 1e-9 * value.max(1.0));
            }
        }

        #[test]
        fn mined_coins_nonnegative_for_nondecreasing_supply(
            increments in proptest::collection::vec(0.0f64..1e4, 2..60),
        ) {
            let mut total = 1e6;
            let mut coins = Vec::with_capacity(increments.len());
            for inc in &increments {
                total += inc;
                coins.push(total);
            }
            let n = coins.len();
            let series = EmpiricalSeries {
                unique_addresses: vec![1000.0; n],
                total_coins: coins,
                price: vec![None; n],
            };
            let sched = build_schedule(ScheduleSource::Empirical(&series), n, 100.0).unwrap();
            prop_assert!(sched.mined_coins.iter().all(|m| *m >= 0.0));
        }
    }
}
