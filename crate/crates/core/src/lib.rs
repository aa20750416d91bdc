//! Agent-based Bitcoin market simulator.
//!
//! A limit-order-book market is populated by two trader types — random
//! traders acting on exogenous needs and trend-following chartists — whose
//! wealth starts from ranked power-law endowments. The population grows
//! from an empirical or synthetic driver schedule, newly mined coins flow
//! to coin-holding random traders, and one price forms per day. The
//! [`stats`] module checks the resulting series for the classic stylized
//! facts: a unit root in prices, fat-tailed absolute returns, and
//! volatility clustering.
//!
//! Entry points: [`engine::run`] for a single seeded run, [`mc::run_batch`]
//! for Monte Carlo repetition (parallel via rayon under the default
//! `parallel` feature), and [`stats::analyze_prices`] for the diagnostics
//! on any price series.

pub mod agents;
pub mod config;
pub mod endowment;
pub mod engine;
pub mod error;
pub mod ingest;
pub mod mc;
pub mod orderbook;
pub mod stats;

pub use config::SimConfig;
pub use error::{Error, Result};

/// Identifies a trader for the lifetime of a run; never reused.
pub type TraderId = u32;

/// Which side of the market an order is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Buy,
    Sell,
}
