//! Traders and their order-generation behavior: per-day activation, order
//! sizing, limit prices, and expirations for the two strategies.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::{Side, TraderId};

/// Smallest tradable coin quantity; residuals below this count as zero.
pub const SATOSHI: f64 = 1e-8;

/// Trading strategy of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Trades for exogenous needs; buys and sells with equal probability.
    Random,
    /// Trend follower; trades only on a price signal over its own window.
    Chartist {
        /// Look-back window in days for the price-variation signal.
        window: usize,
    },
}

impl Strategy {
    pub fn is_chartist(&self) -> bool {
        matches!(self, Strategy::Chartist { .. })
    }
}

/// One market participant.
#[derive(Debug, Clone)]
pub struct Trader {
    pub id: TraderId,
    pub strategy: Strategy,
    /// Fiat holdings in dollars.
    pub cash: f64,
    /// Coin holdings.
    pub coins: f64,
    /// Dollars reserved by resting buy orders.
    pub committed_cash: f64,
    /// Coins reserved by resting sell orders.
    pub committed_coins: f64,
}

impl Trader {
    pub fn new(id: TraderId, strategy: Strategy, cash: f64, coins: f64) -> Self {
        Trader {
            id,
            strategy,
            cash,
            coins,
            committed_cash: 0.0,
            committed_coins: 0.0,
        }
    }

    /// Cash not reserved by pending buy orders.
    pub fn available_cash(&self) -> f64 {
        self.cash - self.committed_cash
    }

    /// Coins not reserved by pending sell orders.
    pub fn available_coins(&self) -> f64 {
        self.coins - self.committed_coins
    }

    /// Cash plus coins valued at `price`.
    pub fn wealth(&self, price: f64) -> f64 {
        self.cash + self.coins * price
    }
}

/// A generated order before it is assigned an id and placed in the book.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderIntent {
    pub side: Side,
    /// Coins to trade; always positive.
    pub amount: f64,
    /// Worst acceptable price; 0 marks a market order.
    pub limit_price: f64,
    pub issue_day: usize,
    pub expiry_day: usize,
}

/// Behavioral constants shared by every trader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorParams {
    /// Daily activation probability of random traders.
    pub p_active_random: f64,
    /// Daily activation probability of chartists.
    pub p_active_chartist: f64,
    /// Probability a random trader's order is a market order.
    pub p_market_random: f64,
    /// Probability a chartist's order is a market order.
    pub p_market_chartist: f64,
    /// Mean of the limit-price multiplier; buyers concede ~2% on average.
    pub mu: f64,
    /// Scales recent volatility into the limit-price spread.
    pub k: f64,
    /// Days of returns used for the volatility estimate.
    pub t_window: usize,
    /// Mean of the order-size fraction drawn per order.
    pub beta_mean: f64,
    /// Standard deviation of the order-size fraction.
    pub beta_std: f64,
    /// Relative price variation a chartist requires before trading.
    pub threshold: f64,
    /// Mean random-trader order lifetime in days.
    pub expiry_mean: f64,
    /// Standard deviation of the random-trader order lifetime.
    pub expiry_std: f64,
    /// Chartist window bounds; each chartist draws its own window once.
    pub chartist_window_min: usize,
    pub chartist_window_max: usize,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        BehaviorParams {
            p_active_random: 0.1,
            p_active_chartist: 0.5,
            p_market_random: 0.2,
            p_market_chartist: 0.7,
            mu: 1.02,
            k: 0.01,
            t_window: 10,
            beta_mean: 0.25,
            beta_std: 0.2,
            threshold: 0.01,
            expiry_mean: 3.0,
            expiry_std: 1.0,
            chartist_window_min: 2,
            chartist_window_max: 15,
        }
    }
}

impl BehaviorParams {
    pub fn p_active(&self, strategy: Strategy) -> f64 {
        if strategy.is_chartist() {
            self.p_active_chartist
        } else {
            self.p_active_random
        }
    }

    pub fn p_market(&self, strategy: Strategy) -> f64 {
        if strategy.is_chartist() {
            self.p_market_chartist
        } else {
            self.p_market_random
        }
    }
}

/// Underlying normal parameters of a lognormal specified by the mean and
/// standard deviation of the variate itself.
pub fn lognormal_from_moments(mean: f64, std: f64) -> (f64, f64) {
    assert!(mean > 0.0 && std >= 0.0);
    let variance_ln = (1.0 + (std / mean).powi(2)).ln();
    let mu_ln = mean.ln() - 0.5 * variance_ln;
    (mu_ln, variance_ln.sqrt())
}

/// Bernoulli activation draw for the trader's strategy.
pub fn is_active<R: Rng>(strategy: Strategy, params: &BehaviorParams, rng: &mut R) -> bool {
    rng.random_bool(params.p_active(strategy))
}

/// Order-size fraction: lognormal with mean `beta_mean` and standard
/// deviation `beta_std` of the variate, clamped to at most 1.
pub fn draw_beta<R: Rng>(params: &BehaviorParams, rng: &mut R) -> f64 {
    let (mu_ln, sigma_ln) = lognormal_from_moments(params.beta_mean, params.beta_std);
    let dist = LogNormal::new(mu_ln, sigma_ln).expect("valid lognormal parameters");
    dist.sample(rng).min(1.0)
}

/// Trend signal over the trader's window: relative variation of the last
/// price against the price `window` days earlier. Needs `window + 1`
/// history entries; otherwise no signal.
pub fn chartist_signal(history: &[f64], window: usize, threshold: f64) -> Option<Side> {
    if history.len() < window + 1 {
        return None;
    }
    let now = history[history.len() - 1];
    let past = history[history.len() - 1 - window];
    let variation = (now - past) / past;
    if variation > threshold {
        Some(Side::Buy)
    } else if variation < -threshold {
        Some(Side::Sell)
    } else {
        None
    }
}

/// Limit-price dispersion statistic: `k` times the sample standard
/// deviation of the absolute relative returns over the last `t_window`
/// days. Histories with fewer than two returns yield 0.
pub fn sigma_i(history: &[f64], k: f64, t_window: usize) -> f64 {
    let start = history.len().saturating_sub(t_window + 1);
    let window = &history[start..];
    if window.len() < 3 {
        return 0.0;
    }
    let abs_returns: Vec<f64> = window
        .windows(2)
        .map(|w| ((w[1] - w[0]) / w[0]).abs())
        .collect();
    let n = abs_returns.len() as f64;
    let mean = abs_returns.iter().sum::<f64>() / n;
    let ss: f64 = abs_returns.iter().map(|r| (r - mean).powi(2)).sum();
    k * (ss / (n - 1.0)).sqrt()
}

/// Gaussian draw redrawn until positive, so prices stay positive.
fn positive_normal<R: Rng>(mu: f64, sigma: f64, rng: &mut R) -> f64 {
    let dist = Normal::new(mu, sigma).expect("valid normal parameters");
    loop {
        let draw = dist.sample(rng);
        if draw > 0.0 {
            return draw;
        }
    }
}

/// Generate a buy order against the available (uncommitted) cash, or
/// nothing if the trader has no spendable cash.
///
/// The coin amount is the dollars to trade over the current price,
/// `(available * beta) / price`. For limit orders the amount is additionally
/// capped so the reserved cash `amount * limit` never exceeds the available
/// cash.
pub fn make_buy_order<R: Rng>(
    trader: &Trader,
    price: f64,
    sigma: f64,
    params: &BehaviorParams,
    day: usize,
    rng: &mut R,
) -> Option<OrderIntent> {
    let available = trader.available_cash();
    if available <= 0.0 {
        return None;
    }
    let beta = draw_beta(params, rng);
    let mut amount = available * beta / price;
    let is_market = rng.random_bool(params.p_market(trader.strategy));
    let limit_price = if is_market {
        0.0
    } else {
        let limit = price * positive_normal(params.mu, sigma, rng);
        amount = amount.min(available / limit);
        limit
    };
    let expiry_day = make_expiry(trader.strategy, day, params, rng);
    if amount < SATOSHI {
        return None;
    }
    Some(OrderIntent {
        side: Side::Buy,
        amount,
        limit_price,
        issue_day: day,
        expiry_day,
    })
}

/// Generate a sell order against the available (uncommitted) coins, or
/// nothing if the trader has none. Short selling is not possible by
/// construction: the amount is a fraction of the available coins.
pub fn make_sell_order<R: Rng>(
    trader: &Trader,
    price: f64,
    sigma: f64,
    params: &BehaviorParams,
    day: usize,
    rng: &mut R,
) -> Option<OrderIntent> {
    let available = trader.available_coins();
    if available <= 0.0 {
        return None;
    }
    let beta = draw_beta(params, rng);
    let amount = available * beta;
    let is_market = rng.random_bool(params.p_market(trader.strategy));
    let limit_price = if is_market {
        0.0
    } else {
        price / positive_normal(params.mu, sigma, rng)
    };
    let expiry_day = make_expiry(trader.strategy, day, params, rng);
    if amount < SATOSHI {
        return None;
    }
    Some(OrderIntent {
        side: Side::Sell,
        amount,
        limit_price,
        issue_day: day,
        expiry_day,
    })
}

/// Expiration day for a new order: random traders draw a lognormal offset
/// (mean 3, std 1 days) rounded to whole days with a floor of one day
/// ahead; chartists' orders die at the end of the issuing day.
pub fn make_expiry<R: Rng>(
    strategy: Strategy,
    day: usize,
    params: &BehaviorParams,
    rng: &mut R,
) -> usize {
    match strategy {
        Strategy::Chartist { .. } => day,
        Strategy::Random => {
            let (mu_ln, sigma_ln) = lognormal_from_moments(params.expiry_mean, params.expiry_std);
            let dist = LogNormal::new(mu_ln, sigma_ln).expect("valid lognormal parameters");
            let offset = dist.sample(rng).round().max(1.0) as usize;
            day + offset
        }
    }
}

/// One active trader's daily decision: at most one order.
///
/// Random traders pick a side uniformly; chartists act only when their
/// signal fires. `history` must end at the previous close — the signal
/// never sees the current day — while `price` is the live transaction
/// price the order is sized and priced against.
pub fn decide_order<R: Rng>(
    trader: &Trader,
    history: &[f64],
    price: f64,
    sigma: f64,
    params: &BehaviorParams,
    day: usize,
    rng: &mut R,
) -> Option<OrderIntent> {
    let side = match trader.strategy {
        Strategy::Random => {
            if rng.random_bool(0.5) {
                Side::Buy
            } else {
                Side::Sell
            }
        }
        Strategy::Chartist { window } => chartist_signal(history, window, params.threshold)?,
    };
    match side {
        Side::Buy => make_buy_order(trader, price, sigma, params, day, rng),
        Side::Sell => make_sell_order(trader, price, sigma, params, day, rng),
    }
}
