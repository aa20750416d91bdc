//! The daily simulation loop: expirations, population entry/exit, mining
//! allocation, randomized order generation, matching, settlement, and
//! time-series recording.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::agents::{self, OrderIntent, Strategy, Trader, SATOSHI};
use crate::config::SimConfig;
use crate::endowment;
use crate::error::{Error, Result};
use crate::ingest::{self, DriverSchedule, ScheduleSource};
use crate::orderbook::{Book, BookOrder, InsertReport, Trade};
use crate::{Side, TraderId};

/// How the raw volatility statistic maps onto the limit-price dispersion
/// that order generation actually uses. The statistic is a standard
/// deviation of fractional daily returns; scaled into percent units it is
/// comparable to the realized volatility, floored so a flat market still
/// quotes with enough dispersion for imbalance to move the price, and
/// capped so the volatility feedback cannot run away through dust-sized
/// prints at extreme limits.
pub const SIGMA_SCALE: f64 = 100.0;
/// Minimum effective limit-price dispersion.
pub const SIGMA_FLOOR: f64 = 0.05;
/// Maximum effective limit-price dispersion.
pub const SIGMA_CAP: f64 = 0.1;

/// Effective dispersion fed into order generation.
pub fn effective_sigma(raw_sigma: f64) -> f64 {
    (raw_sigma * SIGMA_SCALE).clamp(SIGMA_FLOOR, SIGMA_CAP)
}

/// Everything recorded at the close of one day.
#[derive(Debug, Clone, Copy)]
pub struct DayRecord {
    pub day: usize,
    /// Closing price: last transaction of the day, or the previous close
    /// on days without trades.
    pub price: f64,
    /// Coins changing hands during the day.
    pub volume: f64,
    pub traders: usize,
    /// Coins held by all traders at the close.
    pub coins: f64,
    pub random_coins: f64,
    pub chartist_coins: f64,
    pub random_cash: f64,
    pub chartist_cash: f64,
    pub random_wealth: f64,
    pub chartist_wealth: f64,
    /// Cash brought in by the day's entrants.
    pub entrant_cash_in: f64,
    /// Cash that left with removed traders.
    pub removed_cash_out: f64,
    /// Coins that left circulation with removed traders.
    pub removed_coins_out: f64,
    /// Coins distributed to miners during the day.
    pub mined_in: f64,
}

/// Per-day records of one full run.
#[derive(Debug, Clone, Default)]
pub struct MarketSeries {
    pub days: Vec<DayRecord>,
}

impl MarketSeries {
    pub fn prices(&self) -> Vec<f64> {
        self.days.iter().map(|d| d.price).collect()
    }

    /// CSV export, one row per day.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "day,price,volume,traders,coins,random_coins,chartist_coins,random_cash,chartist_cash,random_wealth,chartist_wealth"
        )?;
        for d in &self.days {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                d.day,
                d.price,
                d.volume,
                d.traders,
                d.coins,
                d.random_coins,
                d.chartist_coins,
                d.random_cash,
                d.chartist_cash,
                d.random_wealth,
                d.chartist_wealth
            )?;
        }
        Ok(())
    }
}

/// CSV export of a trade log.
pub fn write_trades_csv<W: std::io::Write>(trades: &[Trade], mut w: W) -> std::io::Result<()> {
    writeln!(w, "day,price,amount,buy_trader,sell_trader")?;
    for t in trades {
        writeln!(
            w,
            "{},{},{},{},{}",
            t.day, t.price, t.amount, t.buy_trader, t.sell_trader
        )?;
    }
    Ok(())
}

/// A finished run.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub series: MarketSeries,
    pub trades: Vec<Trade>,
}

/// Mutable world state of one run.
#[derive(Debug)]
pub struct MarketState {
    pub day: usize,
    pub traders: BTreeMap<TraderId, Trader>,
    pub book: Book,
    /// `prices[0]` is the initial anchor; `prices[d + 1]` is day `d`'s close,
    /// so `prices[..=d]` is exactly what agents may see during day `d`.
    pub prices: Vec<f64>,
    entrant_cash: Vec<f64>,
    entrant_cursor: usize,
    /// Mined coins waiting for an eligible recipient.
    carry_mined: f64,
    next_trader_id: TraderId,
    rng: ChaCha12Rng,
}

fn draw_strategy<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Strategy {
    if rng.random_bool(cfg.p_random) {
        Strategy::Random
    } else {
        let window = rng.random_range(
            cfg.behavior.chartist_window_min..=cfg.behavior.chartist_window_max,
        );
        Strategy::Chartist { window }
    }
}

impl MarketState {
    /// Seeded initial state: endowments, strategies, entrant pool.
    pub fn init(cfg: &SimConfig, seed: u64) -> MarketState {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let initial = endowment::initial_population(cfg, &mut rng);
        let pool = endowment::entrant_pool(cfg, &mut rng);
        let mut traders = BTreeMap::new();
        for i in 0..cfg.n_traders_0 {
            let strategy = draw_strategy(cfg, &mut rng);
            let id = i as TraderId;
            traders.insert(
                id,
                Trader::new(id, strategy, initial.cash[i], initial.coins[i]),
            );
        }
        MarketState {
            day: 0,
            traders,
            book: Book::new(cfg.price_0),
            prices: vec![cfg.price_0],
            entrant_cash: pool.cash,
            entrant_cursor: 0,
            carry_mined: 0.0,
            next_trader_id: cfg.n_traders_0 as TraderId,
            rng,
        }
    }

    /// Cash currently held by all traders.
    pub fn total_cash(&self) -> f64 {
        self.traders.values().map(|t| t.cash).sum()
    }

    /// Coins currently held by all traders.
    pub fn total_coins(&self) -> f64 {
        self.traders.values().map(|t| t.coins).sum()
    }
}

/// Give reserved resources back to an order's owner after the order left
/// the book for any reason.
fn release(traders: &mut BTreeMap<TraderId, Trader>, order: &BookOrder) {
    if let Some(t) = traders.get_mut(&order.trader_id) {
        match order.side {
            Side::Buy => t.committed_cash -= order.budget,
            Side::Sell => t.committed_coins -= order.residual,
        }
    }
}

/// Apply trades and removals from one insertion to the trader ledgers.
fn settle(
    traders: &mut BTreeMap<TraderId, Trader>,
    report: &InsertReport,
    sink: &mut Vec<Trade>,
) {
    for trade in &report.trades {
        let value = trade.amount * trade.price;
        let buyer = traders.get_mut(&trade.buy_trader).expect("buyer exists");
        buyer.cash -= value;
        buyer.committed_cash -= value;
        buyer.coins += trade.amount;
        let seller = traders.get_mut(&trade.sell_trader).expect("seller exists");
        seller.coins -= trade.amount;
        seller.committed_coins -= trade.amount;
        seller.cash += value;
        sink.push(*trade);
    }
    for order in &report.removed {
        release(traders, order);
    }
}

/// Commit resources and place one order, settling any resulting trades.
/// Market buys reserve cash at the reference price they were sized against.
fn place_order(
    state: &mut MarketState,
    trader_id: TraderId,
    intent: &OrderIntent,
    reference_price: f64,
    sink: &mut Vec<Trade>,
) {
    let trader = state.traders.get_mut(&trader_id).expect("trader exists");
    let cap = trader.available_cash();
    let order = state
        .book
        .order_from_intent(trader_id, intent, reference_price, cap);
    match intent.side {
        Side::Buy => trader.committed_cash += order.budget,
        Side::Sell => trader.committed_coins += order.residual,
    }
    let report = state.book.insert(order);
    settle(&mut state.traders, &report, sink);
}

/// Cash and coin flows caused by population adjustment.
#[derive(Debug, Default, Clone, Copy)]
pub struct PopulationDelta {
    pub entrant_cash_in: f64,
    pub removed_cash_out: f64,
    pub removed_coins_out: f64,
    pub entered: usize,
    pub removed: usize,
}

/// Move the population toward `target`: draw entrants from the
/// pre-generated pool, or remove random traders. A removed trader's
/// resting orders are canceled, her coins go out through a same-day market
/// sell, and whatever remains unsold leaves circulation with her.
pub fn adjust_population(
    state: &mut MarketState,
    target: usize,
    cfg: &SimConfig,
    sink: &mut Vec<Trade>,
) -> Result<PopulationDelta> {
    let mut delta = PopulationDelta::default();
    let count = state.traders.len();
    let day = state.day;
    let reference_price = state.prices[day];
    if target > count {
        for _ in 0..target - count {
            if state.entrant_cursor >= state.entrant_cash.len() {
                return Err(Error::PoolExhausted { day });
            }
            let cash = state.entrant_cash[state.entrant_cursor];
            state.entrant_cursor += 1;
            let strategy = draw_strategy(cfg, &mut state.rng);
            let id = state.next_trader_id;
            state.next_trader_id += 1;
            state.traders.insert(id, Trader::new(id, strategy, cash, 0.0));
            delta.entrant_cash_in += cash;
            delta.entered += 1;
        }
    } else if target < count {
        let ids: Vec<TraderId> = state.traders.keys().copied().collect();
        let chosen = rand::seq::index::sample(&mut state.rng, ids.len(), count - target);
        let mut leaving: Vec<TraderId> = chosen.iter().map(|i| ids[i]).collect();
        leaving.sort_unstable();
        for id in leaving {
            for order in state.book.cancel_trader(id) {
                release(&mut state.traders, &order);
            }
            let coins = state.traders[&id].coins;
            if coins >= SATOSHI {
                let intent = OrderIntent {
                    side: Side::Sell,
                    amount: coins,
                    limit_price: 0.0,
                    issue_day: day,
                    expiry_day: day,
                };
                place_order(state, id, &intent, reference_price, sink);
                // The unsold remainder leaves the book with the trader.
                for order in state.book.cancel_trader(id) {
                    release(&mut state.traders, &order);
                }
            }
            let trader = state.traders.remove(&id).expect("trader exists");
            delta.removed_cash_out += trader.cash;
            delta.removed_coins_out += trader.coins;
            delta.removed += 1;
        }
    }
    Ok(delta)
}

/// Distribute newly mined coins pro-rata among `round(mined)` randomly
/// chosen coin-holding random traders (all of them when fewer exist).
/// Returns the amount actually distributed; undeliverable coins accrue to
/// a carry-over buffer for the next day.
pub fn allocate_mining(state: &mut MarketState, scheduled: f64) -> f64 {
    let total = state.carry_mined + scheduled;
    if total <= 0.0 {
        return 0.0;
    }
    let recipients = total.round() as usize;
    if recipients == 0 {
        state.carry_mined = total;
        return 0.0;
    }
    let eligible: Vec<TraderId> = state
        .traders
        .values()
        .filter(|t| t.strategy == Strategy::Random && t.coins > 0.0)
        .map(|t| t.id)
        .collect();
    if eligible.is_empty() {
        state.carry_mined = total;
        return 0.0;
    }
    let k = recipients.min(eligible.len());
    let chosen_idx = rand::seq::index::sample(&mut state.rng, eligible.len(), k);
    let mut chosen: Vec<TraderId> = chosen_idx.iter().map(|i| eligible[i]).collect();
    chosen.sort_unstable();
    let held: Vec<f64> = chosen.iter().map(|id| state.traders[id].coins).collect();
    let held_sum: f64 = held.iter().sum();
    let mut distributed = 0.0;
    for (j, id) in chosen.iter().enumerate() {
        // Last recipient takes the remainder so the total is exact.
        let share = if j + 1 == chosen.len() {
            (total - distributed).max(0.0)
        } else {
            total * held[j] / held_sum
        };
        state.traders.get_mut(id).expect("trader exists").coins += share;
        distributed += share;
    }
    state.carry_mined = 0.0;
    distributed
}

/// Tolerant ledger audit: no negative holdings, commitments within
/// holdings, and trader commitments equal to the book's resting orders.
fn audit(state: &MarketState) -> Result<()> {
    let tol = |v: f64| 1e-6 * (1.0 + v.abs());
    for t in state.traders.values() {
        if t.cash < -tol(t.cash)
            || t.coins < -tol(t.coins)
            || t.committed_cash < -tol(t.committed_cash)
            || t.committed_coins < -tol(t.committed_coins)
        {
            return Err(Error::Engine(format!(
                "negative holdings for trader {}: {t:?}",
                t.id
            )));
        }
        if t.committed_cash > t.cash + tol(t.cash) {
            return Err(Error::Engine(format!(
                "trader {} committed more cash than held",
                t.id
            )));
        }
        if t.committed_coins > t.coins + tol(t.coins) {
            return Err(Error::Engine(format!(
                "trader {} committed more coins than held",
                t.id
            )));
        }
    }
    let book_commitments = state.book.commitments();
    for t in state.traders.values() {
        let (cash, coins) = book_commitments.get(&t.id).copied().unwrap_or((0.0, 0.0));
        if (t.committed_cash - cash).abs() > tol(cash) {
            return Err(Error::Engine(format!(
                "trader {} cash commitment {} disagrees with book {}",
                t.id, t.committed_cash, cash
            )));
        }
        if (t.committed_coins - coins).abs() > tol(coins) {
            return Err(Error::Engine(format!(
                "trader {} coin commitment {} disagrees with book {}",
                t.id, t.committed_coins, coins
            )));
        }
    }
    for id in book_commitments.keys() {
        if !state.traders.contains_key(id) {
            return Err(Error::Engine(format!(
                "book holds orders of removed trader {id}"
            )));
        }
    }
    Ok(())
}

/// Advance one day. `sink` accumulates the run's trade log.
pub fn step(
    state: &mut MarketState,
    schedule: &DriverSchedule,
    cfg: &SimConfig,
    sink: &mut Vec<Trade>,
) -> Result<DayRecord> {
    let day = state.day;
    if day >= schedule.target_traders.len() {
        return Err(Error::Engine(format!("schedule exhausted at day {day}")));
    }
    let reference_price = state.prices[day];
    let mut day_trades: Vec<Trade> = Vec::new();

    // 1. Purge orders that expired before today and free their reserves.
    for order in state.book.expire(day) {
        release(&mut state.traders, &order);
    }

    // 2. Entries and exits toward today's target.
    let delta = adjust_population(state, schedule.target_traders[day], cfg, &mut day_trades)?;

    // 3. Newly mined coins.
    let mined_in = allocate_mining(state, schedule.mined_coins[day]);

    // 4. Activation draws, in id order for determinism.
    let params = &cfg.behavior;
    let mut active: Vec<TraderId> = Vec::new();
    for (id, trader) in state.traders.iter() {
        if agents::is_active(trader.strategy, params, &mut state.rng) {
            active.push(*id);
        }
    }

    // 5. One order per active trader, in uniformly shuffled sequence.
    // Signals, sizing, and limit prices all anchor to the daily reference
    // price; only the matching rules see the live transaction price.
    active.shuffle(&mut state.rng);
    let sigma = effective_sigma(agents::sigma_i(
        &state.prices[..=day],
        params.k,
        params.t_window,
    ));
    for id in active {
        let trader = state.traders.get(&id).expect("active trader exists");
        let intent = agents::decide_order(
            trader,
            &state.prices[..=day],
            reference_price,
            sigma,
            params,
            day,
            &mut state.rng,
        );
        if let Some(intent) = intent {
            place_order(state, id, &intent, reference_price, &mut day_trades);
        }
    }

    // 6. Close the day and record it.
    let volume: f64 = day_trades.iter().map(|t| t.amount).sum();
    let close = if day_trades.is_empty() {
        reference_price
    } else {
        state.book.last_price
    };
    state.prices.push(close);

    let mut record = DayRecord {
        day,
        price: close,
        volume,
        traders: state.traders.len(),
        coins: 0.0,
        random_coins: 0.0,
        chartist_coins: 0.0,
        random_cash: 0.0,
        chartist_cash: 0.0,
        random_wealth: 0.0,
        chartist_wealth: 0.0,
        entrant_cash_in: delta.entrant_cash_in,
        removed_cash_out: delta.removed_cash_out,
        removed_coins_out: delta.removed_coins_out,
        mined_in,
    };
    for t in state.traders.values() {
        record.coins += t.coins;
        if t.strategy.is_chartist() {
            record.chartist_coins += t.coins;
            record.chartist_cash += t.cash;
            record.chartist_wealth += t.wealth(close);
        } else {
            record.random_coins += t.coins;
            record.random_cash += t.cash;
            record.random_wealth += t.wealth(close);
        }
    }

    sink.extend(day_trades);
    state.day += 1;
    audit(state)?;
    Ok(record)
}

/// Run the full horizon against an explicit schedule.
pub fn run_with_schedule(
    cfg: &SimConfig,
    schedule: &DriverSchedule,
    seed: u64,
) -> Result<SimOutput> {
    cfg.validate()?;
    if schedule.target_traders.len() < cfg.horizon || schedule.mined_coins.len() < cfg.horizon {
        return Err(Error::Engine(format!(
            "schedule of length {} shorter than horizon {}",
            schedule.target_traders.len(),
            cfg.horizon
        )));
    }
    let mut state = MarketState::init(cfg, seed);
    let mut series = MarketSeries::default();
    let mut trades = Vec::new();
    for _ in 0..cfg.horizon {
        let record = step(&mut state, schedule, cfg, &mut trades)?;
        series.days.push(record);
    }
    Ok(SimOutput { series, trades })
}

/// Build the schedule named by the config (empirical CSV when `data_path`
/// is set, synthetic otherwise) and run.
pub fn run(cfg: &SimConfig, seed: u64) -> Result<SimOutput> {
    let schedule = build_config_schedule(cfg)?;
    run_with_schedule(cfg, &schedule, seed)
}

/// The schedule a config resolves to.
pub fn build_config_schedule(cfg: &SimConfig) -> Result<DriverSchedule> {
    match &cfg.data_path {
        Some(path) => {
            let series = ingest::load_series(Path::new(path))?;
            ingest::build_schedule(ScheduleSource::Empirical(&series), cfg.horizon, cfg.scale)
        }
        None => ingest::build_schedule(
            ScheduleSource::Synthetic {
                n_traders_0: cfg.n_traders_0,
                n_traders_final: cfg.n_traders_final,
            },
            cfg.horizon,
            cfg.scale,
        ),
    }
}
