//! Price-time-priority order book with immediate matching.
//!
//! Buy orders rank by descending limit price, sell orders by ascending
//! limit price, ties broken by issue sequence; market orders (limit 0)
//! outrank every limit order on their own side. Each insertion triggers a
//! match loop on the two heads, so the book is never left crossed.

use crate::agents::{OrderIntent, SATOSHI};
use crate::{Side, TraderId};

/// An order resting in (or passing through) the book.
#[derive(Debug, Clone, PartialEq)]
pub struct BookOrder {
    pub order_id: u64,
    pub trader_id: TraderId,
    pub side: Side,
    pub original_amount: f64,
    /// Unexecuted remainder, in coins.
    pub residual: f64,
    /// Worst acceptable price; 0 marks a market order.
    pub limit_price: f64,
    /// Global arrival sequence; lower means earlier.
    pub issue_seq: u64,
    pub issue_day: usize,
    /// Last day the order participates in; purged the next day.
    pub expiry_day: usize,
    /// Remaining cash reserved for a buy order; decremented by the traded
    /// value of each fill. Unused (0) for sells.
    pub budget: f64,
}

/// One executed transaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trade {
    pub buy_order_id: u64,
    pub sell_order_id: u64,
    pub buy_trader: TraderId,
    pub sell_trader: TraderId,
    pub price: f64,
    pub amount: f64,
    pub day: usize,
}

/// Outcome of one insertion: the trades executed plus every order that
/// left the book (fully executed, or a buy that can no longer afford a
/// single satoshi), so the caller can release reserved resources.
#[derive(Debug, Default, Clone)]
pub struct InsertReport {
    pub trades: Vec<Trade>,
    pub removed: Vec<BookOrder>,
}

/// The two priority queues plus the running transaction price.
#[derive(Debug, Clone)]
pub struct Book {
    buys: Vec<BookOrder>,
    sells: Vec<BookOrder>,
    /// Price of the most recent transaction, seeded with the initial price.
    pub last_price: f64,
    next_order_id: u64,
    next_seq: u64,
}

/// True when the head pair can trade: sell limit at or below buy limit, or
/// either side is a market order.
pub fn heads_match(buy_limit: f64, sell_limit: f64) -> bool {
    buy_limit == 0.0 || sell_limit == 0.0 || sell_limit <= buy_limit
}

/// Transaction price for a matched pair, given the current price `p`:
/// limit against limit trades at the midpoint, a market order trades at
/// the counterparty's limit bounded by `p`, two market orders trade at `p`.
pub fn match_price(buy_limit: f64, sell_limit: f64, current_price: f64) -> f64 {
    match (buy_limit > 0.0, sell_limit > 0.0) {
        (true, true) => 0.5 * (buy_limit + sell_limit),
        (true, false) => buy_limit.min(current_price),
        (false, true) => sell_limit.max(current_price),
        (false, false) => current_price,
    }
}

/// Priority rank within one side; lower sorts first. Market orders (limit
/// 0) outrank every limit order on their own side; limit orders sort by
/// price with issue order breaking ties.
fn priority_key(order: &BookOrder) -> (u8, f64, u64) {
    let market = if order.limit_price == 0.0 { 0 } else { 1 };
    let price_rank = match order.side {
        // High buy limits first; negate so ascending sort does it.
        Side::Buy => -order.limit_price,
        Side::Sell => order.limit_price,
    };
    (market, price_rank, order.issue_seq)
}

fn insert_sorted(queue: &mut Vec<BookOrder>, order: BookOrder) {
    let key = priority_key(&order);
    let pos = queue.partition_point(|resting| priority_key(resting) <= key);
    queue.insert(pos, order);
}

impl Book {
    pub fn new(initial_price: f64) -> Self {
        assert!(initial_price > 0.0, "initial price must be positive");
        Book {
            buys: Vec::new(),
            sells: Vec::new(),
            last_price: initial_price,
            next_order_id: 1,
            next_seq: 1,
        }
    }

    pub fn buys(&self) -> &[BookOrder] {
        &self.buys
    }

    pub fn sells(&self) -> &[BookOrder] {
        &self.sells
    }

    /// Build a book order from an intent, reserving cash for buys at the
    /// order's own limit, or at `reference_price` for market buys. The
    /// reservation is additionally clamped to `budget_cap` so it can never
    /// exceed the trader's uncommitted cash.
    pub fn order_from_intent(
        &mut self,
        trader_id: TraderId,
        intent: &OrderIntent,
        reference_price: f64,
        budget_cap: f64,
    ) -> BookOrder {
        let basis = if intent.limit_price > 0.0 {
            intent.limit_price
        } else {
            reference_price
        };
        let budget = match intent.side {
            Side::Buy => (intent.amount * basis).min(budget_cap),
            Side::Sell => 0.0,
        };
        let order = BookOrder {
            order_id: self.next_order_id,
            trader_id,
            side: intent.side,
            original_amount: intent.amount,
            residual: intent.amount,
            limit_price: intent.limit_price,
            issue_seq: self.next_seq,
            issue_day: intent.issue_day,
            expiry_day: intent.expiry_day,
            budget,
        };
        self.next_order_id += 1;
        self.next_seq += 1;
        order
    }

    /// Place an order and run the match loop until the heads no longer
    /// match. Returns the executed trades and every order removed from the
    /// book in the process.
    pub fn insert(&mut self, order: BookOrder) -> InsertReport {
        debug_assert!(order.residual > 0.0 && order.residual <= order.original_amount);
        debug_assert!(order.limit_price >= 0.0);
        let day = order.issue_day;
        match order.side {
            Side::Buy => insert_sorted(&mut self.buys, order),
            Side::Sell => insert_sorted(&mut self.sells, order),
        }
        self.match_heads(day)
    }

    fn match_heads(&mut self, day: usize) -> InsertReport {
        let mut report = InsertReport::default();
        loop {
            let (Some(buy), Some(sell)) = (self.buys.first(), self.sells.first()) else {
                break;
            };
            if !heads_match(buy.limit_price, sell.limit_price) {
                break;
            }
            let price = match_price(buy.limit_price, sell.limit_price, self.last_price);
            let affordable = buy.budget / price;
            let amount = buy.residual.min(sell.residual).min(affordable);
            if amount < SATOSHI {
                // The buy head cannot pay for one satoshi at this price;
                // expel it so the loop can make progress.
                report.removed.push(self.buys.remove(0));
                continue;
            }
            self.buys[0].residual -= amount;
            self.buys[0].budget -= amount * price;
            self.sells[0].residual -= amount;
            self.last_price = price;
            report.trades.push(Trade {
                buy_order_id: self.buys[0].order_id,
                sell_order_id: self.sells[0].order_id,
                buy_trader: self.buys[0].trader_id,
                sell_trader: self.sells[0].trader_id,
                price,
                amount,
                day,
            });
            if self.buys[0].residual < SATOSHI {
                report.removed.push(self.buys.remove(0));
            }
            if self.sells[0].residual < SATOSHI {
                report.removed.push(self.sells.remove(0));
            }
        }
        report
    }

    /// Remove and return all resting orders that expired before `day`
    /// (end-of-day semantics: an order expiring on day `d` participates in
    /// day `d` and is purged at the start of day `d + 1`).
    pub fn expire(&mut self, day: usize) -> Vec<BookOrder> {
        let mut expired = Vec::new();
        for queue in [&mut self.buys, &mut self.sells] {
            let mut idx = 0;
            while idx < queue.len() {
                if queue[idx].expiry_day < day {
                    expired.push(queue.remove(idx));
                } else {
                    idx += 1;
                }
            }
        }
        expired
    }

    /// Remove and return all resting orders of one trader.
    pub fn cancel_trader(&mut self, trader_id: TraderId) -> Vec<BookOrder> {
        let mut canceled = Vec::new();
        for queue in [&mut self.buys, &mut self.sells] {
            let mut idx = 0;
            while idx < queue.len() {
                if queue[idx].trader_id == trader_id {
                    canceled.push(queue.remove(idx));
                } else {
                    idx += 1;
                }
            }
        }
        canceled
    }

    /// Total resting coin amount on the sell side plus buy-side reserved
    /// cash, keyed by trader. Used by conservation audits.
    pub fn commitments(&self) -> std::collections::BTreeMap<TraderId, (f64, f64)> {
        let mut map: std::collections::BTreeMap<TraderId, (f64, f64)> = Default::default();
        for order in &self.buys {
            map.entry(order.trader_id).or_default().0 += order.budget;
        }
        for order in &self.sells {
            map.entry(order.trader_id).or_default().1 += order.residual;
        }
        map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn limit_order(side: Side, amount: f64, limit: f64, seq: u64) -> BookOrder {
        BookOrder {
            order_id: seq,
            trader_id: seq as TraderId,
            side,
            original_amount: amount,
            residual: amount,
            limit_price: limit,
            issue_seq: seq,
            issue_day: 0,
            expiry_day: 100,
            budget: if side == Side::Buy {
                if limit > 0.0 {
                    amount * limit
                } else {
                    amount * 1e9 // effectively unconstrained for unit tests
                }
            } else {
                0.0
            },
        }
    }

    #[test]
    fn heads_match_cases() {
        assert!(heads_match(10.0, 8.0));
        assert!(!heads_match(7.0, 8.0));
        assert!(heads_match(0.0, 8.0));
        assert!(heads_match(7.0, 0.0));
        assert!(heads_match(0.0, 0.0));
    }

    #[test]
    fn match_price_cases() {
        assert_eq!(match_price(10.0, 8.0, 5.0), 9.0);
        assert_eq!(match_price(0.0, 0.0, 5.0), 5.0);
        assert_eq!(match_price(10.0, 0.0, 12.0), 10.0);
        assert_eq!(match_price(0.0, 8.0, 7.0), 8.0);
    }

    #[test]
    fn insert_into_empty_book_rests() {
        let mut book = Book::new(5.0);
        let report = book.insert(limit_order(Side::Buy, 3.0, 10.0, 1));
        assert!(report.trades.is_empty());
        assert!(report.removed.is_empty());
        assert_eq!(book.buys().len(), 1);
    }

    #[test]
    fn partial_fill_leaves_residual_on_larger_order() {
        let mut book = Book::new(5.0);
        book.insert(limit_order(Side::Sell, 5.0, 8.0, 1));
        let report = book.insert(limit_order(Side::Buy, 3.0, 10.0, 2));
        assert_eq!(report.trades.len(), 1);
        let trade = report.trades[0];
        assert_relative_eq!(trade.amount, 3.0);
        assert_relative_eq!(trade.price, 9.0);
        assert_eq!(book.sells()[0].residual, 2.0);
        assert!(book.buys().is_empty());
        assert_eq!(book.last_price, 9.0);
    }

    #[test]
    fn market_buy_cascades_over_sell_queue() {
        let mut book = Book::new(10.0);
        book.insert(limit_order(Side::Sell, 5.0, 8.0, 1));
        book.insert(limit_order(Side::Sell, 5.0, 9.0, 2));
        let mut buy = limit_order(Side::Buy, 10.0, 0.0, 3);
        buy.budget = 10.0 * 10.0; // reserved at the current price
        let report = book.insert(buy);
        assert_eq!(report.trades.len(), 2);
        assert_relative_eq!(report.trades[0].amount, 5.0);
        assert_relative_eq!(report.trades[1].amount, 5.0);
        // Market buy against limit sells: max(s, p) with p = 10 throughout.
        assert_relative_eq!(report.trades[0].price, 10.0);
        assert_relative_eq!(report.trades[1].price, 10.0);
        assert!(book.sells().is_empty());
        assert!(book.buys().is_empty());
    }

    #[test]
    fn market_orders_outrank_limits_on_their_side() {
        let mut book = Book::new(5.0);
        book.insert(limit_order(Side::Sell, 1.0, 8.0, 1));
        book.insert(limit_order(Side::Sell, 1.0, 0.0, 2));
        assert_eq!(book.sells()[0].limit_price, 0.0);
        assert_eq!(book.sells()[1].limit_price, 8.0);
    }

    #[test]
    fn equal_limits_execute_in_issue_order() {
        let mut book = Book::new(5.0);
        book.insert(limit_order(Side::Sell, 1.0, 8.0, 1));
        book.insert(limit_order(Side::Sell, 1.0, 8.0, 2));
        let report = book.insert(limit_order(Side::Buy, 1.0, 9.0, 3));
        assert_eq!(report.trades[0].sell_order_id, 1);
    }

    #[test]
    fn two_resting_market_orders_trade_at_current_price() {
        let mut book = Book::new(5.0);
        let mut buy = limit_order(Side::Buy, 2.0, 0.0, 1);
        buy.budget = 2.0 * 5.0;
        book.insert(buy);
        let report = book.insert(limit_order(Side::Sell, 2.0, 0.0, 2));
        assert_eq!(report.trades.len(), 1);
        assert_relative_eq!(report.trades[0].price, 5.0);
    }

    #[test]
    fn budget_exhausted_buy_is_expelled() {
        let mut book = Book::new(10.0);
        // Market buy reserved at price 10 for 10 coins.
        let mut buy = limit_order(Side::Buy, 10.0, 0.0, 1);
        buy.budget = 100.0;
        book.insert(buy);
        // A later sell matches at max(s, p) = 20: only 5 coins affordable.
        book.last_price = 20.0;
        let report = book.insert(limit_order(Side::Sell, 10.0, 20.0, 2));
        assert_eq!(report.trades.len(), 1);
        assert_relative_eq!(report.trades[0].amount, 5.0);
        assert_relative_eq!(report.trades[0].price, 20.0);
        // The buy left with the trade; the sell keeps its residual.
        assert!(book.buys().is_empty());
        assert_relative_eq!(book.sells()[0].residual, 5.0);
        let expelled: Vec<_> = report.removed.iter().map(|o| o.order_id).collect();
        assert!(expelled.contains(&1));
    }

    #[test]
    fn expire_is_a_strict_cutoff() {
        let mut book = Book::new(5.0);
        let mut o1 = limit_order(Side::Buy, 1.0, 4.0, 1);
        o1.expiry_day = 9;
        let mut o2 = limit_order(Side::Buy, 1.0, 4.0, 2);
        o2.expiry_day = 10;
        book.insert(o1);
        book.insert(o2);
        let expired = book.expire(10);
        assert_eq!(expired.len(), 1);
        assert_eq!(expired[0].order_id, 1);
        assert_eq!(book.buys().len(), 1);
        assert!(book.expire(10).is_empty());
    }

    #[test]
    fn expire_empty_book_is_noop() {
        let mut book = Book::new(5.0);
        assert!(book.expire(3).is_empty());
    }

    #[test]
    fn cancel_trader_clears_both_sides() {
        let mut book = Book::new(5.0);
        let mut a = limit_order(Side::Buy, 1.0, 4.0, 1);
        a.trader_id = 7;
        let mut b = limit_order(Side::Sell, 1.0, 9.0, 2);
        b.trader_id = 7;
        book.insert(a);
        book.insert(b);
        book.insert(limit_order(Side::Sell, 1.0, 9.5, 3));
        let canceled = book.cancel_trader(7);
        assert_eq!(canceled.len(), 2);
        assert_eq!(book.sells().len(), 1);
        assert!(book.buys().is_empty());
    }

    #[test]
    fn book_is_never_left_crossed() {
        let mut book = Book::new(5.0);
        for seq in 0..50u64 {
            let side = if seq % 3 == 0 { Side::Sell } else { Side::Buy };
            let limit = 4.0 + (seq % 7) as f64 * 0.5;
            book.insert(limit_order(side, 1.0 + (seq % 4) as f64, limit, seq + 1));
            if let (Some(b), Some(s)) = (book.buys().first(), book.sells().first()) {
                assert!(
                    !heads_match(b.limit_price, s.limit_price),
                    "crossed heads after insert {seq}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn match_price_lies_within_bounds(
            buy in prop_oneof![Just(0.0), 1.0f64..100.0],
            sell in prop_oneof![Just(0.0), 1.0f64..100.0],
            current in 1.0f64..100.0,
        ) {
            prop_assume!(heads_match(buy, sell));
            let price = match_price(buy, sell, current);
            let candidates: Vec<f64> = [buy, sell, current]
                .into_iter()
                .filter(|v| *v > 0.0)
                .collect();
            let lo = candidates.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = candidates.iter().cloned().fold(0.0, f64::max);
            prop_assert!(price >= lo - 1e-12 && price <= hi + 1e-12);
        }
    }
}
