//! Event-driven simulation of the `n`-th double-ended queue.
//!
//! Arrivals of each class form a renewal process. An arrival that finds the
//! opposite class waiting is matched FCFS with the head-of-line opposite
//! customer; otherwise it joins its own queue with deadline `t + d`. A
//! deadline that fires while the customer still waits is a renege.
//!
//! Simultaneous events are processed in the order class-1 arrival, class -1
//! arrival, reneges (by class, then index). A deadline that coincides with a
//! match therefore loses to the match.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::error::{invalid, Result};
use crate::model::{effective_rates, sample_interarrival, Class, ModelConfig};
use crate::rng::RngStream;

/// How a customer left the system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    /// Matched at `time` with customer `partner` of the opposite class.
    Matched {
        time: f64,
        partner: i64,
    },
    Reneged {
        time: f64,
    },
    /// Still waiting at the horizon.
    Censored,
}

/// One entry of the customer ledger.
#[derive(Clone, Debug, PartialEq)]
pub struct Customer {
    pub class: Class,
    /// `k >= 1` for arrivals after time 0, `k <= 0` for initial class-1 customers.
    pub k: i64,
    pub arrival: f64,
    pub patience: f64,
    pub outcome: Outcome,
    /// Position in the processing order; initial customers come first.
    pub seq: u64,
}

impl Customer {
    /// Departure time, if resolved within the horizon.
    pub fn departure(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Matched { time, .. } | Outcome::Reneged { time } => Some(time),
            Outcome::Censored => None,
        }
    }

    pub fn reneged(&self) -> bool {
        matches!(self.outcome, Outcome::Reneged { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// The arriving customer joined its queue.
    Arrival,
    /// The arriving customer was matched on arrival.
    Match,
    Renege,
}

/// Counter values right after an event.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub arrivals: [u64; 2],
    pub reneges: [u64; 2],
    pub q: i64,
}

impl Counters {
    pub fn n(&self, class: Class) -> u64 {
        self.arrivals[class.index()]
    }

    pub fn g(&self, class: Class) -> u64 {
        self.reneges[class.index()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    /// Class and index of the customer who arrived or reneged.
    pub class: Class,
    pub k: i64,
    pub counters: Counters,
}

/// Event-sourced sample path of one run over `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathRecord {
    pub n: u64,
    pub horizon: f64,
    /// Limit rate `lambda`.
    pub lambda: f64,
    /// `(lambda^n_1, lambda^n_-1)`.
    pub rates: [f64; 2],
    /// `Q(0) = Q_1(0)`.
    pub q0: u64,
    pub events: Vec<Event>,
    /// Ledger per class, ordered by `k` ascending.
    pub customers: [Vec<Customer>; 2],
}

impl PathRecord {
    /// Ledger entry for `(class, k)`.
    pub fn customer(&self, class: Class, k: i64) -> Option<&Customer> {
        let offset = match class {
            Class::Plus => self.q0 as i64,
            Class::Minus => 0,
        };
        let pos = k + offset - 1;
        if pos < 0 {
            return None;
        }
        self.customers[class.index()].get(pos as usize)
    }

    /// Initial queue of `class` (`Q_i(0)`).
    pub fn initial(&self, class: Class) -> u64 {
        match class {
            Class::Plus => self.q0,
            Class::Minus => 0,
        }
    }

    /// Arrival times `t_{i,1}, t_{i,2}, ...` of post-0 customers.
    pub fn arrival_times(&self, class: Class) -> Vec<f64> {
        let skip = self.initial(class) as usize;
        self.customers[class.index()][skip..]
            .iter()
            .map(|c| c.arrival)
            .collect()
    }

    /// Counters at time `t` (right-continuous).
    pub fn counters_at(&self, t: f64) -> Counters {
        let idx = self.events.partition_point(|e| e.time <= t);
        if idx == 0 {
            Counters {
                q: self.q0 as i64,
                ..Counters::default()
            }
        } else {
            self.events[idx - 1].counters
        }
    }

    pub fn q_at(&self, t: f64) -> i64 {
        self.counters_at(t).q
    }
}

/// Supplies inter-arrival and patience draws to the simulator.
pub trait ArrivalSource {
    /// Next inter-arrival time `u^n_{i,k}` (already divided by `n`).
    fn interarrival(&mut self, class: Class) -> f64;
    /// Patience `d^n_{i,k}` of the next customer of `class`.
    fn patience(&mut self, class: Class) -> f64;
}

/// Draws from a [`ModelConfig`] for the `n`-th system.
pub struct ConfigSource<'a> {
    config: &'a ModelConfig,
    n: u64,
    means: [f64; 2],
    rng: &'a mut RngStream,
}

impl<'a> ConfigSource<'a> {
    pub fn new(config: &'a ModelConfig, n: u64, rng: &'a mut RngStream) -> Result<Self> {
        let means = [
            config.class_mean(Class::Plus, n)?,
            config.class_mean(Class::Minus, n)?,
        ];
        Ok(ConfigSource {
            config,
            n,
            means,
            rng,
        })
    }
}

impl ArrivalSource for ConfigSource<'_> {
    fn interarrival(&mut self, class: Class) -> f64 {
        sample_interarrival(
            self.config.arrival(class),
            self.n,
            self.means[class.index()],
            self.rng,
        )
    }

    fn patience(&mut self, class: Class) -> f64 {
        self.config.patience(class).sample(self.n, self.rng)
    }
}

/// Static description of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSetup {
    pub n: u64,
    pub horizon: f64,
    pub lambda: f64,
    pub rates: [f64; 2],
    pub q0: u64,
}

/// Simulates the `n`-th system of `config` on `[0, horizon]`.
pub fn simulate(
    config: &ModelConfig,
    n: u64,
    horizon: f64,
    rng: &mut RngStream,
) -> Result<PathRecord> {
    let (plus, minus) = effective_rates(config, n)?;
    let setup = RunSetup {
        n,
        horizon,
        lambda: config.lambda(),
        rates: [plus, minus],
        q0: config.q0().count(n),
    };
    let mut source = ConfigSource::new(config, n, rng)?;
    simulate_with(setup, &mut source)
}

#[derive(Clone, Copy, Debug)]
struct Deadline {
    time: f64,
    class: Class,
    k: i64,
}

impl PartialEq for Deadline {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Deadline {}

impl PartialOrd for Deadline {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Deadline {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.class.cmp(&other.class))
            .then(self.k.cmp(&other.k))
    }
}

enum Next {
    Arrival(Class),
    Renege(Deadline),
}

struct Engine {
    customers: [Vec<Customer>; 2],
    queues: [VecDeque<i64>; 2],
    deadlines: BinaryHeap<Reverse<Deadline>>,
    counters: Counters,
    q0: u64,
    seq: u64,
}

impl Engine {
    fn slot(&self, class: Class, k: i64) -> usize {
        let offset = match class {
            Class::Plus => self.q0 as i64,
            Class::Minus => 0,
        };
        (k + offset - 1) as usize
    }

    fn waiting(&self, class: Class) -> u64 {
        let q = self.counters.q;
        match class {
            Class::Plus => q.max(0) as u64,
            Class::Minus => (-q).max(0) as u64,
        }
    }

    fn enqueue(&mut self, class: Class, k: i64, arrival: f64, patience: f64) {
        self.queues[class.index()].push_back(k);
        if patience.is_finite() {
            self.deadlines.push(Reverse(Deadline {
                time: arrival + patience,
                class,
                k,
            }));
        }
    }

    /// Pops the head-of-line waiting customer of `class`, skipping departed ones.
    fn pop_head(&mut self, class: Class) -> i64 {
        loop {
            let k = self.queues[class.index()]
                .pop_front()
                .expect("queue count and queue contents agree");
            let slot = self.slot(class, k);
            if self.customers[class.index()][slot].outcome == Outcome::Censored {
                return k;
            }
        }
    }
}

/// Runs the simulator on draws from `source`.
pub fn simulate_with<S: ArrivalSource + ?Sized>(
    setup: RunSetup,
    source: &mut S,
) -> Result<PathRecord> {
    if !(setup.horizon.is_finite() && setup.horizon > 0.0) {
        return Err(invalid("horizon", "must be finite and positive"));
    }
    let mut eng = Engine {
        customers: [Vec::new(), Vec::new()],
        queues: [VecDeque::new(), VecDeque::new()],
        deadlines: BinaryHeap::new(),
        counters: Counters {
            q: setup.q0 as i64,
            ..Counters::default()
        },
        q0: setup.q0,
        seq: 0,
    };

    // Initial class-1 customers, head of line first (k = 0, -1, ...).
    let q0 = setup.q0 as i64;
    let mut initial: Vec<Customer> = Vec::with_capacity(setup.q0 as usize);
    for j in 0..q0 {
        let k = -j;
        let d = source.patience(Class::Plus);
        initial.push(Customer {
            class: Class::Plus,
            k,
            arrival: 0.0,
            patience: d,
            outcome: Outcome::Censored,
            seq: j as u64,
        });
    }
    eng.seq = setup.q0;
    for c in &initial {
        eng.enqueue(Class::Plus, c.k, 0.0, c.patience);
    }
    initial.reverse();
    eng.customers[0] = initial;

    let mut next_arrival = [
        source.interarrival(Class::Plus),
        source.interarrival(Class::Minus),
    ];
    let mut next_k = [1i64, 1i64];
    let mut events = Vec::new();

    loop {
        // tie order: arrival +1, arrival -1, reneges
        let mut best = if next_arrival[0] <= next_arrival[1] {
            (next_arrival[0], Next::Arrival(Class::Plus))
        } else {
            (next_arrival[1], Next::Arrival(Class::Minus))
        };
        if let Some(Reverse(d)) = eng.deadlines.peek() {
            if d.time < best.0 {
                best = (d.time, Next::Renege(*d));
            }
        }
        let (time, next) = best;
        if !(time <= setup.horizon) {
            break;
        }
        match next {
            Next::Arrival(class) => {
                let ci = class.index();
                let k = next_k[ci];
                next_k[ci] += 1;
                let d = source.patience(class);
                let seq = eng.seq;
                eng.seq += 1;
                let opp = class.opposite();
                let opp_waiting = eng.waiting(opp) > 0;
                eng.counters.arrivals[ci] += 1;
                eng.counters.q += class.sign();
                let mut customer = Customer {
                    class,
                    k,
                    arrival: time,
                    patience: d,
                    outcome: Outcome::Censored,
                    seq,
                };
                let kind = if opp_waiting {
                    let partner = eng.pop_head(opp);
                    let slot = eng.slot(opp, partner);
                    eng.customers[opp.index()][slot].outcome =
                        Outcome::Matched { time, partner: k };
                    customer.outcome = Outcome::Matched { time, partner };
                    EventKind::Match
                } else {
                    eng.enqueue(class, k, time, d);
                    EventKind::Arrival
                };
                eng.customers[ci].push(customer);
                events.push(Event {
                    time,
                    kind,
                    class,
                    k,
                    counters: eng.counters,
                });
                next_arrival[ci] = time + source.interarrival(class);
            }
            Next::Renege(deadline) => {
                eng.deadlines.pop();
                let slot = eng.slot(deadline.class, deadline.k);
                let ci = deadline.class.index();
                if eng.customers[ci][slot].outcome != Outcome::Censored {
                    continue;
                }
                eng.customers[ci][slot].outcome = Outcome::Reneged { time };
                eng.counters.reneges[ci] += 1;
                eng.counters.q -= deadline.class.sign();
                events.push(Event {
                    time,
                    kind: EventKind::Renege,
                    class: deadline.class,
                    k: deadline.k,
                    counters: eng.counters,
                });
            }
        }
    }

    Ok(PathRecord {
        n: setup.n,
        horizon: setup.horizon,
        lambda: setup.lambda,
        rates: setup.rates,
        q0: setup.q0,
        events,
        customers: eng.customers,
    })
}

/// Checks flow conservation `Q = Q(0) + N_1 - N_-1 - G_1 + G_-1` and
/// one-sidedness after every event.
///
/// One-sidedness is checked against a replay of the ledger: the number of
/// waiting customers of each class must equal `Q^+` and `Q^-`.
pub fn verify_conservation(path: &PathRecord) -> bool {
    let mut waiting = [path.q0 as i64, 0i64];
    let mut prev = Counters {
        q: path.q0 as i64,
        ..Counters::default()
    };
    let mut prev_time = 0.0;
    for e in &path.events {
        let c = e.counters;
        let identity =
            path.q0 as i64 + c.arrivals[0] as i64 - c.arrivals[1] as i64 - c.reneges[0] as i64
                + c.reneges[1] as i64;
        if c.q != identity || e.time < prev_time {
            return false;
        }
        if (0..2).any(|i| c.arrivals[i] < prev.arrivals[i] || c.reneges[i] < prev.reneges[i]) {
            return false;
        }
        let Some(customer) = path.customer(e.class, e.k) else {
            return false;
        };
        let ci = e.class.index();
        let oi = e.class.opposite().index();
        match e.kind {
            EventKind::Arrival => waiting[ci] += 1,
            EventKind::Match => waiting[oi] -= 1,
            EventKind::Renege => {
                if customer.outcome != (Outcome::Reneged { time: e.time }) {
                    return false;
                }
                waiting[ci] -= 1;
            }
        }
        if waiting[0] < 0 || waiting[1] < 0 || waiting[0] * waiting[1] != 0 {
            return false;
        }
        if waiting[0] != c.q.max(0) || waiting[1] != (-c.q).max(0) {
            return false;
        }
        prev = c;
        prev_time = e.time;
    }
    path.customers.iter().flatten().all(|c| match c.outcome {
        Outcome::Reneged { time } => time == c.arrival + c.patience,
        Outcome::Matched { time, .. } => time <= c.arrival + c.patience,
        Outcome::Censored => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_horizon() {
        struct Never;
        impl ArrivalSource for Never {
            fn interarrival(&mut self, _: Class) -> f64 {
                1.0
            }
            fn patience(&mut self, _: Class) -> f64 {
                f64::INFINITY
            }
        }
        let setup = RunSetup {
            n: 1,
            horizon: 0.0,
            lambda: 1.0,
            rates: [1.0, 1.0],
            q0: 0,
        };
        assert!(simulate_with(setup, &mut Never).is_err());
    }
}
