//! Derived processes of a sample path: offered and virtual waiting times,
//! eventual-abandonment counters, and fluid/diffusion scaling.
//!
//! Quantities that depend on the future beyond the horizon are censored.
//! Eventual abandonment of a customer still waiting at the horizon is
//! unknown, so every quantity that counts it is only available before that
//! customer's arrival time (the resolved prefix).

use alloc::vec::Vec;

use crate::des::{Outcome, PathRecord};
use crate::error::{invalid, Result};
use crate::grid::node_count;
use crate::math;
use crate::model::Class;

/// Offered waiting time of one customer; `None` when censored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OfferedWait {
    pub class: Class,
    pub k: i64,
    pub wait: Option<f64>,
}

/// Offered waits of every customer in the ledger, ordered by class then `k`.
///
/// For post-0 customers the opposite-class arrival serving them is indexed by
/// `k + Q_i(0) - R_i(t-) - Q_-i(0) + R_-i(t-)`, with `R(t-)` counting the
/// eventual reneges among customers processed before this arrival. A
/// nonpositive index means an opposite customer was already waiting.
pub fn offered_waits(path: &PathRecord) -> Vec<OfferedWait> {
    let mut out = Vec::with_capacity(path.customers[0].len() + path.customers[1].len());
    let arrivals = [
        path.arrival_times(Class::Plus),
        path.arrival_times(Class::Minus),
    ];
    let lookup = |class: Class, idx: i64| -> Option<f64> {
        let list = &arrivals[class.index()];
        if idx >= 1 && (idx as usize) <= list.len() {
            Some(list[idx as usize - 1])
        } else {
            None
        }
    };

    // initial class-1 customers: head of line first
    let q0 = path.q0 as i64;
    let mut initial = Vec::with_capacity(path.q0 as usize);
    let mut ahead_reneged = 0i64;
    let mut ahead_unresolved = false;
    for j in 0..q0 {
        let k = -j;
        let c = path
            .customer(Class::Plus, k)
            .expect("initial customer in ledger");
        let wait = if ahead_unresolved {
            None
        } else {
            lookup(Class::Minus, -k + 1 - ahead_reneged)
        };
        initial.push(OfferedWait {
            class: Class::Plus,
            k,
            wait,
        });
        match c.outcome {
            Outcome::Reneged { .. } => ahead_reneged += 1,
            Outcome::Censored => ahead_unresolved = true,
            Outcome::Matched { .. } => {}
        }
    }
    initial.reverse();

    // post-0 customers in processing order
    let mut post: [Vec<OfferedWait>; 2] = [Vec::new(), Vec::new()];
    let mut reneged = [initial_reneges(path), 0i64];
    let mut unresolved = path.customers[0][..path.q0 as usize]
        .iter()
        .any(|c| c.outcome == Outcome::Censored);
    for c in processing_order(path) {
        let i = c.class;
        let wait = if unresolved {
            None
        } else {
            let idx = c.k + path.initial(i) as i64
                - reneged[i.index()]
                - path.initial(i.opposite()) as i64
                + reneged[i.opposite().index()];
            if idx <= 0 {
                Some(0.0)
            } else {
                lookup(i.opposite(), idx).map(|s| math::pos(s - c.arrival))
            }
        };
        post[i.index()].push(OfferedWait {
            class: i,
            k: c.k,
            wait,
        });
        match c.outcome {
            Outcome::Reneged { .. } => reneged[i.index()] += 1,
            Outcome::Censored => unresolved = true,
            Outcome::Matched { .. } => {}
        }
    }

    out.extend(initial);
    for list in post {
        out.extend(list);
    }
    out
}

fn initial_reneges(path: &PathRecord) -> i64 {
    path.customers[0][..path.q0 as usize]
        .iter()
        .filter(|c| c.reneged())
        .count() as i64
}

/// Post-0 customers of both classes sorted by processing order.
fn processing_order(path: &PathRecord) -> Vec<&crate::des::Customer> {
    let skip = path.q0 as usize;
    let mut all: Vec<_> = path.customers[0][skip..]
        .iter()
        .chain(path.customers[1].iter())
        .collect();
    all.sort_by_key(|c| c.seq);
    all
}

/// Eventual-abandonment counters `R_1`, `R_-1`.
///
/// `R_i(t)` counts class-`i` customers arrived by `t` who renege at some
/// point; it jumps at arrival times. Values are available on
/// `[0, resolved_prefix)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AbandonCounters {
    /// Post-0 arrival times per class.
    arrivals: [Vec<f64>; 2],
    /// `reneged[i][m]`: reneges among the first `m` post-0 arrivals.
    reneged: [Vec<u64>; 2],
    initial_reneged: u64,
    q0: u64,
    prefix: f64,
    // no customer is censored; the prefix is the closed horizon
    complete: bool,
}

impl AbandonCounters {
    /// End `T'` of the resolved prefix: the earliest arrival of a customer
    /// still waiting at the horizon, or the horizon itself.
    pub fn resolved_prefix(&self) -> f64 {
        self.prefix
    }

    /// `R_i(t)`, or `None` outside the resolved prefix.
    pub fn at(&self, class: Class, t: f64) -> Option<u64> {
        if !self.covers(t) {
            return None;
        }
        let m = self.arrivals[class.index()].partition_point(|&a| a <= t);
        let initial = match class {
            Class::Plus => self.initial_reneged,
            Class::Minus => 0,
        };
        Some(initial + self.reneged[class.index()][m])
    }

    /// Whether `t` lies in the resolved prefix.
    pub fn covers(&self, t: f64) -> bool {
        t >= 0.0 && (t < self.prefix || (self.complete && t <= self.prefix))
    }

    /// True when no customer is censored.
    pub fn complete(&self) -> bool {
        self.complete
    }

    /// `N_i(t)`: post-0 arrivals by time `t`.
    pub fn arrivals_by(&self, class: Class, t: f64) -> u64 {
        self.arrivals[class.index()].partition_point(|&a| a <= t) as u64
    }

    /// Arrival `t_{i, idx}` for `idx >= 1`, if observed.
    pub fn arrival(&self, class: Class, idx: i64) -> Option<f64> {
        let list = &self.arrivals[class.index()];
        if idx >= 1 && (idx as usize) <= list.len() {
            Some(list[idx as usize - 1])
        } else {
            None
        }
    }

    pub fn initial(&self, class: Class) -> u64 {
        match class {
            Class::Plus => self.q0,
            Class::Minus => 0,
        }
    }
}

/// Builds `R_1`, `R_-1` and the resolved prefix from the ledger.
pub fn eventual_abandon(path: &PathRecord) -> AbandonCounters {
    let skip = path.q0 as usize;
    let mut prefix = path.horizon;
    let mut complete = true;
    let mut arrivals: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut reneged: [Vec<u64>; 2] = [alloc::vec![0], alloc::vec![0]];
    for class in Class::BOTH {
        let ci = class.index();
        let from = if class == Class::Plus { skip } else { 0 };
        let mut count = 0u64;
        for c in &path.customers[ci][from..] {
            arrivals[ci].push(c.arrival);
            if c.reneged() {
                count += 1;
            }
            reneged[ci].push(count);
        }
    }
    for c in path.customers.iter().flatten() {
        if c.outcome == Outcome::Censored {
            complete = false;
            prefix = prefix.min(c.arrival);
        }
    }
    AbandonCounters {
        arrivals,
        reneged,
        initial_reneged: initial_reneges(path) as u64,
        q0: path.q0,
        prefix,
        complete,
    }
}

/// Virtual waiting times `(W_1(t), W_-1(t))`: the offered wait of a
/// hypothetical customer arriving just after `t`.
///
/// A component is `None` when `t` is outside the resolved prefix or the
/// serving opposite arrival lies beyond the horizon.
pub fn virtual_wait(path: &PathRecord, t: f64) -> [Option<f64>; 2] {
    virtual_wait_with(&eventual_abandon(path), t)
}

/// [`virtual_wait`] reusing precomputed counters.
pub fn virtual_wait_with(r: &AbandonCounters, t: f64) -> [Option<f64>; 2] {
    let mut out = [None, None];
    for class in Class::BOTH {
        let opp = class.opposite();
        let (Some(ri), Some(ro)) = (r.at(class, t), r.at(opp, t)) else {
            continue;
        };
        let idx = r.arrivals_by(class, t) as i64 + 1 + r.initial(class) as i64
            - ri as i64
            - r.initial(opp) as i64
            + ro as i64;
        out[class.index()] = if idx <= 0 {
            Some(0.0)
        } else {
            r.arrival(opp, idx).map(|s| math::pos(s - t))
        };
    }
    out
}

/// Fluid and diffusion scalings of a path sampled on a uniform grid.
///
/// Unavailable values (censored waits or abandonment counts) are NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledPath {
    pub n: u64,
    /// Limit rate used for the queue/wait relation.
    pub lambda: f64,
    pub step: f64,
    /// End of the resolved prefix of the abandonment counters.
    pub resolved_prefix: f64,
    pub horizon: f64,
    /// `Q / sqrt(n)`.
    pub q_hat: Vec<f64>,
    pub q_hat_plus: Vec<f64>,
    pub q_hat_minus: Vec<f64>,
    /// `(N_i - lambda^n_i t) / sqrt(n)`.
    pub n_hat: [Vec<f64>; 2],
    pub g_hat: [Vec<f64>; 2],
    pub r_hat: [Vec<f64>; 2],
    /// `sqrt(n) W_i`.
    pub w_hat: [Vec<f64>; 2],
    /// `Q / n`.
    pub q_bar: Vec<f64>,
    /// `N_i / n`.
    pub n_bar: [Vec<f64>; 2],
    pub g_bar: [Vec<f64>; 2],
    pub r_bar: [Vec<f64>; 2],
}

impl ScaledPath {
    pub fn len(&self) -> usize {
        self.q_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_hat.is_empty()
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.step
    }
}

/// Samples the scaled processes at `t_j = j * step` on `[0, horizon]`
/// (right-continuous).
pub fn scale(path: &PathRecord, step: f64) -> Result<ScaledPath> {
    if !(step > 0.0) {
        return Err(invalid("step", "must be positive"));
    }
    let len = node_count(step, path.horizon)?;
    let n = path.n as f64;
    let rn = math::sqrt(n);
    let r = eventual_abandon(path);
    let nan = f64::NAN;
    let col = || alloc::vec![nan; len];
    let mut sp = ScaledPath {
        n: path.n,
        lambda: path.lambda,
        step,
        resolved_prefix: r.resolved_prefix(),
        horizon: path.horizon,
        q_hat: col(),
        q_hat_plus: col(),
        q_hat_minus: col(),
        n_hat: [col(), col()],
        g_hat: [col(), col()],
        r_hat: [col(), col()],
        w_hat: [col(), col()],
        q_bar: col(),
        n_bar: [col(), col()],
        g_bar: [col(), col()],
        r_bar: [col(), col()],
    };
    for j in 0..len {
        let t = (j as f64 * step).min(path.horizon);
        let c = path.counters_at(t);
        let q = c.q as f64;
        sp.q_hat[j] = q / rn;
        sp.q_hat_plus[j] = math::pos(q) / rn;
        sp.q_hat_minus[j] = math::neg(q) / rn;
        sp.q_bar[j] = q / n;
        let w = virtual_wait_with(&r, t);
        for class in Class::BOTH {
            let i = class.index();
            let arrivals = c.arrivals[i] as f64;
            sp.n_hat[i][j] = (arrivals - path.rates[i] * t) / rn;
            sp.n_bar[i][j] = arrivals / n;
            sp.g_hat[i][j] = c.reneges[i] as f64 / rn;
            sp.g_bar[i][j] = c.reneges[i] as f64 / n;
            if let Some(ri) = r.at(class, t) {
                sp.r_hat[i][j] = ri as f64 / rn;
                sp.r_bar[i][j] = ri as f64 / n;
            }
            if let Some(wi) = w[i] {
                sp.w_hat[i][j] = rn * wi;
            }
        }
    }
    Ok(sp)
}

/// Value of the waiting-time/queue-length statistic on one path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thm41Statistic {
    /// `sup |W^_1 - Q^+/lambda| + sup |W^_-1 - Q^-/lambda|` over the prefix.
    pub value: f64,
    /// End of the grid prefix on which both waits are available.
    pub prefix: f64,
    /// The prefix covers less than 10% of the horizon.
    pub unreliable: bool,
}

/// Evaluates the statistic on the longest grid prefix where both virtual
/// waits are available.
pub fn thm41_statistic(sp: &ScaledPath) -> Thm41Statistic {
    let mut sup = [0.0f64; 2];
    let mut end = sp.len();
    for j in 0..sp.len() {
        if sp.w_hat[0][j].is_nan() || sp.w_hat[1][j].is_nan() {
            end = j;
            break;
        }
        sup[0] = sup[0].max((sp.w_hat[0][j] - sp.q_hat_plus[j] / sp.lambda).abs());
        sup[1] = sup[1].max((sp.w_hat[1][j] - sp.q_hat_minus[j] / sp.lambda).abs());
    }
    let prefix = if end == sp.len() {
        sp.horizon
    } else {
        sp.time(end)
    };
    Thm41Statistic {
        value: sup[0] + sup[1],
        prefix,
        unreliable: prefix < 0.1 * sp.horizon,
    }
}

/// Outcome of cross-checking offered waits against a simulated path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OfferedWaitCheck {
    /// Customers with a known offered wait and a resolved outcome.
    pub checked: usize,
    /// Customers skipped because the wait or outcome is censored.
    pub censored: usize,
    /// Customers whose outcome disagrees with `reneged iff d < w`, or whose
    /// departure time is not `t + min(w, d)`.
    pub outcome_mismatches: usize,
    /// Consecutive pairs in queue order with `t_k + w_k > t_{k+1} + w_{k+1}`.
    pub order_violations: usize,
}

impl OfferedWaitCheck {
    pub fn ok(&self) -> bool {
        self.outcome_mismatches == 0 && self.order_violations == 0
    }
}

/// Checks that offered waits reproduce the simulated outcomes (a tie between
/// patience and wait resolves as a match) and that offered departure times
/// `t_k + w_k` are nondecreasing in queue order within each class.
pub fn check_offered_waits(path: &PathRecord) -> OfferedWaitCheck {
    let waits = offered_waits(path);
    let mut report = OfferedWaitCheck::default();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
    for ow in &waits {
        let c = path.customer(ow.class, ow.k).expect("ledger entry");
        match (ow.wait, c.outcome) {
            (Some(w), Outcome::Reneged { time }) => {
                report.checked += 1;
                if !(c.patience < w) || time != c.arrival + c.patience {
                    report.outcome_mismatches += 1;
                }
            }
            (Some(w), Outcome::Matched { time, .. }) => {
                report.checked += 1;
                if c.patience < w || !close(time, c.arrival + w) {
                    report.outcome_mismatches += 1;
                }
            }
            _ => report.censored += 1,
        }
    }
    // queue order: initial customers head first, then k = 1, 2, ...
    for class in Class::BOTH {
        let mut ordered: Vec<&OfferedWait> = waits.iter().filter(|w| w.class == class).collect();
        ordered.sort_by_key(|w| if w.k <= 0 { (0, -w.k) } else { (1, w.k) });
        for pair in ordered.windows(2) {
            let (Some(a), Some(b)) = (pair[0].wait, pair[1].wait) else {
                continue;
            };
            let ta = path
                .customer(class, pair[0].k)
                .expect("ledger entry")
                .arrival;
            let tb = path
                .customer(class, pair[1].k)
                .expect("ledger entry")
                .arrival;
            if ta + a > tb + b + 1e-9 * (1.0 + tb + b) {
                report.order_violations += 1;
            }
        }
    }
    report
}
