//! Compensator of the abandonment process.
//!
//! Under hazard-rate scaling the class-`i` abandonment counter `G_i` has
//! compensator
//!
//! ```text
//! A_i(t) = sum_k int_0^{(t - t_k) ^ w_k ^ d_k} h^n(u) du,   h^n(u) = h(sqrt(n) u),
//! ```
//!
//! so `G_i - A_i` has mean zero. For a customer who left by `t`,
//! `min(w_k, d_k)` is the realized sojourn, and for one still waiting at
//! `t` both exceed `t - t_k`. The sum is therefore computable from the
//! ledger at every `t <= T`, including customers unresolved at `T`.

use alloc::vec::Vec;

use super::mean_se;
use crate::des::{simulate, PathRecord};
use crate::error::{Error, Result};
use crate::grid::{node_count, GridFunction};
use crate::math;
use crate::model::{Class, Hazard, ModelConfig, PatienceSpec};
use crate::rng::RngStream;

fn hazard_of(spec: &PatienceSpec) -> Result<Option<&Hazard>> {
    match spec {
        PatienceSpec::HazardScaled(h) => Ok(Some(h)),
        PatienceSpec::None => Ok(None),
        PatienceSpec::FixedCdf(_) => Err(Error::NoHazard),
    }
}

/// Per-customer `(arrival, sojourn)` with sojourn infinite if still waiting.
fn exposures(path: &PathRecord, class: Class) -> impl Iterator<Item = (f64, f64)> + '_ {
    path.customers[class.index()].iter().map(|c| {
        let sojourn = c.departure().map_or(f64::INFINITY, |s| s - c.arrival);
        (c.arrival, sojourn)
    })
}

/// `A_i(t)` for one `t <= T`, with hazard taken from `spec`.
pub fn compensator_at(path: &PathRecord, class: Class, spec: &PatienceSpec, t: f64) -> Result<f64> {
    let Some(h) = hazard_of(spec)? else {
        return Ok(0.0);
    };
    Ok(exposures(path, class)
        .filter(|&(a, _)| a < t)
        .map(|(a, s)| PatienceSpec::scaled_cumulative_hazard(h, path.n, (t - a).min(s)))
        .sum())
}

/// `A_i` on the grid `0, step, ..., T`.
pub fn compensator(
    path: &PathRecord,
    class: Class,
    spec: &PatienceSpec,
    step: f64,
) -> Result<GridFunction> {
    let len = node_count(step, path.horizon)?;
    let mut values = alloc::vec![0.0; len];
    if let Some(h) = hazard_of(spec)? {
        for (a, s) in exposures(path, class) {
            for (j, v) in values.iter_mut().enumerate() {
                let t = j as f64 * step;
                if t <= a {
                    continue;
                }
                *v += PatienceSpec::scaled_cumulative_hazard(h, path.n, (t - a).min(s));
            }
        }
    }
    GridFunction::new(step, values)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassReport {
    pub class: Class,
    /// Sample mean of `G_i(T) - A_i(T)`.
    pub mean: f64,
    pub se: f64,
    /// `|mean| <= 3 se`.
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleReport {
    pub classes: [ClassReport; 2],
    pub reps: usize,
}

impl MartingaleReport {
    pub fn pass(&self) -> bool {
        self.classes.iter().all(|c| c.pass)
    }

    pub fn from_samples(diffs: [Vec<f64>; 2]) -> Self {
        let reps = diffs[0].len();
        let classes = Class::BOTH.map(|class| {
            let (mean, se) = mean_se(&diffs[class.index()]);
            ClassReport {
                class,
                mean,
                se,
                pass: mean.abs() <= 3.0 * se,
            }
        });
        MartingaleReport { classes, reps }
    }
}

/// `G_i(T) - A_i(T)` for both classes on one path, with `A` computed from
/// `patience` (normally the simulated law).
pub fn terminal_gap(path: &PathRecord, patience: &[PatienceSpec; 2]) -> Result<[f64; 2]> {
    let last = path.counters_at(path.horizon);
    let mut out = [0.0; 2];
    for class in Class::BOTH {
        let a = compensator_at(path, class, &patience[class.index()], path.horizon)?;
        out[class.index()] = last.g(class) as f64 - a;
    }
    Ok(out)
}

/// Mean-zero test of `G_i(T) - A_i(T)` over `reps` independent paths.
pub fn martingale_test(
    config: &ModelConfig,
    n: u64,
    horizon: f64,
    reps: usize,
    rng: &RngStream,
) -> Result<MartingaleReport> {
    martingale_test_with(
        config,
        &[
            config.patience(Class::Plus).clone(),
            config.patience(Class::Minus).clone(),
        ],
        n,
        horizon,
        reps,
        rng,
    )
}

/// As [`martingale_test`] but with the compensator built from `patience`
/// instead of the simulated law.
pub fn martingale_test_with(
    config: &ModelConfig,
    patience: &[PatienceSpec; 2],
    n: u64,
    horizon: f64,
    reps: usize,
    rng: &RngStream,
) -> Result<MartingaleReport> {
    for p in patience
        .iter()
        .chain([config.patience(Class::Plus), config.patience(Class::Minus)])
    {
        hazard_of(p)?;
    }
    let mut diffs = [Vec::with_capacity(reps), Vec::with_capacity(reps)];
    for r in 0..reps {
        let mut stream = rng.substream(r as u64);
        let path = simulate(config, n, horizon, &mut stream)?;
        let gap = terminal_gap(&path, patience)?;
        diffs[0].push(gap[0]);
        diffs[1].push(gap[1]);
    }
    Ok(MartingaleReport::from_samples(diffs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncrementReport {
    /// Per class, per interval: `(mean, se)` of the increment of `G - A`.
    pub increments: [Vec<(f64, f64)>; 2],
    /// Two-sided normal critical value after Bonferroni adjustment.
    pub critical: f64,
    pub pass: bool,
}

/// Stricter variant: increments of `G - A` over `intervals` equal pieces of
/// `[0, T]` must each have mean zero. The per-test level is
/// `0.0027 / (2 * intervals)` so that the family-wise level matches the
/// terminal 3-SE test.
pub fn martingale_increment_test(
    config: &ModelConfig,
    n: u64,
    horizon: f64,
    reps: usize,
    intervals: usize,
    rng: &RngStream,
) -> Result<IncrementReport> {
    let intervals = intervals.max(1);
    let patience = [config.patience(Class::Plus), config.patience(Class::Minus)];
    for p in patience {
        hazard_of(p)?;
    }
    let width = horizon / intervals as f64;
    let mut samples: [Vec<Vec<f64>>; 2] = [
        alloc::vec![Vec::with_capacity(reps); intervals],
        alloc::vec![Vec::with_capacity(reps); intervals],
    ];
    for r in 0..reps {
        let mut stream = rng.substream(r as u64);
        let path = simulate(config, n, horizon, &mut stream)?;
        for class in Class::BOTH {
            let mut prev = 0.0;
            for m in 0..intervals {
                let t = if m + 1 == intervals {
                    horizon
                } else {
                    (m + 1) as f64 * width
                };
                let diff = path.counters_at(t).g(class) as f64
                    - compensator_at(&path, class, patience[class.index()], t)?;
                samples[class.index()][m].push(diff - prev);
                prev = diff;
            }
        }
    }
    let family = 2 * intervals;
    let critical = -math::normal_quantile(0.0027 / (2.0 * family as f64));
    let mut pass = true;
    let increments = samples.map(|per| {
        per.iter()
            .map(|s| {
                let (m, se) = mean_se(s);
                pass &= m.abs() <= critical * se;
                (m, se)
            })
            .collect()
    });
    Ok(IncrementReport {
        increments,
        critical,
        pass,
    })
}
