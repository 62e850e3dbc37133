//! Convergence studies. Replications run on the rayon pool, each on its own
//! stream `RngStream::new(seed, tag).substream(rep)`, and results are
//! collected in replication order so every table is reproducible from the
//! plan and seed alone.

use rayon::prelude::*;

use dedq_core::des::simulate;
use dedq_core::diagnostics::{dkw_radius, ks_distance, ks_two_sample, terminal_gap, EmpiricalDistribution, MartingaleReport};
use dedq_core::model::{Class, LimitFn, PatienceSpec};
use dedq_core::path_analysis::{scale, thm41_statistic};
use dedq_core::sde::{euler_advance, euler_terminal, psi_consistency, DiffusionParams, InitialValue, SdeParams};
use dedq_core::stationary::{check_drift_condition, normalize};
use dedq_core::{ModelConfig, RngStream};

/// Significance level for the sampling-noise floor on KS thresholds.
pub const KS_ALPHA: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment plan: {0}")]
    Plan(String),
    #[error("stationary density unavailable: {0}")]
    Stationary(String),
    #[error(transparent)]
    Model(#[from] dedq_core::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub config: ModelConfig,
    pub n_list: Vec<u64>,
    pub horizon: f64,
    /// Horizon of the DES stationarity proxy and of the SDE chains.
    pub long_horizon: f64,
    pub reps: usize,
    pub dt: f64,
    pub seed: u64,
    /// Post-burn-in SDE samples for the stationary check.
    pub stationary_samples: usize,
    /// Also sample `Q^n(long_horizon)` from the DES in the stationary check.
    pub stationary_des: bool,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExperimentError::Plan("n_list must be nonempty, positive and strictly increasing".into()));
        }
        if self.reps == 0 {
            return Err(ExperimentError::Plan("reps must be at least 1".into()));
        }
        for (name, v) in [("horizon", self.horizon), ("long_horizon", self.long_horizon), ("dt", self.dt)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ExperimentError::Plan(format!("{name} must be finite and positive")));
            }
        }
        if self.dt > self.horizon {
            return Err(ExperimentError::Plan("dt must not exceed the horizon".into()));
        }
        if self.stationary_samples == 0 {
            return Err(ExperimentError::Plan("stationary_samples must be at least 1".into()));
        }
        Ok(())
    }

    fn largest_n(&self) -> u64 {
        *self.n_list.last().expect("validated nonempty")
    }
}

const TAG_THM41: u64 = 41;
const TAG_THM42_DES: u64 = 42;
const TAG_THM42_SDE: u64 = 142;
const TAG_THM43_SDE: u64 = 43;
const TAG_THM43_DES: u64 = 143;
const TAG_MARTINGALE: u64 = 15;
const TAG_PSI: u64 = 51;

/// Root stream of one experiment at one `n`.
pub fn stream(seed: u64, tag: u64, n: u64) -> RngStream {
    RngStream::new(seed, (tag << 40) ^ n)
}

/// Two-sample analogue of the DKW radius.
pub fn dkw_two_sample(m: usize, n: usize, alpha: f64) -> f64 {
    let (m, n) = (m as f64, n as f64);
    ((2.0 / alpha).ln() / 2.0 * (m + n) / (m * n)).sqrt()
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thm41Row {
    pub n: u64,
    /// Paths contributing to the quantiles.
    pub used: usize,
    /// Paths whose resolved prefix was empty; excluded.
    pub excluded: usize,
    /// Paths whose prefix covers less than 10% of the horizon; kept.
    pub unreliable: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Thm41Row {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thm41Report {
    pub rows: Vec<Thm41Row>,
    pub pass: bool,
}

/// Queue/wait statistic per `n`; passes when the medians strictly decrease.
pub fn run_thm41(plan: &ExperimentPlan) -> Result<Thm41Report> {
    plan.validate()?;
    let mut rows = Vec::with_capacity(plan.n_list.len());
    for &n in &plan.n_list {
        let root = stream(plan.seed, TAG_THM41, n);
        let stats = (0..plan.reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = root.substream(r as u64);
                let path = simulate(&plan.config, n, plan.horizon, &mut rng)?;
                Ok(thm41_statistic(&scale(&path, plan.dt)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = stats.iter().filter(|s| s.prefix > 0.0).map(|s| s.value).collect();
        let excluded = stats.len() - values.len();
        let unreliable = stats.iter().filter(|s| s.unreliable).count();
        let (median, q1, q3) = match EmpiricalDistribution::new(values) {
            Ok(e) => (e.quantile(0.5), e.quantile(0.25), e.quantile(0.75)),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };
        rows.push(Thm41Row {
            n,
            used: stats.len() - excluded,
            excluded,
            unreliable,
            median,
            q1,
            q3,
        });
    }
    let medians: Vec<f64> = rows.iter().map(|r| r.median).collect();
    let pass = medians.iter().all(|m| m.is_finite()) && strictly_decreasing(&medians);
    Ok(Thm41Report { rows, pass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thm42Row {
    pub n: u64,
    pub des_samples: usize,
    pub sde_samples: usize,
    /// DES paths with a customer still waiting at the horizon. `Q(T)` is
    /// observed exactly on such paths, so they are kept.
    pub censored: usize,
    pub ks: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thm42Report {
    pub rows: Vec<Thm42Row>,
    pub pass: bool,
}

/// Scaled terminal queue `Q^n(T) / sqrt(n)` over `reps` DES runs.
pub fn des_terminal(config: &ModelConfig, n: u64, horizon: f64, reps: usize, root: &RngStream) -> Result<(Vec<f64>, usize)> {
    let out = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = root.substream(r as u64);
            let path = simulate(config, n, horizon, &mut rng)?;
            let waiting = path.customers.iter().flatten().any(|c| c.departure().is_none());
            Ok((path.q_at(horizon) as f64 / (n as f64).sqrt(), waiting))
        })
        .collect::<Result<Vec<_>>>()?;
    let censored = out.iter().filter(|p| p.1).count();
    Ok((out.into_iter().map(|p| p.0).collect(), censored))
}

/// Euler terminal values `Q(T)` over `reps` independent paths.
pub fn sde_terminal(p: &SdeParams, horizon: f64, dt: f64, reps: usize, root: &RngStream) -> Result<Vec<f64>> {
    Ok((0..reps)
        .into_par_iter()
        .map(|r| euler_terminal(p, horizon, dt, &mut root.substream(r as u64)))
        .collect::<dedq_core::Result<Vec<_>>>()?)
}

/// Two-sample KS between DES and Euler terminal values at every `n`.
/// Passes when the largest `n` is within `max(0.1, noise floor)` and, with
/// more than one `n`, closer than the smallest.
pub fn run_thm42(plan: &ExperimentPlan) -> Result<Thm42Report> {
    plan.validate()?;
    let diffusion = DiffusionParams::from_config(&plan.config);
    let mut rows = Vec::with_capacity(plan.n_list.len());
    for &n in &plan.n_list {
        let (des, censored) = des_terminal(&plan.config, n, plan.horizon, plan.reps, &stream(plan.seed, TAG_THM42_DES, n))?;
        let q = plan.config.q0().count(n) as f64 / (n as f64).sqrt();
        let params = SdeParams {
            diffusion: diffusion.clone(),
            q: InitialValue::Constant(q),
        };
        let sde_reps = 10 * plan.reps;
        let sde = sde_terminal(&params, plan.horizon, plan.dt, sde_reps, &stream(plan.seed, TAG_THM42_SDE, n))?;
        let ks = ks_two_sample(&EmpiricalDistribution::new(des)?, &EmpiricalDistribution::new(sde)?);
        rows.push(Thm42Row {
            n,
            des_samples: plan.reps,
            sde_samples: sde_reps,
            censored,
            ks,
            threshold: 0.1f64.max(dkw_two_sample(plan.reps, sde_reps, KS_ALPHA)),
        });
    }
    let last = rows.last().expect("nonempty n_list");
    let first = &rows[0];
    let pass = last.ks < last.threshold && (rows.len() == 1 || last.ks < first.ks);
    Ok(Thm42Report { rows, pass })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thm43Report {
    pub c0: f64,
    pub ks_sde: f64,
    pub sde_samples: usize,
    pub sde_threshold: f64,
    pub burn_in: f64,
    pub thinning: f64,
    /// `(n, ks, samples, threshold)` when the DES proxy ran.
    pub des: Option<(u64, f64, usize, f64)>,
    pub pass: bool,
}

/// Burn-in and thinning interval for stationary Euler chains: ten and one
/// relaxation times `1 / H'(0)`, or a fifth and a fiftieth of `long_horizon`
/// when `H` is flat at 0.
pub fn chain_schedule(d: &DiffusionParams, long_horizon: f64) -> (f64, f64) {
    let slope = d.h_plus.slope_at_zero().min(d.h_minus.slope_at_zero());
    if slope > 0.0 {
        (10.0 / slope, 1.0 / slope)
    } else {
        (0.2 * long_horizon, 0.02 * long_horizon)
    }
}

/// Post-burn-in samples from `chains` independent Euler chains, thinned.
pub fn stationary_chain_samples(
    d: &DiffusionParams,
    start: f64,
    dt: f64,
    samples: usize,
    long_horizon: f64,
    root: &RngStream,
) -> Vec<f64> {
    const CHAINS: usize = 100;
    let (burn_in, thinning) = chain_schedule(d, long_horizon);
    let burn_steps = (burn_in / dt).ceil() as usize;
    let thin_steps = ((thinning / dt).ceil() as usize).max(1);
    let chains = CHAINS.min(samples);
    let per_chain = samples.div_ceil(chains);
    let mut out: Vec<f64> = (0..chains)
        .into_par_iter()
        .flat_map_iter(|k| {
            let mut rng = root.substream(k as u64);
            let mut q = euler_advance(d, start, dt, burn_steps, &mut rng);
            let mut draws = Vec::with_capacity(per_chain);
            for _ in 0..per_chain {
                q = euler_advance(d, q, dt, thin_steps, &mut rng);
                draws.push(q);
            }
            draws
        })
        .collect();
    out.truncate(samples);
    out
}

/// Stationary check: KS of long-run Euler samples, and optionally of DES
/// terminal values at the largest `n`, against the analytic CDF.
pub fn run_thm43(plan: &ExperimentPlan) -> Result<Thm43Report> {
    plan.validate()?;
    let d = DiffusionParams::from_config(&plan.config);
    if !check_drift_condition(&d) {
        return Err(ExperimentError::Stationary(
            "drift condition fails: need lim H_1 > c/lambda when c >= 0 and lim H_-1 > -c/lambda when c <= 0, with nonzero arrival variability".into(),
        ));
    }
    let density = normalize(&d)?;
    let n = plan.largest_n();
    let start = plan.config.q0().count(n) as f64 / (n as f64).sqrt();
    let (burn_in, thinning) = chain_schedule(&d, plan.long_horizon);
    let samples = stationary_chain_samples(
        &d,
        start,
        plan.dt,
        plan.stationary_samples,
        plan.long_horizon,
        &stream(plan.seed, TAG_THM43_SDE, 0),
    );
    let sde_samples = samples.len();
    let ks_sde = ks_distance(&EmpiricalDistribution::new(samples)?, |x| density.cdf(x));
    let sde_threshold = 0.02f64.max(dkw_radius(sde_samples, KS_ALPHA));
    let des = if plan.stationary_des {
        let (values, _) = des_terminal(&plan.config, n, plan.long_horizon, plan.reps, &stream(plan.seed, TAG_THM43_DES, n))?;
        let ks = ks_distance(&EmpiricalDistribution::new(values)?, |x| density.cdf(x));
        Some((n, ks, plan.reps, 0.05f64.max(dkw_radius(plan.reps, KS_ALPHA))))
    } else {
        None
    };
    let pass = ks_sde < sde_threshold && des.is_none_or(|(_, ks, _, th)| ks < th);
    Ok(Thm43Report {
        c0: density.c0(),
        ks_sde,
        sde_samples,
        sde_threshold,
        burn_in,
        thinning,
        des,
        pass,
    })
}

/// Parallel mean-zero test of `G_i(T) - A_i(T)`, with `A` built from `patience`.
pub fn run_martingale(
    config: &ModelConfig,
    patience: &[PatienceSpec; 2],
    n: u64,
    horizon: f64,
    reps: usize,
    seed: u64,
) -> Result<MartingaleReport> {
    for p in patience.iter().chain([config.patience(Class::Plus), config.patience(Class::Minus)]) {
        if p.hazard().is_none() {
            return Err(dedq_core::Error::NoHazard.into());
        }
    }
    let root = stream(seed, TAG_MARTINGALE, n);
    let gaps = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = root.substream(r as u64);
            let path = simulate(config, n, horizon, &mut rng)?;
            Ok(terminal_gap(&path, patience)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MartingaleReport::from_samples([
        gaps.iter().map(|g| g[0]).collect(),
        gaps.iter().map(|g| g[1]).collect(),
    ]))
}

/// `sup |Q - lambda (Psi1 - Psi-1)(X)|` over `reps` coupled Euler paths.
pub fn run_psi_coupling(p: &SdeParams, horizon: f64, dt: f64, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let root = stream(seed, TAG_PSI, 0);
    Ok((0..reps)
        .into_par_iter()
        .map(|r| psi_consistency(p, horizon, dt, &mut root.substream(r as u64)))
        .collect::<dedq_core::Result<Vec<_>>>()?)
}
