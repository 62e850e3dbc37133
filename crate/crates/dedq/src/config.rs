//! TOML model configuration.
//!
//! ```toml
//! lambda = 1.0
//! c = 0.0
//! q0 = 0                      # or q0 = { diffusion = 1.5 }
//!
//! [arrival.1]
//! family = "gamma"            # exponential | gamma | deterministic | uniform | hyperexponential
//! shape = 2.0                 # mean defaults to 1/lambda
//!
//! [arrival.-1]
//! family = "exponential"
//!
//! [patience.1]
//! variant = "fixed_cdf"       # fixed_cdf | hazard_scaled | none
//! base = "exponential"        # exponential (rate) | uniform (upper)
//! rate = 1.0
//! truncate_at = 3.0           # optional
//!
//! [patience.-1]
//! variant = "hazard_scaled"
//! hazard = "piecewise"        # constant (rate) | piecewise (breaks, values) | affine_capped (intercept, slope, cap)
//! breaks = [1.0]
//! values = [0.5, 2.0]
//!
//! [run]                       # all optional; command-line flags override
//! n = 64
//! horizon = 10.0
//! reps = 200
//! seed = 1
//! dt = 0.001
//! n_list = [16, 64, 256, 1024]
//! long_horizon = 50.0
//! stationary_samples = 100000
//! ```
//!
//! A missing `[patience.*]` table means infinite patience.

use std::fmt::Write as _;
use std::path::Path;

use dedq_core::model::{
    FixedBase, FixedCdf, Hazard, InitialQueue, InterArrivalFamily, InterArrivalSpec, PatienceSpec,
};
use dedq_core::ModelConfig;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::Spanned;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config file not found: {0}")]
    NotFound(String),
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("invalid value for `{key}` at line {line}: {reason}")]
    Invalid { key: String, line: usize, reason: String },
}

/// Settings of the `[run]` table.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub n: u64,
    pub horizon: f64,
    pub reps: usize,
    pub seed: u64,
    pub dt: f64,
    pub n_list: Vec<u64>,
    pub long_horizon: f64,
    pub stationary_samples: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            n: 64,
            horizon: 10.0,
            reps: 200,
            seed: 1,
            dt: 1e-3,
            n_list: vec![16, 64, 256, 1024],
            long_horizon: 50.0,
            stationary_samples: 100_000,
        }
    }
}

/// A parsed configuration together with the SHA-256 digest of its source text.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedConfig {
    pub model: ModelConfig,
    pub run: RunSettings,
    pub digest: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    lambda: Spanned<f64>,
    c: Option<Spanned<f64>>,
    q0: Option<Spanned<RawQ0>>,
    arrival: Spanned<RawPair<RawArrival>>,
    patience: Option<RawOptionalPair<RawPatience>>,
    run: Option<RawRun>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawQ0 {
    Count(i64),
    Diffusion { diffusion: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair<T> {
    #[serde(rename = "1")]
    plus: Spanned<T>,
    #[serde(rename = "-1")]
    minus: Spanned<T>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptionalPair<T> {
    #[serde(rename = "1")]
    plus: Option<Spanned<T>>,
    #[serde(rename = "-1")]
    minus: Option<Spanned<T>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArrival {
    family: Spanned<String>,
    mean: Option<Spanned<f64>>,
    shape: Option<Spanned<f64>>,
    value: Option<Spanned<f64>>,
    low: Option<Spanned<f64>>,
    high: Option<Spanned<f64>>,
    p: Option<Spanned<f64>>,
    mean1: Option<Spanned<f64>>,
    mean2: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPatience {
    variant: Spanned<String>,
    base: Option<Spanned<String>>,
    rate: Option<Spanned<f64>>,
    upper: Option<Spanned<f64>>,
    truncate_at: Option<Spanned<f64>>,
    hazard: Option<Spanned<String>>,
    breaks: Option<Spanned<Vec<f64>>>,
    values: Option<Spanned<Vec<f64>>>,
    intercept: Option<Spanned<f64>>,
    slope: Option<Spanned<f64>>,
    cap: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n: Option<Spanned<i64>>,
    horizon: Option<Spanned<f64>>,
    reps: Option<Spanned<i64>>,
    seed: Option<Spanned<i64>>,
    dt: Option<Spanned<f64>>,
    n_list: Option<Spanned<Vec<i64>>>,
    long_horizon: Option<Spanned<f64>>,
    stationary_samples: Option<Spanned<i64>>,
}

/// Line-number lookup over the source text.
struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn line(&self, offset: usize) -> usize {
        let end = offset.min(self.text.len());
        self.text.as_bytes()[..end].iter().filter(|&&b| b == b'\n').count() + 1
    }

    fn invalid<T>(&self, key: &str, span: std::ops::Range<usize>, reason: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError::Invalid {
            key: key.to_string(),
            line: self.line(span.start),
            reason: reason.into(),
        })
    }

    fn require<'v, T>(
        &self,
        value: &'v Option<Spanned<T>>,
        key: &str,
        table: std::ops::Range<usize>,
    ) -> Result<&'v Spanned<T>, ConfigError> {
        match value {
            Some(v) => Ok(v),
            None => self.invalid(key, table, "missing required key"),
        }
    }
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ConfigError::NotFound(path.display().to_string()))
        }
        Err(source) => {
            return Err(ConfigError::Io {
                path: path.display().to_string(),
                source,
            })
        }
    };
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<LoadedConfig, ConfigError> {
    let src = Source { text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Malformed {
        line: e.span().map_or(1, |s| src.line(s.start)),
        message: e.message().to_string(),
    })?;

    let lambda = *raw.lambda.get_ref();
    if !(lambda.is_finite() && lambda > 0.0) {
        return src.invalid("lambda", raw.lambda.span(), "must be finite and positive");
    }
    let c = raw.c.as_ref().map_or(0.0, |v| *v.get_ref());
    if let Some(cs) = &raw.c {
        if !c.is_finite() {
            return src.invalid("c", cs.span(), "must be finite");
        }
    }
    let q0 = match &raw.q0 {
        None => InitialQueue::Count(0),
        Some(s) => match s.get_ref() {
            RawQ0::Count(k) if *k >= 0 => InitialQueue::Count(*k as u64),
            RawQ0::Count(_) => return src.invalid("q0", s.span(), "must be nonnegative"),
            RawQ0::Diffusion { diffusion } if diffusion.is_finite() && *diffusion >= 0.0 => {
                InitialQueue::Diffusion(*diffusion)
            }
            RawQ0::Diffusion { .. } => return src.invalid("q0.diffusion", s.span(), "must be finite and nonnegative"),
        },
    };

    let arrival_plus = arrival(&src, "arrival.1", &raw.arrival.get_ref().plus, lambda)?;
    let arrival_minus = arrival(&src, "arrival.-1", &raw.arrival.get_ref().minus, lambda)?;
    let (patience_plus, patience_minus) = match &raw.patience {
        None => (PatienceSpec::None, PatienceSpec::None),
        Some(p) => (
            p.plus.as_ref().map_or(Ok(PatienceSpec::None), |s| patience(&src, "patience.1", s))?,
            p.minus.as_ref().map_or(Ok(PatienceSpec::None), |s| patience(&src, "patience.-1", s))?,
        ),
    };
    let model = ModelConfig::new(lambda, c, arrival_plus, arrival_minus, patience_plus, patience_minus, q0)
        .or_else(|e| src.invalid("arrival", raw.arrival.span(), e.to_string()))?;
    let run = run_settings(&src, raw.run.as_ref())?;

    Ok(LoadedConfig {
        model,
        run,
        digest: digest_hex(text.as_bytes()),
    })
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn digest_hex(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in hash.iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn positive(src: &Source, key: &str, v: &Spanned<f64>) -> Result<f64, ConfigError> {
    let x = *v.get_ref();
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        src.invalid(key, v.span(), "must be finite and positive")
    }
}

fn arrival(src: &Source, prefix: &str, s: &Spanned<RawArrival>, lambda: f64) -> Result<InterArrivalSpec, ConfigError> {
    let r = s.get_ref();
    let table = s.span();
    let key = |k: &str| format!("{prefix}.{k}");
    let mean = match &r.mean {
        Some(m) => positive(src, &key("mean"), m)?,
        None => 1.0 / lambda,
    };
    let family = match r.family.get_ref().as_str() {
        "exponential" => InterArrivalFamily::Exponential { mean },
        "gamma" => InterArrivalFamily::Gamma {
            shape: positive(src, &key("shape"), src.require(&r.shape, &key("shape"), table.clone())?)?,
            mean,
        },
        "deterministic" => InterArrivalFamily::Deterministic {
            value: match &r.value {
                Some(v) => positive(src, &key("value"), v)?,
                None => mean,
            },
        },
        "uniform" => {
            let low = src.require(&r.low, &key("low"), table.clone())?;
            let high = src.require(&r.high, &key("high"), table.clone())?;
            InterArrivalFamily::Uniform {
                low: *low.get_ref(),
                high: *high.get_ref(),
            }
        }
        "hyperexponential" => InterArrivalFamily::HyperExponential2 {
            p: *src.require(&r.p, &key("p"), table.clone())?.get_ref(),
            mean1: positive(src, &key("mean1"), src.require(&r.mean1, &key("mean1"), table.clone())?)?,
            mean2: positive(src, &key("mean2"), src.require(&r.mean2, &key("mean2"), table.clone())?)?,
        },
        other => {
            return src.invalid(
                &key("family"),
                r.family.span(),
                format!("unknown family `{other}` (expected exponential, gamma, deterministic, uniform or hyperexponential)"),
            )
        }
    };
    let spec = InterArrivalSpec::new(family).or_else(|e| src.invalid(prefix, table.clone(), e.to_string()))?;
    if (spec.mean() * lambda - 1.0).abs() > 1e-9 {
        return src.invalid(
            prefix,
            table,
            format!("mean {} must equal 1/lambda = {}", spec.mean(), 1.0 / lambda),
        );
    }
    Ok(spec)
}

fn patience(src: &Source, prefix: &str, s: &Spanned<RawPatience>) -> Result<PatienceSpec, ConfigError> {
    let r = s.get_ref();
    let table = s.span();
    let key = |k: &str| format!("{prefix}.{k}");
    match r.variant.get_ref().as_str() {
        "none" => Ok(PatienceSpec::None),
        "fixed_cdf" => {
            let base_name = src.require(&r.base, &key("base"), table.clone())?;
            let base = match base_name.get_ref().as_str() {
                "exponential" => FixedBase::Exponential {
                    rate: positive(src, &key("rate"), src.require(&r.rate, &key("rate"), table.clone())?)?,
                },
                "uniform" => FixedBase::Uniform {
                    upper: positive(src, &key("upper"), src.require(&r.upper, &key("upper"), table.clone())?)?,
                },
                other => {
                    return src.invalid(
                        &key("base"),
                        base_name.span(),
                        format!("unknown base `{other}` (expected exponential or uniform)"),
                    )
                }
            };
            let truncate = match &r.truncate_at {
                Some(t) => Some(positive(src, &key("truncate_at"), t)?),
                None => None,
            };
            FixedCdf::new(base, truncate)
                .map(PatienceSpec::FixedCdf)
                .or_else(|e| src.invalid(prefix, table, e.to_string()))
        }
        "hazard_scaled" => {
            let kind = src.require(&r.hazard, &key("hazard"), table.clone())?;
            let hazard = match kind.get_ref().as_str() {
                "constant" => {
                    let rate = src.require(&r.rate, &key("rate"), table.clone())?;
                    Hazard::constant(*rate.get_ref()).or_else(|e| src.invalid(&key("rate"), rate.span(), e.to_string()))
                }
                "piecewise" => {
                    let breaks = src.require(&r.breaks, &key("breaks"), table.clone())?;
                    let values = src.require(&r.values, &key("values"), table.clone())?;
                    Hazard::piecewise(breaks.get_ref().clone(), values.get_ref().clone())
                        .or_else(|e| src.invalid(&key("values"), values.span(), e.to_string()))
                }
                "affine_capped" => {
                    let intercept = r.intercept.as_ref().map_or(0.0, |v| *v.get_ref());
                    let slope = src.require(&r.slope, &key("slope"), table.clone())?;
                    let cap = r.cap.as_ref().map_or(f64::INFINITY, |v| *v.get_ref());
                    Hazard::affine_capped(intercept, *slope.get_ref(), cap)
                        .or_else(|e| src.invalid(prefix, table.clone(), e.to_string()))
                }
                other => {
                    return src.invalid(
                        &key("hazard"),
                        kind.span(),
                        format!("unknown hazard `{other}` (expected constant, piecewise or affine_capped)"),
                    )
                }
            }?;
            Ok(PatienceSpec::HazardScaled(hazard))
        }
        other => src.invalid(
            &key("variant"),
            r.variant.span(),
            format!("unknown variant `{other}` (expected fixed_cdf, hazard_scaled or none)"),
        ),
    }
}

fn run_settings(src: &Source, raw: Option<&RawRun>) -> Result<RunSettings, ConfigError> {
    let mut run = RunSettings::default();
    let Some(r) = raw else {
        return Ok(run);
    };
    let count = |key: &str, v: &Spanned<i64>, min: i64| -> Result<i64, ConfigError> {
        if *v.get_ref() >= min {
            Ok(*v.get_ref())
        } else {
            src.invalid(key, v.span(), format!("must be at least {min}"))
        }
    };
    if let Some(v) = &r.n {
        run.n = count("run.n", v, 1)? as u64;
    }
    if let Some(v) = &r.horizon {
        run.horizon = positive(src, "run.horizon", v)?;
    }
    if let Some(v) = &r.reps {
        run.reps = count("run.reps", v, 1)? as usize;
    }
    if let Some(v) = &r.seed {
        run.seed = count("run.seed", v, 0)? as u64;
    }
    if let Some(v) = &r.dt {
        run.dt = positive(src, "run.dt", v)?;
    }
    if let Some(v) = &r.long_horizon {
        run.long_horizon = positive(src, "run.long_horizon", v)?;
    }
    if let Some(v) = &r.stationary_samples {
        run.stationary_samples = count("run.stationary_samples", v, 1)? as usize;
    }
    if let Some(v) = &r.n_list {
        let list = v.get_ref();
        if list.is_empty() || list.iter().any(|&n| n < 1) || list.windows(2).any(|w| w[0] >= w[1]) {
            return src.invalid("run.n_list", v.span(), "must be nonempty, positive and strictly increasing");
        }
        run.n_list = list.iter().map(|&n| n as u64).collect();
    }
    Ok(run)
}
