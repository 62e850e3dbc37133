//! `dedq` command line. Exit status: 0 on success, 1 on invalid input or
//! I/O failure, 2 when an acceptance check fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use dedq_core::des::simulate;
use dedq_core::diagnostics::martingale_increment_test;
use dedq_core::model::{Class, LimitH};
use dedq_core::path_analysis::{scale, thm41_statistic};
use dedq_core::picard::{solve, Solution};
use dedq_core::sde::{driver_path, euler_path, euler_terminal, DiffusionParams, InitialValue, SdeParams};
use dedq_core::stationary::normalize;
use dedq_core::{GridFunction, ModelConfig, RngStream};

use crate::config::{load_config, ConfigError, LoadedConfig, RunSettings};
use crate::experiments::{self, ExperimentError, ExperimentPlan};
use crate::output::{self, fmt_num, CsvWriter, Provenance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "dedq", version, about = "Double-ended queue with abandonment: simulation, diffusion limits and convergence checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one path and write its events as `t,kind,class,k,N1,Nm1,G1,Gm1,Q`.
    Simulate(Common),
    /// Simulate one path and write the scaled processes on the `--dt` grid.
    Analyze(Common),
    /// Solve the coupled wait equations for a driving path `x` and write `t,w1,wm1`.
    Picard {
        #[command(flatten)]
        common: Common,
        /// CSV with columns `t,x` on a uniform grid starting at 0; `#` lines are skipped.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Constant driving path `x = LEVEL` on `[0, --horizon]` when no `--input` is given.
        #[arg(long, default_value_t = 1.0)]
        level: f64,
    },
    /// Euler scheme for the limit diffusion.
    Sde {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SdeMode::Path)]
        mode: SdeMode,
    },
    /// Normalize the stationary density, print C0 and write `x,pdf,cdf`.
    Stationary(Common),
    /// Mean-zero test of reneges minus compensator; writes `class,mean,se,pass`.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Test increments over this many equal intervals instead of the terminal value.
        #[arg(long)]
        intervals: Option<usize>,
    },
    /// Run the three convergence studies; `--out` names a directory for
    /// `thm41.csv`, `thm42.csv` and `thm43.csv`.
    Convergence(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SdeMode {
    /// `t,Q` for one Euler path.
    Path,
    /// `t,X` for the driving process.
    Driver,
    /// `seed,QT` over `--reps` paths.
    Terminal,
    /// `seed,gap`: sup distance between Euler Q and the Picard map of X.
    Psi,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML model configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// System index n.
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid step.
    #[arg(long)]
    dt: Option<f64>,
    /// Output file (directory for `convergence`); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Model(#[from] dedq_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type CliResult = Result<i32, CliError>;

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors exit 1 like any other invalid input; --help and --version exit 0
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_INVALID;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INVALID
        }
    }
}

/// File settings with command-line overrides applied.
struct Resolved {
    loaded: Option<LoadedConfig>,
    run: RunSettings,
    out: Option<PathBuf>,
}

impl Resolved {
    fn new(c: &Common) -> Result<Self, CliError> {
        let loaded = c.config.as_deref().map(load_config).transpose()?;
        let mut run = loaded.as_ref().map(|l| l.run.clone()).unwrap_or_default();
        if let Some(n) = c.n {
            run.n = n;
        }
        if let Some(h) = c.horizon {
            run.horizon = h;
        }
        if let Some(r) = c.reps {
            run.reps = r;
        }
        if let Some(s) = c.seed {
            run.seed = s;
        }
        if let Some(dt) = c.dt {
            run.dt = dt;
        }
        if run.n == 0 || run.reps == 0 {
            return Err(CliError::Usage("--n and --reps must be at least 1".into()));
        }
        for (name, v) in [("--horizon", run.horizon), ("--dt", run.dt)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Usage(format!("{name} must be finite and positive")));
            }
        }
        Ok(Resolved {
            loaded,
            run,
            out: c.out.clone(),
        })
    }

    fn model(&self, command: &str) -> Result<&ModelConfig, CliError> {
        self.loaded
            .as_ref()
            .map(|l| &l.model)
            .ok_or_else(|| CliError::Usage(format!("`{command}` needs --config")))
    }

    fn provenance(&self, command: &str) -> Provenance {
        Provenance {
            seed: self.run.seed,
            digest: self.loaded.as_ref().map_or_else(|| "none".into(), |l| l.digest.clone()),
            command: command.into(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to `out`, or to stdout when `out` is `None`.
fn emit(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(io_err(p)),
        None => stdout.write_all(bytes).map_err(io_err(Path::new("<stdout>"))),
    }
}

fn say(stdout: &mut dyn Write, line: String) -> Result<(), CliError> {
    writeln!(stdout, "{line}").map_err(io_err(Path::new("<stdout>")))
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> CliResult {
    match command {
        Command::Simulate(c) => {
            let r = Resolved::new(&c)?;
            let path = simulate(r.model("simulate")?, r.run.n, r.run.horizon, &mut RngStream::new(r.run.seed, 0))?;
            let mut buf = Vec::new();
            output::write_events(&mut buf, &r.provenance("simulate"), &path).map_err(io_err(Path::new("<buffer>")))?;
            emit(r.out.as_deref(), &buf, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Analyze(c) => {
            let r = Resolved::new(&c)?;
            let path = simulate(r.model("analyze")?, r.run.n, r.run.horizon, &mut RngStream::new(r.run.seed, 0))?;
            let sp = scale(&path, r.run.dt)?;
            let mut buf = Vec::new();
            output::write_scaled(&mut buf, &r.provenance("analyze"), &sp).map_err(io_err(Path::new("<buffer>")))?;
            emit(r.out.as_deref(), &buf, stdout)?;
            if r.out.is_some() {
                let s = thm41_statistic(&sp);
                say(
                    stdout,
                    format!(
                        "queue/wait gap {} on [0, {}]{}",
                        fmt_num(s.value),
                        fmt_num(s.prefix),
                        if s.unreliable { " (short prefix)" } else { "" }
                    ),
                )?;
            }
            Ok(EXIT_OK)
        }
        Command::Picard { common, input, level } => {
            let mut common = common;
            if common.horizon.is_none() && input.is_none() {
                common.horizon = Some(5.0);
            }
            let r = Resolved::new(&common)?;
            let x = match &input {
                Some(p) => read_driver(p)?,
                None => GridFunction::constant(r.run.dt, r.run.horizon, level)?,
            };
            let (h1, h2) = match &r.loaded {
                Some(l) => {
                    let d = DiffusionParams::from_config(&l.model);
                    (d.h_plus, d.h_minus)
                }
                None => (LimitH::identity(), LimitH::identity()),
            };
            let sol: Solution = solve(&x, &h1, &h2, 1e-9)?;
            let mut buf = Vec::new();
            output::write_waits(&mut buf, &r.provenance("picard"), &sol.w_plus, &sol.w_minus)
                .map_err(io_err(Path::new("<buffer>")))?;
            emit(r.out.as_deref(), &buf, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Sde { common, mode } => {
            let r = Resolved::new(&common)?;
            let config = r.model("sde")?;
            let q = config.q0().count(r.run.n) as f64 / (r.run.n as f64).sqrt();
            let p = SdeParams {
                diffusion: DiffusionParams::from_config(config),
                q: InitialValue::Constant(q),
            };
            let prov = r.provenance(match mode {
                SdeMode::Path => "sde-path",
                SdeMode::Driver => "sde-driver",
                SdeMode::Terminal => "sde-terminal",
                SdeMode::Psi => "sde-psi",
            });
            let mut rng = RngStream::new(r.run.seed, 0);
            let mut buf = Vec::new();
            let wrote = match mode {
                SdeMode::Path => output::write_series(&mut buf, &prov, "Q", &euler_path(&p, r.run.horizon, r.run.dt, &mut rng)?),
                SdeMode::Driver => output::write_series(&mut buf, &prov, "X", &driver_path(&p, r.run.horizon, r.run.dt, &mut rng)?),
                SdeMode::Terminal => {
                    let values = (0..r.run.reps)
                        .map(|k| euler_terminal(&p, r.run.horizon, r.run.dt, &mut rng.substream(k as u64)))
                        .collect::<Result<Vec<_>, _>>()?;
                    output::write_terminal(&mut buf, &prov, &values)
                }
                SdeMode::Psi => {
                    let gaps = experiments::run_psi_coupling(&p, r.run.horizon, r.run.dt, r.run.reps, r.run.seed)?;
                    CsvWriter::new(&mut buf, &prov, &["seed", "gap"]).and_then(|mut w| {
                        for (k, g) in gaps.iter().enumerate() {
                            w.row(&[k.to_string(), fmt_num(*g)])?;
                        }
                        w.finish().map(drop)
                    })
                }
            };
            wrote.map_err(io_err(Path::new("<buffer>")))?;
            emit(r.out.as_deref(), &buf, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Stationary(c) => {
            let r = Resolved::new(&c)?;
            let density = normalize(&DiffusionParams::from_config(r.model("stationary")?))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            say(stdout, format!("C0 = {}", fmt_num(density.c0())))?;
            if let Some(out) = &r.out {
                let mut buf = Vec::new();
                output::write_density(&mut buf, &r.provenance("stationary"), &density)
                    .map_err(io_err(Path::new("<buffer>")))?;
                emit(Some(out), &buf, stdout)?;
            }
            Ok(EXIT_OK)
        }
        Command::Diagnose { common, intervals } => {
            let r = Resolved::new(&common)?;
            let config = r.model("diagnose")?;
            let prov = r.provenance("diagnose");
            let mut buf = Vec::new();
            let pass = match intervals {
                None => {
                    let patience = [config.patience(Class::Plus).clone(), config.patience(Class::Minus).clone()];
                    let report =
                        experiments::run_martingale(config, &patience, r.run.n, r.run.horizon, r.run.reps, r.run.seed)?;
                    output::write_martingale(&mut buf, &prov, &report).map_err(io_err(Path::new("<buffer>")))?;
                    report.pass()
                }
                Some(k) => {
                    if k == 0 {
                        return Err(CliError::Usage("--intervals must be at least 1".into()));
                    }
                    let report = martingale_increment_test(
                        config,
                        r.run.n,
                        r.run.horizon,
                        r.run.reps,
                        k,
                        &RngStream::new(r.run.seed, 0),
                    )?;
                    let mut w = CsvWriter::new(&mut buf, &prov, &["class", "interval", "mean", "se", "critical"])
                        .map_err(io_err(Path::new("<buffer>")))?;
                    for class in Class::BOTH {
                        for (j, (m, se)) in report.increments[class.index()].iter().enumerate() {
                            w.row(&[
                                output::class_label(class).into(),
                                j.to_string(),
                                fmt_num(*m),
                                fmt_num(*se),
                                fmt_num(report.critical),
                            ])
                            .map_err(io_err(Path::new("<buffer>")))?;
                        }
                    }
                    report.pass
                }
            };
            emit(r.out.as_deref(), &buf, stdout)?;
            Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Convergence(c) => convergence(&Resolved::new(&c)?, stdout),
    }
}

fn convergence(r: &Resolved, stdout: &mut dyn Write) -> CliResult {
    let plan = ExperimentPlan {
        config: r.model("convergence")?.clone(),
        n_list: r.run.n_list.clone(),
        horizon: r.run.horizon,
        long_horizon: r.run.long_horizon,
        reps: r.run.reps,
        dt: r.run.dt,
        seed: r.run.seed,
        stationary_samples: r.run.stationary_samples,
        stationary_des: true,
    };
    plan.validate()?;
    let dir = r.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let buffer = || io_err(Path::new("<buffer>"));

    let t41 = experiments::run_thm41(&plan)?;
    let mut buf = Vec::new();
    let mut w = CsvWriter::new(&mut buf, &r.provenance("convergence"), &["n", "used", "excluded", "unreliable", "median", "q1", "q3", "iqr"])
        .map_err(buffer())?;
    for row in &t41.rows {
        w.row(&[
            row.n.to_string(),
            row.used.to_string(),
            row.excluded.to_string(),
            row.unreliable.to_string(),
            fmt_num(row.median),
            fmt_num(row.q1),
            fmt_num(row.q3),
            fmt_num(row.iqr()),
        ])
        .map_err(buffer())?;
    }
    w.finish().map_err(buffer())?;
    emit(Some(&dir.join("thm41.csv")), &buf, stdout)?;
    say(stdout, format!("thm41 {}: medians {}", verdict(t41.pass), join(t41.rows.iter().map(|r| r.median))))?;

    let t42 = experiments::run_thm42(&plan)?;
    let mut buf = Vec::new();
    let mut w = CsvWriter::new(&mut buf, &r.provenance("convergence"), &["n", "des_samples", "sde_samples", "censored", "ks", "threshold"])
        .map_err(buffer())?;
    for row in &t42.rows {
        w.row(&[
            row.n.to_string(),
            row.des_samples.to_string(),
            row.sde_samples.to_string(),
            row.censored.to_string(),
            fmt_num(row.ks),
            fmt_num(row.threshold),
        ])
        .map_err(buffer())?;
    }
    w.finish().map_err(buffer())?;
    emit(Some(&dir.join("thm42.csv")), &buf, stdout)?;
    say(stdout, format!("thm42 {}: ks {}", verdict(t42.pass), join(t42.rows.iter().map(|r| r.ks))))?;

    let (t43_pass, t43_line) = match experiments::run_thm43(&plan) {
        Ok(t43) => {
            let mut buf = Vec::new();
            let mut w = CsvWriter::new(
                &mut buf,
                &r.provenance("convergence"),
                &THM43_HEADER,
            )
            .map_err(buffer())?;
            w.row(&[
                "sde".into(),
                "".into(),
                t43.sde_samples.to_string(),
                fmt_num(t43.ks_sde),
                fmt_num(t43.sde_threshold),
                fmt_num(t43.c0),
                fmt_num(t43.burn_in),
                fmt_num(t43.thinning),
            ])
            .map_err(buffer())?;
            if let Some((n, ks, samples, threshold)) = t43.des {
                w.row(&[
                    "des".into(),
                    n.to_string(),
                    samples.to_string(),
                    fmt_num(ks),
                    fmt_num(threshold),
                    fmt_num(t43.c0),
                    "".into(),
                    "".into(),
                ])
                .map_err(buffer())?;
            }
            w.finish().map_err(buffer())?;
            emit(Some(&dir.join("thm43.csv")), &buf, stdout)?;
            let des = t43.des.map_or(String::new(), |d| format!(", des ks {}", fmt_num(d.1)));
            (t43.pass, format!("thm43 {}: C0 {}, sde ks {}{des}", verdict(t43.pass), fmt_num(t43.c0), fmt_num(t43.ks_sde)))
        }
        // no stationary law to compare against: header-only table, not a failure
        Err(ExperimentError::Stationary(msg)) => {
            let mut buf = Vec::new();
            CsvWriter::new(&mut buf, &r.provenance("convergence"), &THM43_HEADER).map_err(buffer())?;
            emit(Some(&dir.join("thm43.csv")), &buf, stdout)?;
            (true, format!("thm43 SKIPPED: {msg}"))
        }
        Err(e) => return Err(e.into()),
    };
    say(stdout, t43_line)?;

    Ok(if t41.pass && t42.pass && t43_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

const THM43_HEADER: [&str; 8] = ["source", "n", "samples", "ks", "threshold", "c0", "burn_in", "thinning"];

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(fmt_num).collect::<Vec<_>>().join(" ")
}

/// Reads a `t,x` CSV on a uniform grid starting at 0.
fn read_driver(path: &Path) -> Result<GridFunction, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |line: usize, why: &str| CliError::Usage(format!("{}:{line}: {why}", path.display()));
    let mut ts = Vec::new();
    let mut xs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("t,") {
            continue;
        }
        let mut cols = line.split(',').map(|s| s.trim().parse::<f64>());
        match (cols.next(), cols.next(), cols.next()) {
            (Some(Ok(t)), Some(Ok(x)), None) => {
                ts.push(t);
                xs.push(x);
            }
            _ => return Err(bad(i + 1, "expected two numeric columns `t,x`")),
        }
    }
    if ts.len() < 2 {
        return Err(CliError::Usage(format!("{}: need at least two grid points", path.display())));
    }
    let step = ts[1] - ts[0];
    let uniform = ts[0] == 0.0
        && step > 0.0
        && ts.iter().enumerate().all(|(j, &t)| (t - j as f64 * step).abs() <= 1e-9 * t.abs().max(1.0));
    if !uniform {
        return Err(CliError::Usage(format!("{}: times must form a uniform grid from 0", path.display())));
    }
    Ok(GridFunction::new(step, xs)?)
}
