//! CSV writers. Every file opens with one `#` comment line carrying the
//! program version, seed, config digest and command, then a header row.

use std::io::{self, Write};

use dedq_core::des::{EventKind, PathRecord};
use dedq_core::diagnostics::MartingaleReport;
use dedq_core::model::Class;
use dedq_core::path_analysis::ScaledPath;
use dedq_core::stationary::StationaryDensity;
use dedq_core::GridFunction;

/// Metadata recorded in the comment line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub digest: String,
    pub command: String,
}

impl Provenance {
    pub fn header(&self) -> String {
        format!(
            "# dedq {} seed={} config_sha256={} command={}",
            env!("CARGO_PKG_VERSION"),
            self.seed,
            self.digest,
            self.command
        )
    }
}

/// Formats like C's `%.12g`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (11 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn class_label(class: Class) -> &'static str {
    match class {
        Class::Plus => "1",
        Class::Minus => "-1",
    }
}

/// Row-oriented writer; columns are fixed by the header.
pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, prov: &Provenance, header: &[&str]) -> io::Result<Self> {
        writeln!(out, "{}", prov.header())?;
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter {
            out,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        debug_assert_eq!(fields.len(), self.columns);
        writeln!(self.out, "{}", fields.join(","))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_events<W: Write>(out: W, prov: &Provenance, path: &PathRecord) -> io::Result<()> {
    let mut w = CsvWriter::new(out, prov, &["t", "kind", "class", "k", "N1", "Nm1", "G1", "Gm1", "Q"])?;
    for e in &path.events {
        let kind = match e.kind {
            EventKind::Arrival => "arrival",
            EventKind::Match => "match",
            EventKind::Renege => "renege",
        };
        let c = &e.counters;
        w.row(&[
            fmt_num(e.time),
            kind.into(),
            class_label(e.class).into(),
            e.k.to_string(),
            c.arrivals[0].to_string(),
            c.arrivals[1].to_string(),
            c.reneges[0].to_string(),
            c.reneges[1].to_string(),
            c.q.to_string(),
        ])?;
    }
    w.finish().map(drop)
}

pub fn write_scaled<W: Write>(out: W, prov: &Provenance, sp: &ScaledPath) -> io::Result<()> {
    let mut w = CsvWriter::new(
        out,
        prov,
        &[
            "t", "Qhat", "Qhat_plus", "Qhat_minus", "N1hat", "Nm1hat", "G1hat", "Gm1hat", "R1hat", "Rm1hat",
            "W1hat", "Wm1hat",
        ],
    )?;
    for j in 0..sp.len() {
        let cols = [
            sp.time(j),
            sp.q_hat[j],
            sp.q_hat_plus[j],
            sp.q_hat_minus[j],
            sp.n_hat[0][j],
            sp.n_hat[1][j],
            sp.g_hat[0][j],
            sp.g_hat[1][j],
            sp.r_hat[0][j],
            sp.r_hat[1][j],
            sp.w_hat[0][j],
            sp.w_hat[1][j],
        ];
        w.row(&cols.map(fmt_num))?;
    }
    w.finish().map(drop)
}

/// `t,<name>` for a grid function.
pub fn write_series<W: Write>(out: W, prov: &Provenance, name: &str, g: &GridFunction) -> io::Result<()> {
    let mut w = CsvWriter::new(out, prov, &["t", name])?;
    for (j, &v) in g.values().iter().enumerate() {
        w.row(&[fmt_num(g.time(j)), fmt_num(v)])?;
    }
    w.finish().map(drop)
}

/// `t,w1,wm1` for a Picard solution.
pub fn write_waits<W: Write>(out: W, prov: &Provenance, w1: &GridFunction, wm1: &GridFunction) -> io::Result<()> {
    let mut w = CsvWriter::new(out, prov, &["t", "w1", "wm1"])?;
    for j in 0..w1.len() {
        w.row(&[fmt_num(w1.time(j)), fmt_num(w1.values()[j]), fmt_num(wm1.values()[j])])?;
    }
    w.finish().map(drop)
}

/// `seed,QT`: one terminal value per replication index.
pub fn write_terminal<W: Write>(out: W, prov: &Provenance, values: &[f64]) -> io::Result<()> {
    let mut w = CsvWriter::new(out, prov, &["seed", "QT"])?;
    for (r, &v) in values.iter().enumerate() {
        w.row(&[r.to_string(), fmt_num(v)])?;
    }
    w.finish().map(drop)
}

pub fn write_density<W: Write>(out: W, prov: &Provenance, density: &StationaryDensity) -> io::Result<()> {
    let mut w = CsvWriter::new(out, prov, &["x", "pdf", "cdf"])?;
    for (x, p) in density.table() {
        w.row(&[fmt_num(x), fmt_num(p), fmt_num(density.cdf(x))])?;
    }
    w.finish().map(drop)
}

pub fn write_martingale<W: Write>(out: W, prov: &Provenance, report: &MartingaleReport) -> io::Result<()> {
    let mut w = CsvWriter::new(out, prov, &["class", "mean", "se", "pass"])?;
    for c in &report.classes {
        w.row(&[
            class_label(c.class).into(),
            fmt_num(c.mean),
            fmt_num(c.se),
            c.pass.to_string(),
        ])?;
    }
    w.finish().map(drop)
}
