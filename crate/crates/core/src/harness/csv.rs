//! CSV output for sweeps and single solutions.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::baselines::Scheme;
use crate::error::{Error, Result};
use crate::model::{local_overhead, Scenario};
use crate::solver::Solution;

use super::{Axis, ResultRow};

pub const RESULT_HEADER: [&str; 9] = [
    "scheme",
    "axis",
    "value",
    "realizations",
    "offload_frac_mean",
    "offload_frac_std",
    "overhead_mean",
    "overhead_std",
    "iterations_mean",
];

/// Six significant digits, shortest form that parses back to the rounded value.
pub fn fmt_g(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    let a = rounded.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn write_to<W: Write>(w: W, rows: &[ResultRow]) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        w.write_record([
            r.scheme.name().to_string(),
            r.axis.name().to_string(),
            fmt_g(r.value),
            r.realizations.to_string(),
            fmt_g(r.offload_frac_mean),
            fmt_g(r.offload_frac_std),
            fmt_g(r.overhead_mean),
            fmt_g(r.overhead_std),
            fmt_g(r.iterations_mean),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Serializes rows to CSV text.
pub fn rows_to_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_to(&mut buf, rows).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// Writes rows to `path`, header first.
pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_to(file, rows).map_err(|e| Error::csv(path, e))
}

/// Wall-clock companion file, kept apart so result files stay reproducible.
pub fn emit_timing_csv(rows: &[ResultRow], wall_seconds: &[f64], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut go = || -> std::result::Result<(), csv::Error> {
        w.write_record(["scheme", "axis", "value", "wall_seconds_mean"])?;
        for (r, s) in rows.iter().zip(wall_seconds) {
            w.write_record([r.scheme.name(), r.axis.name(), &fmt_g(r.value), &fmt_g(*s)])?;
        }
        w.flush()?;
        Ok(())
    };
    go().map_err(|e| Error::csv(path, e))
}

/// Parses a results file produced by [`emit_csv`].
pub fn parse_rows(text: &str) -> Result<Vec<ResultRow>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(RESULT_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let num = |s: &str, what: &str| -> Result<f64> {
        s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad {what} `{s}`")))
    };
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != RESULT_HEADER.len() {
            return Err(Error::Parse(format!("row {} has {} fields", i + 1, rec.len())));
        }
        let scheme: Scheme = rec[0].parse()?;
        let axis: Axis = rec[1].parse().map_err(|_| Error::Parse(format!("bad axis `{}`", &rec[1])))?;
        let realizations = rec[3]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad realizations `{}`", &rec[3])))?;
        rows.push(ResultRow {
            scheme,
            axis,
            value: num(&rec[2], "value")?,
            realizations,
            offload_frac_mean: num(&rec[4], "offload_frac_mean")?,
            offload_frac_std: num(&rec[5], "offload_frac_std")?,
            overhead_mean: num(&rec[6], "overhead_mean")?,
            overhead_std: num(&rec[7], "overhead_std")?,
            iterations_mean: num(&rec[8], "iterations_mean")?,
        });
    }
    Ok(rows)
}

/// One line per (scheme, seed) for single-scenario runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub seed: u64,
    pub users: usize,
    pub servers: usize,
    pub subchannels: usize,
    pub offload_frac: f64,
    pub overhead: f64,
    pub iterations: usize,
}

pub fn emit_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut go = || -> std::result::Result<(), csv::Error> {
        w.write_record(["scheme", "seed", "N", "M", "S", "offload_frac", "overhead", "iterations"])?;
        for r in rows {
            w.write_record([
                r.scheme.name().to_string(),
                r.seed.to_string(),
                r.users.to_string(),
                r.servers.to_string(),
                r.subchannels.to_string(),
                fmt_g(r.offload_frac),
                fmt_g(r.overhead),
                r.iterations.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    go().map_err(|e| Error::csv(path, e))
}

/// Per-user detail of a solution.
pub fn emit_solution_csv(scn: &Scenario, sol: &Solution, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut go = || -> std::result::Result<(), csv::Error> {
        w.write_record([
            "user",
            "f_local_hz",
            "server",
            "subchannel",
            "power_w",
            "compute_hz",
            "overhead",
            "local_overhead",
        ])?;
        for n in 0..scn.num_users() {
            let link = sol.assignment.link(n);
            let (server, sub, p, f) = match link {
                Some(l) => (
                    l.server.to_string(),
                    l.subchannel.to_string(),
                    fmt_g(sol.power.get(n, l.subchannel)),
                    fmt_g(sol.compute.get(n, l.server)),
                ),
                None => (String::new(), String::new(), "0".into(), "0".into()),
            };
            w.write_record([
                n.to_string(),
                fmt_g(scn.user(n).f_local),
                server,
                sub,
                p,
                f,
                fmt_g(sol.per_user_overhead[n]),
                fmt_g(local_overhead(scn.user(n)).overhead),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    go().map_err(|e| Error::csv(path, e))
}
