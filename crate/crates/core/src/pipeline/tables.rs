//! CSV tables exchanged between stages.

use std::io::{self, BufRead, Write};

use crate::netbuild::Representation;
use crate::tx::WindowId;

pub const WINDOWS_HEADER: &str = "window_id,start_timestamp,n_transactions";
pub const STATS_HEADER: &str =
    "window_id,repr,N,L,d,mu,sigma_in,sigma_out,gamma_in,gamma_out,kappa_in,kappa_out,pl_p_in,pl_p_out,pl_p_tot";
pub const INDICATORS_HEADER: &str = "window_id,rpma,log_return,z_sigma_kout,close";

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("expected header {expected:?}, found {found:?}")]
    Header { expected: &'static str, found: String },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn rows<R: BufRead>(r: R, header: &'static str, width: usize) -> Result<Vec<(usize, Vec<String>)>, TableError> {
    let mut lines = r.lines();
    let found = lines.next().transpose()?.unwrap_or_default();
    if found.trim_end() != header {
        return Err(TableError::Header {
            expected: header,
            found,
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.trim_end().split(',').map(str::to_string).collect();
        if fields.len() != width {
            return Err(TableError::Malformed {
                line: i + 2,
                reason: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        out.push((i + 2, fields));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T, TableError> {
    s.parse().map_err(|_| TableError::Malformed {
        line,
        reason: format!("bad {what} {s:?}"),
    })
}

fn opt_field(line: usize, s: &str, what: &str) -> Result<Option<f64>, TableError> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(line, s, what).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRow {
    pub window_id: WindowId,
    pub start_timestamp: i64,
    pub n_transactions: usize,
}

pub fn write_windows<W: Write>(mut w: W, rows: &[WindowRow]) -> io::Result<()> {
    writeln!(w, "{WINDOWS_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.window_id, r.start_timestamp, r.n_transactions)?;
    }
    Ok(())
}

pub fn read_windows<R: BufRead>(r: R) -> Result<Vec<WindowRow>, TableError> {
    rows(r, WINDOWS_HEADER, 3)?
        .into_iter()
        .map(|(line, f)| {
            Ok(WindowRow {
                window_id: field(line, &f[0], "window id")?,
                start_timestamp: field(line, &f[1], "timestamp")?,
                n_transactions: field(line, &f[2], "count")?,
            })
        })
        .collect()
}

/// Structural statistics of one windowed graph. Moments are undefined for
/// empty graphs, skewness and kurtosis also for zero variance.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub window_id: WindowId,
    pub repr: Representation,
    pub n_nodes: u64,
    pub n_edges: u64,
    pub density: Option<f64>,
    pub mu: Option<f64>,
    pub sigma_in: Option<f64>,
    pub sigma_out: Option<f64>,
    pub gamma_in: Option<f64>,
    pub gamma_out: Option<f64>,
    pub kappa_in: Option<f64>,
    pub kappa_out: Option<f64>,
    pub pl_p_in: Option<f64>,
    pub pl_p_out: Option<f64>,
    pub pl_p_tot: Option<f64>,
}

pub fn write_stats<W: Write>(mut w: W, rows: &[StatsRow]) -> io::Result<()> {
    writeln!(w, "{STATS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.window_id,
            r.repr,
            r.n_nodes,
            r.n_edges,
            opt(r.density),
            opt(r.mu),
            opt(r.sigma_in),
            opt(r.sigma_out),
            opt(r.gamma_in),
            opt(r.gamma_out),
            opt(r.kappa_in),
            opt(r.kappa_out),
            opt(r.pl_p_in),
            opt(r.pl_p_out),
            opt(r.pl_p_tot)
        )?;
    }
    Ok(())
}

pub fn read_stats<R: BufRead>(r: R) -> Result<Vec<StatsRow>, TableError> {
    rows(r, STATS_HEADER, 15)?
        .into_iter()
        .map(|(line, f)| {
            let o = |i: usize, what: &str| opt_field(line, &f[i], what);
            Ok(StatsRow {
                window_id: field(line, &f[0], "window id")?,
                repr: field(line, &f[1], "representation")?,
                n_nodes: field(line, &f[2], "N")?,
                n_edges: field(line, &f[3], "L")?,
                density: o(4, "d")?,
                mu: o(5, "mu")?,
                sigma_in: o(6, "sigma_in")?,
                sigma_out: o(7, "sigma_out")?,
                gamma_in: o(8, "gamma_in")?,
                gamma_out: o(9, "gamma_out")?,
                kappa_in: o(10, "kappa_in")?,
                kappa_out: o(11, "kappa_out")?,
                pl_p_in: o(12, "pl_p_in")?,
                pl_p_out: o(13, "pl_p_out")?,
                pl_p_tot: o(14, "pl_p_tot")?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorRow {
    pub window_id: WindowId,
    pub rpma: Option<f64>,
    pub log_return: Option<f64>,
    pub z_sigma_kout: Option<f64>,
    pub close: Option<f64>,
}

pub fn write_indicators<W: Write>(mut w: W, rows: &[IndicatorRow]) -> io::Result<()> {
    writeln!(w, "{INDICATORS_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.window_id,
            opt(r.rpma),
            opt(r.log_return),
            opt(r.z_sigma_kout),
            opt(r.close)
        )?;
    }
    Ok(())
}

pub fn read_indicators<R: BufRead>(r: R) -> Result<Vec<IndicatorRow>, TableError> {
    rows(r, INDICATORS_HEADER, 5)?
        .into_iter()
        .map(|(line, f)| {
            Ok(IndicatorRow {
                window_id: field(line, &f[0], "window id")?,
                rpma: opt_field(line, &f[1], "rpma")?,
                log_return: opt_field(line, &f[2], "log_return")?,
                z_sigma_kout: opt_field(line, &f[3], "z_sigma_kout")?,
                close: opt_field(line, &f[4], "close")?,
            })
        })
        .collect()
}
