//! Granger causality in mean and in tail, with false discovery control.

mod fdr;
mod granger;
mod tail;

pub use fdr::benjamini_hochberg;
pub use granger::{
    bivariate_granger, default_lag, fit_var, multivariate_granger, ols, standardize, ConditionalGranger, GrangerTest,
    OlsFit, VarModel,
};
pub use tail::{
    daniell, davis_conditional_quantile, default_bandwidth, default_quantile_window, hong_statistic, hong_tail_test,
    tail_events, tail_indicator, HongStatistic, TailIndicator, TailSide, DEFAULT_PHI,
};

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CausalityError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("series of length {len} is too short, need at least {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("series lengths differ")]
    LengthMismatch,
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("series has an undefined point after its leading undefined prefix")]
    Undefined,
    #[error("indicator is degenerate (all zeros or all ones)")]
    Degenerate,
    #[error("p-value {0} outside [0, 1]")]
    PValueOutOfRange(f64),
    #[error("malformed causality report line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<io::Error> for CausalityError {
    fn from(e: io::Error) -> Self {
        CausalityError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestKind {
    MeanBivariate,
    MeanConditional,
    TailLeft,
    TailRight,
}

impl TestKind {
    pub const ALL: [TestKind; 4] = [
        TestKind::MeanBivariate,
        TestKind::MeanConditional,
        TestKind::TailLeft,
        TestKind::TailRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::MeanBivariate => "mean-bivariate",
            TestKind::MeanConditional => "mean-conditional",
            TestKind::TailLeft => "tail-left",
            TestKind::TailRight => "tail-right",
        }
    }

    pub fn tail(side: TailSide) -> Self {
        match side {
            TailSide::Left => TestKind::TailLeft,
            TailSide::Right => TestKind::TailRight,
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestKind {
    type Err = CausalityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TestKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| CausalityError::InvalidParameter(format!("unknown test kind {s:?}")))
    }
}

/// One ordered pair under one test. `statistic`, `p_value` and `sign` are
/// `None` when the test could not be run (short or degenerate input); such
/// rows never take part in the FDR step.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalityEntry {
    pub cause: String,
    pub effect: String,
    pub test: TestKind,
    /// Lag order for mean tests, bandwidth for tail tests.
    pub tau_or_m: usize,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub sign: Option<i8>,
    pub fdr_reject: bool,
}

pub const REPORT_HEADER: &str = "cause,effect,test,tau_or_M,statistic,p,sign,fdr_reject";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CausalityReport {
    pub entries: Vec<CausalityEntry>,
}

impl CausalityReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: CausalityEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[CausalityEntry] {
        &self.entries
    }

    /// Runs the step-up procedure separately within each test kind.
    pub fn apply_fdr(&mut self, q: f64) -> Result<(), CausalityError> {
        for kind in TestKind::ALL {
            let idx: Vec<usize> = (0..self.entries.len())
                .filter(|&i| self.entries[i].test == kind && self.entries[i].p_value.is_some())
                .collect();
            let ps: Vec<f64> = idx.iter().map(|&i| self.entries[i].p_value.unwrap()).collect();
            let rejected = benjamini_hochberg(&ps, q)?;
            for &i in &idx {
                self.entries[i].fdr_reject = false;
            }
            for r in rejected {
                self.entries[idx[r]].fdr_reject = true;
            }
        }
        Ok(())
    }

    pub fn find(&self, cause: &str, effect: &str, test: TestKind) -> Option<&CausalityEntry> {
        self.entries
            .iter()
            .find(|e| e.cause == cause && e.effect == effect && e.test == test)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{REPORT_HEADER}")?;
        for e in &self.entries {
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                e.cause,
                e.effect,
                e.test,
                e.tau_or_m,
                opt(e.statistic),
                opt(e.p_value),
                e.sign.map(|s| s.to_string()).unwrap_or_default(),
                e.fdr_reject as u8
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, CausalityError> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim_end() != REPORT_HEADER {
            return Err(CausalityError::Malformed {
                line: 1,
                reason: format!("expected header {REPORT_HEADER:?}"),
            });
        }
        let mut report = CausalityReport::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: &str| CausalityError::Malformed {
                line: lineno,
                reason: reason.to_string(),
            };
            let f: Vec<&str> = line.trim_end().split(',').collect();
            if f.len() != 8 {
                return Err(bad("expected 8 fields"));
            }
            let float = |s: &str| -> Result<Option<f64>, CausalityError> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| bad("bad number"))
                }
            };
            report.push(CausalityEntry {
                cause: f[0].to_string(),
                effect: f[1].to_string(),
                test: f[2].parse().map_err(|_| bad("bad test kind"))?,
                tau_or_m: f[3].parse().map_err(|_| bad("bad lag"))?,
                statistic: float(f[4])?,
                p_value: float(f[5])?,
                sign: if f[6].is_empty() {
                    None
                } else {
                    Some(f[6].parse().map_err(|_| bad("bad sign"))?)
                },
                fdr_reject: match f[7] {
                    "1" => true,
                    "0" => false,
                    _ => return Err(bad("bad fdr flag")),
                },
            });
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(cause: &str, test: TestKind, p: Option<f64>) -> CausalityEntry {
        CausalityEntry {
            cause: cause.into(),
            effect: "R".into(),
            test,
            tau_or_m: 4,
            statistic: p.map(|p| 1.0 - p),
            p_value: p,
            sign: p.map(|_| -1),
            fdr_reject: false,
        }
    }

    #[test]
    fn fdr_runs_per_kind_and_skips_missing() {
        let mut r = CausalityReport::new();
        r.push(entry("a", TestKind::MeanConditional, Some(0.01)));
        r.push(entry("b", TestKind::MeanConditional, Some(0.9)));
        r.push(entry("c", TestKind::TailLeft, Some(0.03)));
        r.push(entry("d", TestKind::TailLeft, None));
        r.apply_fdr(0.05).unwrap();
        let flags: Vec<bool> = r.entries().iter().map(|e| e.fdr_reject).collect();
        assert_eq!(flags, vec![true, false, true, false]);
    }

    #[test]
    fn csv_round_trip() {
        let mut r = CausalityReport::new();
        r.push(entry("sigma_out", TestKind::MeanBivariate, Some(0.123456789)));
        r.push(entry("N", TestKind::TailRight, None));
        r.entries[0].fdr_reject = true;
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(REPORT_HEADER));
        assert!(text.contains("N,R,tail-right,4,,,,0"));
        let back = CausalityReport::read_csv(&buf[..]).unwrap();
        assert_eq!(back, r);
    }
}
