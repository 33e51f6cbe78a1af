//! Key-value run configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Relative paths in
//! a config file are resolved against the file's directory.

use chrono::NaiveDate;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

use super::PipelineError;
use crate::indicators::RpmaWindow;
use crate::netbuild::Representation;
use crate::tx::Granularity;

/// Inclusive date range; a window belongs to it when its first day does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Period {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Period {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    /// File-name tag, `YYYY-MM-DD_YYYY-MM-DD`.
    pub fn tag(&self) -> String {
        format!("{}_{}", self.start.format("%Y-%m-%d"), self.end.format("%Y-%m-%d"))
    }

    pub fn parse(s: &str) -> Result<Self, PipelineError> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| PipelineError::Config(format!("period {s:?} is not start:end")))?;
        let date = |x: &str| {
            NaiveDate::parse_from_str(x.trim(), "%Y-%m-%d")
                .map_err(|_| PipelineError::Config(format!("bad date {x:?} in period {s:?}")))
        };
        let p = Period {
            start: date(a)?,
            end: date(b)?,
        };
        if p.start > p.end {
            return Err(PipelineError::Config(format!("period {s:?} ends before it starts")));
        }
        Ok(p)
    }
}

/// Per-granularity tunable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PerGranularity<T> {
    pub daily: T,
    pub weekly: T,
}

impl<T: Copy> PerGranularity<T> {
    pub fn get(&self, g: Granularity) -> T {
        match g {
            Granularity::Daily => self.daily,
            Granularity::Weekly => self.weekly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub txlog: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    #[serde(skip)]
    pub out: PathBuf,
    pub granularities: Vec<Granularity>,
    pub representations: Vec<Representation>,
    pub periods: Vec<Period>,
    pub tau: PerGranularity<usize>,
    pub hong_m: PerGranularity<usize>,
    pub davis_window: PerGranularity<usize>,
    pub davis_phi: f64,
    pub zscore_lookback: PerGranularity<usize>,
    pub powerlaw_bootstrap: usize,
    pub fdr_q: f64,
    pub density_min_nodes: usize,
    #[serde(serialize_with = "ser_rpma")]
    pub rpma_window: RpmaWindow,
    pub seed: u64,
}

fn ser_rpma<S: serde::Serializer>(v: &RpmaWindow, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(v.as_str())
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            txlog: None,
            prices: None,
            out: PathBuf::from("out"),
            granularities: Granularity::ALL.to_vec(),
            representations: Representation::ALL.to_vec(),
            periods: Vec::new(),
            tau: PerGranularity { daily: 7, weekly: 4 },
            hong_m: PerGranularity { daily: 5, weekly: 3 },
            davis_window: PerGranularity { daily: 30, weekly: 9 },
            davis_phi: 0.1,
            zscore_lookback: PerGranularity { daily: 365, weekly: 52 },
            powerlaw_bootstrap: 1000,
            fdr_q: 0.05,
            density_min_nodes: 500,
            rpma_window: RpmaWindow::Verbatim,
            seed: 42,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, PipelineError> {
    v.parse()
        .map_err(|_| PipelineError::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, PipelineError> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(parse_num(key, item)?);
    }
    Ok(out)
}

impl PipelineConfig {
    /// Applies one `key = value` setting. Paths are taken relative to `base`.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<(), PipelineError> {
        let value = value.trim();
        let path = |v: &str| match base {
            Some(b) if Path::new(v).is_relative() => b.join(v),
            _ => PathBuf::from(v),
        };
        match key.trim() {
            "txlog" => self.txlog = Some(path(value)),
            "prices" => self.prices = Some(path(value)),
            "out" => self.out = path(value),
            "granularities" => self.granularities = parse_list(key, value)?,
            "representations" => self.representations = parse_list(key, value)?,
            "periods" => {
                self.periods = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(Period::parse)
                    .collect::<Result<_, _>>()?
            }
            "tau_daily" => self.tau.daily = parse_num(key, value)?,
            "tau_weekly" => self.tau.weekly = parse_num(key, value)?,
            "hong_m_daily" => self.hong_m.daily = parse_num(key, value)?,
            "hong_m_weekly" => self.hong_m.weekly = parse_num(key, value)?,
            "davis_window_daily" => self.davis_window.daily = parse_num(key, value)?,
            "davis_window_weekly" => self.davis_window.weekly = parse_num(key, value)?,
            "davis_phi" => self.davis_phi = parse_num(key, value)?,
            "zscore_lookback_daily" => self.zscore_lookback.daily = parse_num(key, value)?,
            "zscore_lookback_weekly" => self.zscore_lookback.weekly = parse_num(key, value)?,
            "powerlaw_bootstrap" => self.powerlaw_bootstrap = parse_num(key, value)?,
            "fdr_q" => self.fdr_q = parse_num(key, value)?,
            "density_min_nodes" => self.density_min_nodes = parse_num(key, value)?,
            "rpma_window" => {
                self.rpma_window = value
                    .parse()
                    .map_err(|_| PipelineError::Config(format!("rpma_window: unknown variant {value:?}")))?
            }
            "seed" => self.seed = parse_num(key, value)?,
            other => return Err(PipelineError::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn parse_str(text: &str, base: Option<&Path>) -> Result<Self, PipelineError> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("config line {}: expected key = value", i + 1)))?;
            cfg.set(k, v, base)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_str(&text, path.parent())
    }

    /// Parameter checks that do not touch the file system.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.granularities.is_empty() {
            return bad("no granularity selected");
        }
        if self.representations.is_empty() {
            return bad("no representation selected");
        }
        for w in self.periods.windows(2) {
            if w[1].start <= w[0].end {
                return bad("periods must be ordered and non-overlapping");
            }
        }
        for g in Granularity::ALL {
            if self.tau.get(g) == 0 {
                return bad("tau must be at least 1");
            }
            if self.hong_m.get(g) == 0 {
                return bad("hong_m must be at least 1");
            }
            if self.davis_window.get(g) == 0 {
                return bad("davis_window must be at least 1");
            }
            if self.zscore_lookback.get(g) < 2 {
                return bad("zscore_lookback must be at least 2");
            }
        }
        if !self.davis_phi.is_finite() {
            return bad("davis_phi must be finite");
        }
        if !(self.fdr_q > 0.0 && self.fdr_q <= 1.0) {
            return bad("fdr_q must lie in (0, 1]");
        }
        Ok(())
    }

    /// Inputs must exist before any work starts.
    pub fn require_txlog(&self) -> Result<&Path, PipelineError> {
        require_file("txlog", self.txlog.as_deref())
    }

    pub fn require_prices(&self) -> Result<&Path, PipelineError> {
        require_file("prices", self.prices.as_deref())
    }
}

fn require_file<'a>(what: &str, p: Option<&'a Path>) -> Result<&'a Path, PipelineError> {
    match p {
        None => Err(PipelineError::Config(format!("no {what} file configured"))),
        Some(p) if !p.is_file() => Err(PipelineError::Config(format!("{what} file {} does not exist", p.display()))),
        Some(p) => Ok(p),
    }
}
