//! Price and network indicator series.
//!
//! Series keep their full length; positions without enough history hold
//! `None` rather than a placeholder number.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tx::{Granularity, PriceSeries, WindowId};
use crate::window::{next_window, window_of_date};

#[derive(Debug, Error, PartialEq)]
pub enum IndicatorError {
    #[error("series of length {len} is too short: need more than {needed}")]
    InsufficientHistory { len: usize, needed: usize },
    #[error("non-positive price {0}")]
    NonPositivePrice(f64),
    #[error("lookback must be at least 2, got {0}")]
    LookbackTooShort(usize),
}

/// Values aligned to a window grid, `None` where undefined.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub windows: Vec<WindowId>,
    pub values: Vec<Option<f64>>,
}

impl IndicatorSeries {
    pub fn new(windows: Vec<WindowId>, values: Vec<Option<f64>>) -> Self {
        assert_eq!(windows.len(), values.len());
        IndicatorSeries { windows, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of leading undefined entries.
    pub fn undefined_prefix(&self) -> usize {
        self.values.iter().take_while(|v| v.is_none()).count()
    }

    pub fn get(&self, id: WindowId) -> Option<f64> {
        self.windows
            .binary_search(&id)
            .ok()
            .and_then(|i| self.values[i])
    }

    /// Values re-indexed onto `grid`; windows missing from `self` are `None`.
    pub fn align_to(&self, grid: &[WindowId]) -> IndicatorSeries {
        let map: BTreeMap<WindowId, Option<f64>> =
            self.windows.iter().copied().zip(self.values.iter().copied()).collect();
        IndicatorSeries {
            windows: grid.to_vec(),
            values: grid.iter().map(|w| map.get(w).copied().flatten()).collect(),
        }
    }
}

/// How the RPMA moving average is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RpmaWindow {
    /// Sum over `P_{t-1-τ} .. P_{t-1}` (τ + 1 terms) divided by τ.
    #[default]
    Verbatim,
    /// Ordinary τ-term average of `P_{t-τ} .. P_{t-1}`.
    TauTerms,
}

impl std::str::FromStr for RpmaWindow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "verbatim" => Ok(RpmaWindow::Verbatim),
            "tau_terms" => Ok(RpmaWindow::TauTerms),
            other => Err(format!("unknown rpma_window '{other}' (expected verbatim or tau_terms)")),
        }
    }
}

impl RpmaWindow {
    pub fn as_str(self) -> &'static str {
        match self {
            RpmaWindow::Verbatim => "verbatim",
            RpmaWindow::TauTerms => "tau_terms",
        }
    }
}

/// Moving-average length: 4 weeks or 7 days.
pub fn rpma_tau(granularity: Granularity) -> usize {
    match granularity {
        Granularity::Daily => 7,
        Granularity::Weekly => 4,
    }
}

/// Closing price per window: the daily close, or for weeks the close of the
/// last available day of the week.
pub fn window_closes(ps: &PriceSeries, granularity: Granularity) -> IndicatorSeries {
    let mut windows: Vec<WindowId> = Vec::new();
    let mut values: Vec<Option<f64>> = Vec::new();
    for p in ps.points() {
        let id = window_of_date(p.date, granularity);
        if windows.last() == Some(&id) {
            *values.last_mut().unwrap() = Some(p.close);
        } else {
            windows.push(id);
            values.push(Some(p.close));
        }
    }
    IndicatorSeries { windows, values }
}

/// RPMA over an already window-aligned close series.
pub fn rpma_from_closes(
    closes: &IndicatorSeries,
    tau: usize,
    variant: RpmaWindow,
) -> Result<IndicatorSeries, IndicatorError> {
    let n = closes.len();
    if n <= tau + 1 {
        return Err(IndicatorError::InsufficientHistory { len: n, needed: tau + 1 });
    }
    if let Some(p) = closes.values.iter().flatten().find(|p| !(**p > 0.0)) {
        return Err(IndicatorError::NonPositivePrice(*p));
    }
    let (first, span) = match variant {
        RpmaWindow::Verbatim => (tau + 1, tau + 1),
        RpmaWindow::TauTerms => (tau, tau),
    };
    let values = (0..n)
        .map(|t| {
            if t < first {
                return None;
            }
            let current = closes.values[t]?;
            let mut sum = 0.0;
            for s in (t - span)..t {
                sum += closes.values[s]?;
            }
            let average = sum / tau as f64;
            Some(100.0 * (current / average).log10())
        })
        .collect();
    Ok(IndicatorSeries {
        windows: closes.windows.clone(),
        values,
    })
}

/// Ratio between the current price and its trailing moving average, as
/// `100 log10(P_t / MA_t)`, on the granularity's window grid.
pub fn rpma(
    ps: &PriceSeries,
    granularity: Granularity,
    variant: RpmaWindow,
) -> Result<IndicatorSeries, IndicatorError> {
    rpma_from_closes(&window_closes(ps, granularity), rpma_tau(granularity), variant)
}

pub fn log_returns_from_closes(closes: &IndicatorSeries) -> Result<IndicatorSeries, IndicatorError> {
    if let Some(p) = closes.values.iter().flatten().find(|p| !(**p > 0.0)) {
        return Err(IndicatorError::NonPositivePrice(*p));
    }
    let values = (0..closes.len())
        .map(|t| {
            if t == 0 {
                return None;
            }
            Some((closes.values[t]? / closes.values[t - 1]?).log10())
        })
        .collect();
    Ok(IndicatorSeries {
        windows: closes.windows.clone(),
        values,
    })
}

/// `R_t = log10(P_t / P_{t-1})` on the granularity's window grid.
pub fn log_returns(ps: &PriceSeries, granularity: Granularity) -> Result<IndicatorSeries, IndicatorError> {
    log_returns_from_closes(&window_closes(ps, granularity))
}

/// One-year trailing lookback: 52 weeks or 365 days.
pub fn default_lookback(granularity: Granularity) -> usize {
    match granularity {
        Granularity::Daily => 365,
        Granularity::Weekly => 52,
    }
}

/// `z_t = (x_t - m_t) / s_t` with the mean and population standard
/// deviation of the `lookback` values strictly before `t`.
///
/// Undefined when `x_t` or any of those prior values is undefined, or when
/// `s_t = 0`.
pub fn rolling_zscore(xs: &IndicatorSeries, lookback: usize) -> Result<IndicatorSeries, IndicatorError> {
    if lookback < 2 {
        return Err(IndicatorError::LookbackTooShort(lookback));
    }
    let values = (0..xs.len())
        .map(|t| {
            if t < lookback {
                return None;
            }
            let x = xs.values[t]?;
            let hist: Option<Vec<f64>> = xs.values[t - lookback..t].iter().copied().collect();
            let hist = hist?;
            let m = hist.iter().sum::<f64>() / lookback as f64;
            let var = hist.iter().map(|h| (h - m) * (h - m)).sum::<f64>() / lookback as f64;
            let s = var.sqrt();
            if !(s > 0.0) || s <= 1e-12 * m.abs() {
                return None;
            }
            Some((x - m) / s)
        })
        .collect();
    Ok(IndicatorSeries {
        windows: xs.windows.clone(),
        values,
    })
}

/// Consecutive window ids from `first` covering `n` windows.
pub fn consecutive_windows(first: WindowId, n: usize, granularity: Granularity) -> Vec<WindowId> {
    let mut out = Vec::with_capacity(n);
    let mut id = first;
    for _ in 0..n {
        out.push(id);
        id = next_window(id, granularity);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tx::PricePoint;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn series(closes: &[f64]) -> PriceSeries {
        let start = NaiveDate::from_ymd_opt(2013, 1, 1).unwrap();
        PriceSeries::new(
            closes
                .iter()
                .enumerate()
                .map(|(i, &c)| PricePoint {
                    date: start + chrono::Duration::days(i as i64),
                    close: c,
                })
                .collect(),
        )
        .unwrap()
    }

    fn plain(values: &[f64]) -> IndicatorSeries {
        let first = WindowId(NaiveDate::from_ymd_opt(2013, 1, 1).unwrap());
        IndicatorSeries::new(
            consecutive_windows(first, values.len(), Granularity::Daily),
            values.iter().map(|&v| Some(v)).collect(),
        )
    }

    #[test]
    fn constant_price_verbatim_rpma() {
        let closes = plain(&[50.0; 12]);
        let r = rpma_from_closes(&closes, 4, RpmaWindow::Verbatim).unwrap();
        assert_eq!(r.undefined_prefix(), 5);
        let expect = 100.0 * (4.0f64 / 5.0).log10();
        for v in r.values.iter().skip(5) {
            assert!((v.unwrap() - expect).abs() < 1e-12);
        }
        assert!((expect + 9.691).abs() < 1e-3);
    }

    #[test]
    fn constant_price_tau_terms_rpma_is_zero() {
        let r = rpma_from_closes(&plain(&[50.0; 12]), 4, RpmaWindow::TauTerms).unwrap();
        assert_eq!(r.undefined_prefix(), 4);
        assert!(r.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn rpma_needs_history() {
        assert_eq!(
            rpma_from_closes(&plain(&[1.0; 5]), 4, RpmaWindow::Verbatim),
            Err(IndicatorError::InsufficientHistory { len: 5, needed: 5 })
        );
        assert!(rpma(&series(&[1.0; 8]), Granularity::Daily, RpmaWindow::Verbatim).is_err());
        assert!(rpma(&series(&[1.0; 9]), Granularity::Daily, RpmaWindow::Verbatim).is_ok());
    }

    #[test]
    fn rpma_verbatim_hand_example() {
        // t = 5, tau = 4: average = (1+2+3+4+5)/4 = 3.75, P_5 = 6.
        let r = rpma_from_closes(&plain(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), 4, RpmaWindow::Verbatim).unwrap();
        assert!((r.values[5].unwrap() - 100.0 * (6.0f64 / 3.75).log10()).abs() < 1e-12);
    }

    #[test]
    fn log_return_examples() {
        let r = log_returns(&series(&[10.0, 20.0, 20.0]), Granularity::Daily).unwrap();
        assert_eq!(r.values[0], None);
        assert!((r.values[1].unwrap() - std::f64::consts::LOG10_2).abs() < 1e-12);
        assert_eq!(r.values[2], Some(0.0));
        let single = log_returns(&series(&[10.0]), Granularity::Daily).unwrap();
        assert_eq!(single.values, vec![None]);
    }

    #[test]
    fn weekly_closes_take_last_day_of_week() {
        // 2013-01-01 is a Tuesday; the first week runs to Saturday 01-05.
        let closes: Vec<f64> = (1..=12).map(|i| i as f64).collect();
        let w = window_closes(&series(&closes), Granularity::Weekly);
        assert_eq!(w.windows[0].to_string(), "2012-12-30");
        assert_eq!(w.values, vec![Some(5.0), Some(12.0)]);
    }

    #[test]
    fn zscore_examples() {
        let z = rolling_zscore(&plain(&[1.0, 2.0, 3.0, 4.0]), 3).unwrap();
        assert_eq!(&z.values[..3], &[None, None, None]);
        assert!((z.values[3].unwrap() - 2.0 / (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((z.values[3].unwrap() - 2.449).abs() < 1e-3);

        let z = rolling_zscore(&plain(&[1.0, 3.0, 2.0]), 2).unwrap();
        assert_eq!(z.values[2], Some(0.0));

        let z = rolling_zscore(&plain(&[5.0, 5.0, 5.0, 9.0]), 3).unwrap();
        assert_eq!(z.values[3], None);
        assert_eq!(rolling_zscore(&plain(&[1.0]), 1), Err(IndicatorError::LookbackTooShort(1)));
    }

    #[test]
    fn zscore_undefined_history_propagates() {
        let mut s = plain(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        s.values[1] = None;
        let z = rolling_zscore(&s, 2).unwrap();
        assert_eq!(z.values[2], None);
        assert_eq!(z.values[3], None);
        assert!(z.values[4].is_some());
    }

    proptest! {
        #[test]
        fn price_rescaling_invariance(steps in prop::collection::vec(-0.05f64..0.05, 10..60), c in 0.001f64..1000.0) {
            let mut level = 2.0f64;
            let closes: Vec<f64> = steps.iter().map(|s| { level += s; 10f64.powf(level) }).collect();
            let ps = series(&closes);
            let scaled = ps.rescaled(c);
            for g in Granularity::ALL {
                if let (Ok(a), Ok(b)) = (rpma(&ps, g, RpmaWindow::Verbatim), rpma(&scaled, g, RpmaWindow::Verbatim)) {
                    for (x, y) in a.values.iter().zip(&b.values) {
                        prop_assert_eq!(x.is_some(), y.is_some());
                        if let (Some(x), Some(y)) = (x, y) { prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0)); }
                    }
                }
                let a = log_returns(&ps, g).unwrap();
                let b = log_returns(&scaled, g).unwrap();
                prop_assert_eq!(a.len(), b.len());
                for (x, y) in a.values.iter().zip(&b.values) {
                    if let (Some(x), Some(y)) = (x, y) { prop_assert!((x - y).abs() <= 1e-12); }
                }
            }
        }

        #[test]
        fn zscore_affine_invariance(xs in prop::collection::vec(-100.0f64..100.0, 5..80), a in 0.01f64..100.0, b in -1000.0f64..1000.0, lookback in 2usize..6) {
            let s = plain(&xs);
            let t = plain(&xs.iter().map(|x| a * x + b).collect::<Vec<_>>());
            let zs = rolling_zscore(&s, lookback).unwrap();
            let zt = rolling_zscore(&t, lookback).unwrap();
            prop_assert_eq!(zs.len(), xs.len());
            for (x, y) in zs.values.iter().zip(&zt.values) {
                if let (Some(x), Some(y)) = (x, y) { prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0)); }
            }
        }
    }
}
