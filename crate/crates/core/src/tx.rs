//! Ledger records and price observations.

use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// One `(address, value)` leg of a transaction. Values are integer satoshi.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TxIo {
    pub address: String,
    pub value: u64,
}

impl TxIo {
    pub fn new(address: impl Into<String>, value: u64) -> Self {
        TxIo {
            address: address.into(),
            value,
        }
    }
}

/// A single ledger record with ordered inputs and outputs.
///
/// Coinbase transactions are the only ones with an empty input list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub tx_id: String,
    pub block_height: u64,
    /// UTC seconds since the Unix epoch.
    pub timestamp: i64,
    pub inputs: Vec<TxIo>,
    pub outputs: Vec<TxIo>,
}

impl Transaction {
    pub fn is_coinbase(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Smallest input value, `None` for coinbase.
    pub fn min_input_value(&self) -> Option<u64> {
        self.inputs.iter().map(|i| i.value).min()
    }
}

/// Time-window granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Daily,
    Weekly,
}

impl Granularity {
    pub const ALL: [Granularity; 2] = [Granularity::Daily, Granularity::Weekly];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Daily => "daily",
            Granularity::Weekly => "weekly",
        }
    }

    pub fn days(self) -> i64 {
        match self {
            Granularity::Daily => 1,
            Granularity::Weekly => 7,
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "daily" | "day" | "d" => Ok(Granularity::Daily),
            "weekly" | "week" | "w" => Ok(Granularity::Weekly),
            other => Err(format!("unknown granularity '{other}' (expected daily or weekly)")),
        }
    }
}

/// Identifier of a time window: the UTC calendar day it starts on.
///
/// Weekly windows always start on a Sunday.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindowId(pub NaiveDate);

impl WindowId {
    pub fn date(self) -> NaiveDate {
        self.0
    }
}

impl fmt::Display for WindowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%d"))
    }
}

impl std::str::FromStr for WindowId {
    type Err = chrono::ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map(WindowId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub close: f64,
}

/// Daily closing prices over a contiguous range of calendar days.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PriceSeries {
    points: Vec<PricePoint>,
}

impl PriceSeries {
    /// Builds a series, checking that closes are positive and finite and
    /// that dates advance by exactly one day.
    pub fn new(points: Vec<PricePoint>) -> Result<Self, String> {
        for (i, p) in points.iter().enumerate() {
            if !(p.close.is_finite() && p.close > 0.0) {
                return Err(format!("non-positive close {} on {}", p.close, p.date));
            }
            if i > 0 {
                let prev = points[i - 1].date;
                let step = (p.date - prev).num_days();
                if step != 1 {
                    return Err(format!("dates {prev} and {} are not consecutive", p.date));
                }
            }
        }
        Ok(PriceSeries { points })
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.close).collect()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.points.first().map(|p| p.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.points.last().map(|p| p.date)
    }

    /// Multiplies every close by `factor` (must be positive).
    pub fn rescaled(&self, factor: f64) -> PriceSeries {
        assert!(factor > 0.0 && factor.is_finite());
        PriceSeries {
            points: self
                .points
                .iter()
                .map(|p| PricePoint {
                    date: p.date,
                    close: p.close * factor,
                })
                .collect(),
        }
    }
}
