//! Partitioning of a timestamp-ordered transaction sequence into
//! calendar windows.

use std::ops::Range;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::tx::{Granularity, Transaction, WindowId};

const SECONDS_PER_DAY: i64 = 86_400;

/// One time window and the contiguous slice of transactions it holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub id: WindowId,
    pub range: Range<usize>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    /// First second of the window (inclusive), UTC.
    pub fn start_timestamp(&self) -> i64 {
        date_to_timestamp(self.id.0)
    }

    /// First second after the window, UTC.
    pub fn end_timestamp(&self, granularity: Granularity) -> i64 {
        self.start_timestamp() + granularity.days() * SECONDS_PER_DAY
    }
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).unwrap()
}

fn day_number(timestamp: i64) -> i64 {
    timestamp.div_euclid(SECONDS_PER_DAY)
}

fn date_from_day_number(day: i64) -> NaiveDate {
    epoch() + chrono::Duration::days(day)
}

pub fn date_to_timestamp(date: NaiveDate) -> i64 {
    (date - epoch()).num_days() * SECONDS_PER_DAY
}

/// UTC calendar day containing `timestamp`.
pub fn day_of(timestamp: i64) -> NaiveDate {
    date_from_day_number(day_number(timestamp))
}

/// Start of the window containing `timestamp`.
pub fn window_of(timestamp: i64, granularity: Granularity) -> WindowId {
    let day = day_number(timestamp);
    let start = match granularity {
        Granularity::Daily => day,
        // 1970-01-01 was a Thursday, so (day + 4) mod 7 counts days since Sunday.
        Granularity::Weekly => day - (day + 4).rem_euclid(7),
    };
    WindowId(date_from_day_number(start))
}

/// Window containing the calendar day `date`.
pub fn window_of_date(date: NaiveDate, granularity: Granularity) -> WindowId {
    window_of(date_to_timestamp(date), granularity)
}

pub fn next_window(id: WindowId, granularity: Granularity) -> WindowId {
    WindowId(id.0 + Days::new(granularity.days() as u64))
}

/// Splits timestamp-ordered transactions into consecutive windows.
///
/// Every transaction lands in exactly one window. Windows with no
/// transactions between the first and last one are still emitted, with
/// empty ranges.
pub fn window_partition(txs: &[Transaction], granularity: Granularity) -> Vec<Window> {
    let (Some(first), Some(last)) = (txs.first(), txs.last()) else {
        return Vec::new();
    };
    debug_assert!(txs.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    let first_id = window_of(first.timestamp, granularity);
    let last_id = window_of(last.timestamp, granularity);

    let mut windows = Vec::new();
    let mut id = first_id;
    let mut cursor = 0usize;
    loop {
        let end_ts = date_to_timestamp(id.0) + granularity.days() * SECONDS_PER_DAY;
        let start = cursor;
        while cursor < txs.len() && txs[cursor].timestamp < end_ts {
            cursor += 1;
        }
        windows.push(Window {
            id,
            range: start..cursor,
        });
        if id >= last_id {
            break;
        }
        id = next_window(id, granularity);
    }
    debug_assert_eq!(cursor, txs.len());
    windows
}

/// Window grid covering `[first, last]` with no transaction ranges.
pub fn window_grid(first: WindowId, last: WindowId, granularity: Granularity) -> Vec<WindowId> {
    let mut out = Vec::new();
    let mut id = first;
    while id <= last {
        out.push(id);
        id = next_window(id, granularity);
    }
    out
}
