//! TXLOG and price-CSV parsing.
//!
//! TXLOG is one transaction per line:
//!
//! ```text
//! height<TAB>timestamp<TAB>tx_id<TAB>in_addr:val,in_addr:val,...<TAB>out_addr:val,...
//! ```
//!
//! A coinbase transaction has the single character `-` as its input field.

use std::io::{self, BufRead, Write};

use chrono::NaiveDate;
use thiserror::Error;

use crate::tx::{PricePoint, PriceSeries, Transaction, TxIo};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: timestamp {found} is earlier than previous timestamp {previous}")]
    TimestampRegression { line: usize, previous: i64, found: i64 },
    #[error("line {line}: non-positive value for address '{address}'")]
    NonPositiveValue { line: usize, address: String },
    #[error("price csv: expected header 'date,close', found '{found}'")]
    PriceHeader { found: String },
    #[error("price csv line {line}: {reason}")]
    PriceMalformed { line: usize, reason: String },
    #[error("price csv line {line}: close must be positive, found {close}")]
    NonPositiveClose { line: usize, close: f64 },
    #[error("price csv line {line}: duplicate date {date}")]
    DuplicateDate { line: usize, date: NaiveDate },
    #[error("price csv line {line}: date {found} precedes {previous}")]
    DateOrder {
        line: usize,
        previous: NaiveDate,
        found: NaiveDate,
    },
    #[error("price csv line {line}: missing days between {previous} and {found}")]
    PriceGap {
        line: usize,
        previous: NaiveDate,
        found: NaiveDate,
    },
}

/// Streaming TXLOG reader. Yields transactions in file order and checks
/// the record invariants as it goes.
pub struct TxLogReader<R> {
    inner: R,
    line_no: usize,
    last_timestamp: Option<i64>,
    buf: String,
    failed: bool,
}

impl<R: BufRead> TxLogReader<R> {
    pub fn new(inner: R) -> Self {
        TxLogReader {
            inner,
            line_no: 0,
            last_timestamp: None,
            buf: String::new(),
            failed: false,
        }
    }

    /// Line number of the most recently read line (1-based).
    pub fn line_number(&self) -> usize {
        self.line_no
    }
}

impl<R: BufRead> Iterator for TxLogReader<R> {
    type Item = Result<Transaction, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e.into()));
                }
            }
            self.line_no += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.is_empty() {
                continue;
            }
            let result = parse_line(line, self.line_no).and_then(|tx| {
                if let Some(prev) = self.last_timestamp {
                    if tx.timestamp < prev {
                        return Err(IngestError::TimestampRegression {
                            line: self.line_no,
                            previous: prev,
                            found: tx.timestamp,
                        });
                    }
                }
                self.last_timestamp = Some(tx.timestamp);
                Ok(tx)
            });
            if result.is_err() {
                self.failed = true;
            }
            return Some(result);
        }
    }
}

/// Reads a whole TXLOG stream into memory.
pub fn parse_transaction_log<R: BufRead>(stream: R) -> Result<Vec<Transaction>, IngestError> {
    TxLogReader::new(stream).collect()
}

fn malformed(line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::Malformed {
        line,
        reason: reason.into(),
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<Transaction, IngestError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(malformed(
            line_no,
            format!("expected 5 tab-separated fields, found {}", fields.len()),
        ));
    }
    let block_height = fields[0]
        .parse::<u64>()
        .map_err(|e| malformed(line_no, format!("block height '{}': {e}", fields[0])))?;
    let timestamp = fields[1]
        .parse::<i64>()
        .map_err(|e| malformed(line_no, format!("timestamp '{}': {e}", fields[1])))?;
    let tx_id = fields[2];
    if tx_id.is_empty() {
        return Err(malformed(line_no, "empty tx_id"));
    }
    let inputs = if fields[3] == "-" {
        Vec::new()
    } else {
        parse_legs(fields[3], line_no, "input")?
    };
    if fields[4].is_empty() || fields[4] == "-" {
        return Err(malformed(line_no, "missing output list"));
    }
    let outputs = parse_legs(fields[4], line_no, "output")?;
    Ok(Transaction {
        tx_id: tx_id.to_string(),
        block_height,
        timestamp,
        inputs,
        outputs,
    })
}

fn parse_legs(field: &str, line_no: usize, what: &str) -> Result<Vec<TxIo>, IngestError> {
    if field.is_empty() {
        return Err(malformed(line_no, format!("empty {what} list")));
    }
    field
        .split(',')
        .map(|leg| {
            let (address, value) = leg
                .rsplit_once(':')
                .ok_or_else(|| malformed(line_no, format!("{what} '{leg}' is not address:value")))?;
            if address.is_empty() {
                return Err(malformed(line_no, format!("empty {what} address")));
            }
            let value = value.trim();
            if value.starts_with('-') || value.chars().all(|c| c == '0') && !value.is_empty() {
                return Err(IngestError::NonPositiveValue {
                    line: line_no,
                    address: address.to_string(),
                });
            }
            let value = value
                .parse::<u64>()
                .map_err(|e| malformed(line_no, format!("{what} value '{value}': {e}")))?;
            Ok(TxIo::new(address, value))
        })
        .collect()
}

/// Writes one transaction as a TXLOG line.
pub fn write_transaction<W: Write>(w: &mut W, tx: &Transaction) -> io::Result<()> {
    write!(w, "{}\t{}\t{}\t", tx.block_height, tx.timestamp, tx.tx_id)?;
    if tx.inputs.is_empty() {
        w.write_all(b"-")?;
    } else {
        write_legs(w, &tx.inputs)?;
    }
    w.write_all(b"\t")?;
    write_legs(w, &tx.outputs)?;
    w.write_all(b"\n")
}

fn write_legs<W: Write>(w: &mut W, legs: &[TxIo]) -> io::Result<()> {
    for (i, leg) in legs.iter().enumerate() {
        if i > 0 {
            w.write_all(b",")?;
        }
        write!(w, "{}:{}", leg.address, leg.value)?;
    }
    Ok(())
}

pub fn write_transaction_log<W: Write>(w: &mut W, txs: &[Transaction]) -> io::Result<()> {
    for tx in txs {
        write_transaction(w, tx)?;
    }
    Ok(())
}

/// Parses a `date,close` CSV into a contiguous daily price series.
pub fn parse_price_series<R: BufRead>(stream: R) -> Result<PriceSeries, IngestError> {
    let mut lines = stream.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => String::new(),
    };
    let header_norm: String = header.trim().trim_start_matches('\u{feff}').replace(' ', "");
    if header_norm != "date,close" {
        return Err(IngestError::PriceHeader { found: header });
    }
    let mut points: Vec<PricePoint> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (date, close) = line.split_once(',').ok_or_else(|| IngestError::PriceMalformed {
            line: line_no,
            reason: format!("expected 'date,close', found '{line}'"),
        })?;
        let date = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d").map_err(|e| {
            IngestError::PriceMalformed {
                line: line_no,
                reason: format!("date '{date}': {e}"),
            }
        })?;
        let close: f64 = close.trim().parse().map_err(|e| IngestError::PriceMalformed {
            line: line_no,
            reason: format!("close '{close}': {e}"),
        })?;
        if !(close.is_finite() && close > 0.0) {
            return Err(IngestError::NonPositiveClose {
                line: line_no,
                close,
            });
        }
        if let Some(prev) = points.last() {
            let step = (date - prev.date).num_days();
            if step == 0 {
                return Err(IngestError::DuplicateDate { line: line_no, date });
            }
            if step < 0 {
                return Err(IngestError::DateOrder {
                    line: line_no,
                    previous: prev.date,
                    found: date,
                });
            }
            if step > 1 {
                return Err(IngestError::PriceGap {
                    line: line_no,
                    previous: prev.date,
                    found: date,
                });
            }
        }
        points.push(PricePoint { date, close });
    }
    // Invariants were checked row by row above.
    Ok(PriceSeries::new(points).expect("validated price rows"))
}

pub fn write_price_series<W: Write>(w: &mut W, ps: &PriceSeries) -> io::Result<()> {
    writeln!(w, "date,close")?;
    for p in ps.points() {
        writeln!(w, "{},{}", p.date.format("%Y-%m-%d"), p.close)?;
    }
    Ok(())
}
