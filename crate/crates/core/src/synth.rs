//! Synthetic chains with preferential attachment toward busy addresses.
//!
//! A handful of addresses end up as hubs that send to and receive from many
//! counterparties, which gives the right-skewed degree distributions seen in
//! real ledgers.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tx::{PricePoint, PriceSeries, Transaction, TxIo};

const COINBASE_REWARD: u64 = 5_000_000_000;
/// Probability that a freshly generated output address is brand new.
const NEW_PAYEE_RATE: f64 = 0.4;
const EXTRA_PAYEE_RATE: f64 = 0.3;
const MAX_PAYEES: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic-chain config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthChainConfig {
    pub n_transactions: usize,
    pub n_seed_addresses: usize,
    /// Probability of picking a counterparty proportionally to its past activity.
    pub hub_attachment_weight: f64,
    /// Probability that a spend has more than one input.
    pub multi_input_rate: f64,
    /// Probability that a spend carries a fresh change output.
    pub change_output_rate: f64,
    pub coinbase_rate: f64,
    pub start_timestamp: i64,
    pub span_days: u32,
    pub block_interval_secs: u32,
    pub seed: u64,
}

impl Default for SynthChainConfig {
    fn default() -> Self {
        SynthChainConfig {
            n_transactions: 10_000,
            n_seed_addresses: 50,
            hub_attachment_weight: 0.9,
            multi_input_rate: 0.3,
            change_output_rate: 0.5,
            coinbase_rate: 0.02,
            // 2013-01-01T00:00:00Z
            start_timestamp: 1_356_998_400,
            span_days: 120,
            block_interval_secs: 600,
            seed: 7,
        }
    }
}

impl SynthChainConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let rates = [
            ("hub_attachment_weight", self.hub_attachment_weight),
            ("multi_input_rate", self.multi_input_rate),
            ("change_output_rate", self.change_output_rate),
            ("coinbase_rate", self.coinbase_rate),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(SynthError::InvalidConfig(format!("{name} = {r} is outside [0, 1]")));
            }
        }
        if self.n_seed_addresses == 0 {
            return Err(SynthError::InvalidConfig("n_seed_addresses must be positive".into()));
        }
        if self.span_days == 0 {
            return Err(SynthError::InvalidConfig("span_days must be positive".into()));
        }
        if self.block_interval_secs == 0 {
            return Err(SynthError::InvalidConfig("block_interval_secs must be positive".into()));
        }
        Ok(())
    }
}

struct AddressPool {
    names: Vec<String>,
    /// One entry per past incidence: sampling uniformly from here is
    /// sampling proportionally to activity.
    urn: Vec<u32>,
}

impl AddressPool {
    fn fresh(&mut self) -> u32 {
        let id = self.names.len() as u32;
        self.names.push(format!("a{id:x}"));
        id
    }

    fn pick_existing<R: Rng>(&self, rng: &mut R, hub_weight: f64) -> u32 {
        if !self.urn.is_empty() && rng.random_bool(hub_weight) {
            self.urn[rng.random_range(0..self.urn.len())]
        } else {
            rng.random_range(0..self.names.len() as u32)
        }
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> u64 {
    let x: f64 = rng.random_range(lo.ln()..hi.ln());
    x.exp().round().max(1.0) as u64
}

/// Generates a deterministic synthetic chain.
pub fn generate_synthetic_chain(cfg: &SynthChainConfig) -> Result<Vec<Transaction>, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pool = AddressPool {
        names: Vec::new(),
        urn: Vec::new(),
    };
    for _ in 0..cfg.n_seed_addresses {
        pool.fresh();
    }

    let span_secs = cfg.span_days as i64 * 86_400;
    let n = cfg.n_transactions as i64;
    let mut txs = Vec::with_capacity(cfg.n_transactions);
    for i in 0..n {
        let offset = if n > 0 { (i as i128 * span_secs as i128 / n as i128) as i64 } else { 0 };
        let timestamp = cfg.start_timestamp + offset;
        let block_height = (offset / cfg.block_interval_secs as i64) as u64;
        let tx_id = format!("s{:x}_{i}", cfg.seed);

        if i == 0 || rng.random_bool(cfg.coinbase_rate) {
            let miner = pool.pick_existing(&mut rng, cfg.hub_attachment_weight);
            pool.urn.push(miner);
            txs.push(Transaction {
                tx_id,
                block_height,
                timestamp,
                inputs: Vec::new(),
                outputs: vec![TxIo::new(pool.names[miner as usize].clone(), COINBASE_REWARD)],
            });
            continue;
        }

        let mut input_ids = vec![pool.pick_existing(&mut rng, cfg.hub_attachment_weight)];
        if rng.random_bool(cfg.multi_input_rate) {
            let extra = rng.random_range(1..=3);
            for _ in 0..extra {
                let a = rng.random_range(0..pool.names.len() as u32);
                if !input_ids.contains(&a) {
                    input_ids.push(a);
                }
            }
        }
        let inputs: Vec<TxIo> = input_ids
            .iter()
            .map(|&a| TxIo::new(pool.names[a as usize].clone(), log_uniform(&mut rng, 1e5, 1e9)))
            .collect();
        let total_in: u64 = inputs.iter().map(|i| i.value).sum();
        let min_in = inputs.iter().map(|i| i.value).min().unwrap_or(1);

        let mut n_payees = 1;
        while n_payees < MAX_PAYEES && rng.random_bool(EXTRA_PAYEE_RATE) {
            n_payees += 1;
        }
        let mut output_ids = Vec::with_capacity(n_payees + 1);
        let mut outputs = Vec::with_capacity(n_payees + 1);
        let share = (total_in / n_payees as u64).max(2);
        for _ in 0..n_payees {
            let payee = if rng.random_bool(NEW_PAYEE_RATE) {
                pool.fresh()
            } else {
                pool.pick_existing(&mut rng, cfg.hub_attachment_weight)
            };
            output_ids.push(payee);
            let value = rng.random_range(1..share);
            outputs.push(TxIo::new(pool.names[payee as usize].clone(), value));
        }
        if min_in > 1 && rng.random_bool(cfg.change_output_rate) {
            let change = pool.fresh();
            output_ids.push(change);
            let value = rng.random_range(1..min_in);
            outputs.push(TxIo::new(pool.names[change as usize].clone(), value));
        }

        pool.urn.extend_from_slice(&input_ids);
        pool.urn.extend_from_slice(&output_ids);
        txs.push(Transaction {
            tx_id,
            block_height,
            timestamp,
            inputs,
            outputs,
        });
    }
    Ok(txs)
}

/// Geometric random walk of daily closes, `log10` steps with the given
/// standard deviation.
pub fn generate_synthetic_prices(
    start: NaiveDate,
    n_days: usize,
    initial: f64,
    log10_volatility: f64,
    seed: u64,
) -> PriceSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(0.0, log10_volatility.max(0.0)).expect("finite volatility");
    let mut level = initial.log10();
    let points = (0..n_days)
        .map(|i| {
            if i > 0 {
                level += step.sample(&mut rng);
            }
            PricePoint {
                date: start + chrono::Duration::days(i as i64),
                close: 10f64.powf(level),
            }
        })
        .collect();
    PriceSeries::new(points).expect("positive contiguous closes")
}
