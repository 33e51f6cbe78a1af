use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use txnet_core::pipeline::{run_stages, run_synth, PipelineConfig, PipelineError, Stage, SynthRequest};
use txnet_core::window::date_to_timestamp;

/// Transaction-network statistics and causality analysis for UTXO ledgers.
#[derive(Parser)]
#[command(name = "txnet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the transaction log and price file, write the window index.
    Ingest(Common),
    /// Cluster addresses into users.
    Cluster(Common),
    /// Build per-window address and user graphs.
    Build(Common),
    /// Degree statistics and power-law tests per window.
    Stats(Common),
    /// Price indicators on the network window grid.
    Indicators(Common),
    /// Granger causality in mean and in tail.
    Causality(Common),
    /// Run every stage in order.
    All(Common),
    /// Generate a synthetic transaction log and price series.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Common {
    /// Key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict to one granularity (daily or weekly); repeatable.
    #[arg(long)]
    granularity: Vec<String>,
    /// Restrict to one representation (an or un); repeatable.
    #[arg(long)]
    repr: Vec<String>,
    /// Analysis period as start:end (YYYY-MM-DD); repeatable.
    #[arg(long)]
    period: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    txlog: Option<PathBuf>,
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Any other config key, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    transactions: usize,
    #[arg(long, default_value_t = 120)]
    days: u32,
    /// First day of the chain.
    #[arg(long, default_value = "2013-01-01")]
    start: NaiveDate,
    #[arg(long, default_value_t = 50)]
    seed_addresses: usize,
    /// Probability of choosing a counterparty proportionally to activity.
    #[arg(long, default_value_t = 0.9)]
    hub_weight: f64,
    #[arg(long, default_value_t = 13.5)]
    initial_price: f64,
    /// Standard deviation of daily log10 price steps.
    #[arg(long, default_value_t = 0.02)]
    volatility: f64,
}

fn build_config(c: &Common) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if !c.granularity.is_empty() {
        cfg.set("granularities", &c.granularity.join(","), None)?;
    }
    if !c.repr.is_empty() {
        cfg.set("representations", &c.repr.join(","), None)?;
    }
    if !c.period.is_empty() {
        cfg.set("periods", &c.period.join(","), None)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(t) = &c.txlog {
        cfg.txlog = Some(t.clone());
    }
    if let Some(p) = &c.prices {
        cfg.prices = Some(p.clone());
    }
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("--set expects key=value, got {kv:?}")))?;
        cfg.set(k, v, None)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let (common, stages): (&Common, Vec<Stage>) = match &cli.command {
        Command::Ingest(c) => (c, vec![Stage::Ingest]),
        Command::Cluster(c) => (c, vec![Stage::Cluster]),
        Command::Build(c) => (c, vec![Stage::Build]),
        Command::Stats(c) => (c, vec![Stage::Stats]),
        Command::Indicators(c) => (c, vec![Stage::Indicators]),
        Command::Causality(c) => (c, vec![Stage::Causality]),
        Command::All(c) => (c, Stage::ALL.to_vec()),
        Command::Synth(s) => {
            let mut req = SynthRequest::default();
            req.chain.seed = s.seed;
            req.chain.n_transactions = s.transactions;
            req.chain.span_days = s.days;
            req.chain.start_timestamp = date_to_timestamp(s.start);
            req.chain.n_seed_addresses = s.seed_addresses;
            req.chain.hub_attachment_weight = s.hub_weight;
            req.initial_price = s.initial_price;
            req.log10_volatility = s.volatility;
            let (txlog, prices) = run_synth(&req, &s.out)?;
            println!("{}\n{}", txlog.display(), prices.display());
            return Ok(());
        }
    };
    let cfg = build_config(common)?;
    run_stages(&cfg, &stages)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("txnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
