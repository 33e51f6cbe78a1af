//! End-to-end orchestration: ingest, cluster, build, stats, indicators and
//! causality, each stage reading the files written by the ones before it.

mod config;
pub mod tables;

pub use config::{PerGranularity, Period, PipelineConfig};

use chrono::NaiveDate;
use log::info;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

use crate::causality::{
    bivariate_granger, multivariate_granger, tail_events, hong_tail_test, CausalityEntry, CausalityReport, TailSide,
    TestKind,
};
use crate::cluster::{cluster_addresses, ClusterMap};
use crate::indicators::{log_returns_from_closes, rolling_zscore, rpma_from_closes, rpma_tau, window_closes, IndicatorSeries};
use crate::ingest::{parse_price_series, parse_transaction_log, write_price_series, write_transaction_log};
use crate::netbuild::{build_address_network, build_user_network, degree_sequences, link_density, Representation, WindowedGraph};
use crate::netstats::{moments, powerlaw_ks_test};
use crate::rng::derive_seed;
use crate::synth::{generate_synthetic_chain, generate_synthetic_prices, SynthChainConfig};
use crate::tx::{Granularity, PriceSeries, Transaction, WindowId};
use crate::window::{day_of, window_partition};
use tables::{IndicatorRow, StatsRow, WindowRow};

pub const MANIFEST: &str = "manifest.json";
pub const CLUSTERS: &str = "clusters.csv";
pub const GRAPH_DIR: &str = "graphs";

/// Variables entering the causality battery, in column order.
pub const CAUSALITY_VARIABLES: [&str; 9] = [
    "N",
    "L",
    "sigma_in",
    "sigma_out",
    "gamma_in",
    "gamma_out",
    "kappa_in",
    "kappa_out",
    "R",
];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{stage} stage, {context}: {message}")]
    Data {
        stage: Stage,
        context: String,
        message: String,
    },
}

impl PipelineError {
    /// Process exit code: 2 for configuration problems, 3 for bad data.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data { .. } => 3,
        }
    }
}

fn data_err(stage: Stage, context: impl Into<String>) -> impl FnOnce(&dyn fmt::Display) -> PipelineError {
    let context = context.into();
    move |e| PipelineError::Data {
        stage,
        context,
        message: e.to_string(),
    }
}

macro_rules! ctx {
    ($stage:expr, $ctx:expr) => {
        |e| data_err($stage, $ctx)(&e)
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Cluster,
    Build,
    Stats,
    Indicators,
    Causality,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Cluster,
        Stage::Build,
        Stage::Stats,
        Stage::Indicators,
        Stage::Causality,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Cluster => "cluster",
            Stage::Build => "build",
            Stage::Stats => "stats",
            Stage::Indicators => "indicators",
            Stage::Causality => "causality",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown stage {s:?}")))
    }
}

pub fn windows_file(g: Granularity) -> String {
    format!("windows_{g}.csv")
}

pub fn graph_file(repr: Representation, g: Granularity, id: WindowId) -> String {
    format!("{GRAPH_DIR}/{repr}_{g}_{id}.csv")
}

pub fn stats_file(repr: Representation, g: Granularity) -> String {
    format!("stats_{repr}_{g}.csv")
}

pub fn indicators_file(repr: Representation, g: Granularity) -> String {
    format!("indicators_{repr}_{g}.csv")
}

pub fn causality_file(period: Option<&Period>, repr: Representation, g: Granularity) -> String {
    let tag = period.map(Period::tag).unwrap_or_else(|| "all".to_string());
    format!("causality_{tag}_{repr}_{g}.csv")
}

/// Files written by a running stage, removed again if the stage fails.
struct Outputs<'a> {
    root: &'a Path,
    stage: Stage,
    written: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    fn new(root: &'a Path, stage: Stage) -> Self {
        Outputs {
            root,
            stage,
            written: Vec::new(),
            dirs: Vec::new(),
        }
    }

    fn dir(&mut self, rel: &str) -> Result<(), PipelineError> {
        let p = self.root.join(rel);
        if !p.exists() {
            fs::create_dir_all(&p).map_err(ctx!(self.stage, format!("creating {}", p.display())))?;
            self.dirs.push(p);
        }
        Ok(())
    }

    fn write(
        &mut self,
        rel: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), PipelineError> {
        let p = self.root.join(rel);
        let mut w = BufWriter::new(File::create(&p).map_err(ctx!(self.stage, format!("creating {rel}")))?);
        self.written.push(p);
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(ctx!(self.stage, format!("writing {rel}")))
    }

    fn discard(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir_all(d);
        }
    }
}

fn open(root: &Path, rel: &str) -> Result<BufReader<File>, PipelineError> {
    let p = root.join(rel);
    File::open(&p)
        .map(BufReader::new)
        .map_err(|e| PipelineError::Config(format!("cannot open {}: {e}; run the producing stage first", p.display())))
}

fn require_outputs(root: &Path, rels: &[String]) -> Result<(), PipelineError> {
    for rel in rels {
        if !root.join(rel).is_file() {
            return Err(PipelineError::Config(format!(
                "required input {} is missing; run the producing stage first",
                root.join(rel).display()
            )));
        }
    }
    Ok(())
}

/// Runs the given stages in order. Inputs are checked before any work;
/// a failing stage removes whatever it had written.
pub fn run_stages(cfg: &PipelineConfig, stages: &[Stage]) -> Result<(), PipelineError> {
    cfg.validate()?;
    let mut ordered = stages.to_vec();
    ordered.sort();
    ordered.dedup();
    if ordered.is_empty() {
        return Err(PipelineError::Config("no stage selected".into()));
    }
    let needs_txlog = ordered.iter().any(|s| matches!(s, Stage::Ingest | Stage::Cluster | Stage::Build));
    let needs_prices =
        ordered.contains(&Stage::Indicators) || (ordered.contains(&Stage::Ingest) && cfg.prices.is_some());
    if needs_txlog {
        cfg.require_txlog()?;
    }
    if needs_prices {
        cfg.require_prices()?;
    }
    check_stage_inputs(cfg, &ordered)?;
    fs::create_dir_all(&cfg.out).map_err(|e| PipelineError::Config(format!("cannot create {}: {e}", cfg.out.display())))?;

    let mut txs: Option<Vec<Transaction>> = None;
    for &stage in &ordered {
        info!("stage {stage}");
        let mut out = Outputs::new(&cfg.out, stage);
        let result = match stage {
            Stage::Ingest => ingest(cfg, &mut out, &mut txs),
            Stage::Cluster => cluster(cfg, &mut out, &mut txs),
            Stage::Build => build(cfg, &mut out, &mut txs),
            Stage::Stats => stats(cfg, &mut out),
            Stage::Indicators => indicators(cfg, &mut out),
            Stage::Causality => causality(cfg, &mut out),
        };
        if let Err(e) = result {
            out.discard();
            return Err(e);
        }
        write_manifest(cfg)?;
    }
    Ok(())
}

pub fn run_all(cfg: &PipelineConfig) -> Result<(), PipelineError> {
    run_stages(cfg, &Stage::ALL)
}

/// Stages whose file inputs come from an earlier stage not in this run
/// must find those files on disk already.
fn check_stage_inputs(cfg: &PipelineConfig, stages: &[Stage]) -> Result<(), PipelineError> {
    let root = &cfg.out;
    let mut needed = Vec::new();
    let produced = |s: Stage| stages.contains(&s);
    for &stage in stages {
        match stage {
            Stage::Build if cfg.representations.contains(&Representation::Un) && !produced(Stage::Cluster) => {
                needed.push(CLUSTERS.to_string())
            }
            Stage::Stats if !produced(Stage::Ingest) => {
                needed.extend(cfg.granularities.iter().map(|&g| windows_file(g)))
            }
            Stage::Indicators | Stage::Causality if !produced(Stage::Stats) => {
                for &g in &cfg.granularities {
                    needed.extend(cfg.representations.iter().map(|&r| stats_file(r, g)));
                }
            }
            _ => {}
        }
        if stage == Stage::Causality && !produced(Stage::Indicators) {
            for &g in &cfg.granularities {
                needed.extend(cfg.representations.iter().map(|&r| indicators_file(r, g)));
            }
        }
    }
    require_outputs(root, &needed)
}

fn load_txs<'t>(cfg: &PipelineConfig, stage: Stage, cache: &'t mut Option<Vec<Transaction>>) -> Result<&'t [Transaction], PipelineError> {
    if cache.is_none() {
        let path = cfg.require_txlog()?;
        let f = File::open(path).map_err(ctx!(stage, format!("opening {}", path.display())))?;
        let txs = parse_transaction_log(BufReader::new(f)).map_err(ctx!(stage, format!("reading {}", path.display())))?;
        *cache = Some(txs);
    }
    Ok(cache.as_deref().unwrap())
}

fn load_prices(cfg: &PipelineConfig, stage: Stage) -> Result<PriceSeries, PipelineError> {
    let path = cfg.require_prices()?;
    let f = File::open(path).map_err(ctx!(stage, format!("opening {}", path.display())))?;
    parse_price_series(BufReader::new(f)).map_err(ctx!(stage, format!("reading {}", path.display())))
}

fn ingest(cfg: &PipelineConfig, out: &mut Outputs, cache: &mut Option<Vec<Transaction>>) -> Result<(), PipelineError> {
    if cfg.prices.is_some() {
        load_prices(cfg, Stage::Ingest)?;
    }
    let txs = load_txs(cfg, Stage::Ingest, cache)?;
    for &g in &cfg.granularities {
        let rows: Vec<WindowRow> = window_partition(txs, g)
            .into_iter()
            .map(|w| WindowRow {
                window_id: w.id,
                start_timestamp: w.start_timestamp(),
                n_transactions: w.len(),
            })
            .collect();
        out.write(&windows_file(g), |w| tables::write_windows(w, &rows))?;
    }
    Ok(())
}

fn cluster(cfg: &PipelineConfig, out: &mut Outputs, cache: &mut Option<Vec<Transaction>>) -> Result<(), PipelineError> {
    let txs = load_txs(cfg, Stage::Cluster, cache)?;
    let cm = cluster_addresses(txs);
    info!("{} addresses in {} clusters", cm.n_addresses(), cm.n_users());
    out.write(CLUSTERS, |w| cm.write_csv(w))
}

fn build(cfg: &PipelineConfig, out: &mut Outputs, cache: &mut Option<Vec<Transaction>>) -> Result<(), PipelineError> {
    let cm = if cfg.representations.contains(&Representation::Un) {
        Some(ClusterMap::read_csv(open(&cfg.out, CLUSTERS)?).map_err(ctx!(Stage::Build, "reading clusters.csv"))?)
    } else {
        None
    };
    let txs = load_txs(cfg, Stage::Build, cache)?;
    out.dir(GRAPH_DIR)?;
    for &g in &cfg.granularities {
        for w in window_partition(txs, g) {
            let slice = &txs[w.range.clone()];
            for &repr in &cfg.representations {
                let graph = match repr {
                    Representation::An => build_address_network(slice),
                    Representation::Un => build_user_network(slice, cm.as_ref().unwrap())
                        .map_err(ctx!(Stage::Build, format!("window {} {repr}", w.id)))?,
                };
                out.write(&graph_file(repr, g, w.id), |f| graph.write_edge_list(f))?;
            }
        }
    }
    Ok(())
}

/// Statistics of one graph; power-law p-values use a seed derived from
/// the window coordinates.
pub fn graph_stats(
    graph: &WindowedGraph,
    window_id: WindowId,
    granularity: Granularity,
    cfg: &PipelineConfig,
) -> StatsRow {
    let n = graph.n_nodes();
    let ds = degree_sequences(graph);
    let m_in = moments(&ds.k_in).ok();
    let m_out = moments(&ds.k_out).ok();
    let pl = |xs: &[u64], which: &str| -> Option<f64> {
        if cfg.powerlaw_bootstrap == 0 {
            return None;
        }
        let wid = window_id.to_string();
        let seed = derive_seed(cfg.seed, &["stats", graph.repr.as_str(), granularity.as_str(), &wid, which]);
        powerlaw_ks_test(xs, cfg.powerlaw_bootstrap, seed).ok().map(|f| f.p_value)
    };
    StatsRow {
        window_id,
        repr: graph.repr,
        n_nodes: n as u64,
        n_edges: graph.n_edges() as u64,
        density: if n >= cfg.density_min_nodes.max(2) {
            link_density(graph).ok()
        } else {
            None
        },
        mu: (n > 0).then(|| graph.n_edges() as f64 / n as f64),
        sigma_in: m_in.map(|m| m.std_dev),
        sigma_out: m_out.map(|m| m.std_dev),
        gamma_in: m_in.and_then(|m| m.skewness),
        gamma_out: m_out.and_then(|m| m.skewness),
        kappa_in: m_in.and_then(|m| m.kurtosis),
        kappa_out: m_out.and_then(|m| m.kurtosis),
        pl_p_in: pl(&ds.k_in, "in"),
        pl_p_out: pl(&ds.k_out, "out"),
        pl_p_tot: pl(&ds.k_total, "tot"),
    }
}

fn stats(cfg: &PipelineConfig, out: &mut Outputs) -> Result<(), PipelineError> {
    for &g in &cfg.granularities {
        let windows = tables::read_windows(open(&cfg.out, &windows_file(g))?)
            .map_err(ctx!(Stage::Stats, windows_file(g)))?;
        for &repr in &cfg.representations {
            let rels: Vec<String> = windows.iter().map(|w| graph_file(repr, g, w.window_id)).collect();
            require_outputs(&cfg.out, &rels)?;
            let rows = windows
                .par_iter()
                .zip(rels.par_iter())
                .map(|(w, rel)| {
                    let graph = WindowedGraph::read_edge_list(open(&cfg.out, rel)?, repr)
                        .map_err(ctx!(Stage::Stats, rel.clone()))?;
                    Ok(graph_stats(&graph, w.window_id, g, cfg))
                })
                .collect::<Result<Vec<_>, PipelineError>>()?;
            out.write(&stats_file(repr, g), |w| tables::write_stats(w, &rows))?;
        }
    }
    Ok(())
}

/// Indicator rows on the grid of a stats table.
pub fn indicator_rows(
    prices: &PriceSeries,
    stats: &[StatsRow],
    granularity: Granularity,
    cfg: &PipelineConfig,
) -> Result<Vec<IndicatorRow>, PipelineError> {
    let grid: Vec<WindowId> = stats.iter().map(|r| r.window_id).collect();
    let closes = window_closes(prices, granularity);
    let undefined = || IndicatorSeries::new(grid.clone(), vec![None; grid.len()]);
    let rpma = rpma_from_closes(&closes, rpma_tau(granularity), cfg.rpma_window)
        .map(|s| s.align_to(&grid))
        .unwrap_or_else(|_| undefined());
    let returns = log_returns_from_closes(&closes)
        .map_err(ctx!(Stage::Indicators, "log returns"))?
        .align_to(&grid);
    let sigma = IndicatorSeries::new(grid.clone(), stats.iter().map(|r| r.sigma_out).collect());
    let z = rolling_zscore(&sigma, cfg.zscore_lookback.get(granularity))
        .map_err(ctx!(Stage::Indicators, "z-score"))?;
    let close = closes.align_to(&grid);
    Ok((0..grid.len())
        .map(|i| IndicatorRow {
            window_id: grid[i],
            rpma: rpma.values[i],
            log_return: returns.values[i],
            z_sigma_kout: z.values[i],
            close: close.values[i],
        })
        .collect())
}

fn indicators(cfg: &PipelineConfig, out: &mut Outputs) -> Result<(), PipelineError> {
    let prices = load_prices(cfg, Stage::Indicators)?;
    for &g in &cfg.granularities {
        for &repr in &cfg.representations {
            let rel = stats_file(repr, g);
            let stats = tables::read_stats(open(&cfg.out, &rel)?).map_err(ctx!(Stage::Indicators, rel.clone()))?;
            let rows = indicator_rows(&prices, &stats, g, cfg)?;
            out.write(&indicators_file(repr, g), |w| tables::write_indicators(w, &rows))?;
        }
    }
    Ok(())
}

/// Per-window causality variables; `None` where undefined.
pub fn causality_rows(stats: &[StatsRow], ind: &[IndicatorRow]) -> Vec<(WindowId, [Option<f64>; 9])> {
    let by_id: HashMap<WindowId, &IndicatorRow> = ind.iter().map(|r| (r.window_id, r)).collect();
    stats
        .iter()
        .map(|s| {
            let r = by_id.get(&s.window_id).and_then(|r| r.log_return);
            (
                s.window_id,
                [
                    Some(s.n_nodes as f64),
                    Some(s.n_edges as f64),
                    s.sigma_in,
                    s.sigma_out,
                    s.gamma_in,
                    s.gamma_out,
                    s.kappa_in,
                    s.kappa_out,
                    r,
                ],
            )
        })
        .collect()
}

/// Longest run of consecutive fully defined rows (earliest on ties).
fn longest_defined_run(rows: &[[Option<f64>; 9]]) -> std::ops::Range<usize> {
    let (mut best, mut start) = (0..0, 0);
    for i in 0..=rows.len() {
        let ok = i < rows.len() && rows[i].iter().all(Option::is_some);
        if !ok {
            if i - start > best.len() {
                best = start..i;
            }
            start = i + 1;
        }
    }
    best
}

/// Full battery of mean and tail tests over every ordered variable pair.
pub fn causality_report(
    names: &[&str],
    columns: &[Vec<f64>],
    granularity: Granularity,
    cfg: &PipelineConfig,
) -> Result<CausalityReport, PipelineError> {
    let n = names.len();
    let tau = cfg.tau.get(granularity);
    let m = cfg.hong_m.get(granularity);
    let t = columns.first().map_or(0, Vec::len);
    let mut report = CausalityReport::new();
    let entry = |i: usize, j: usize, test, k, stat: Option<f64>, p: Option<f64>, sign: Option<i8>| CausalityEntry {
        cause: names[i].to_string(),
        effect: names[j].to_string(),
        test,
        tau_or_m: k,
        statistic: stat,
        p_value: p,
        sign,
        fdr_reject: false,
    };
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();

    for &(i, j) in &pairs {
        let g = bivariate_granger(&columns[i], &columns[j], tau).ok();
        report.push(entry(
            i,
            j,
            TestKind::MeanBivariate,
            tau,
            g.map(|g| g.f_statistic),
            g.map(|g| g.p_value),
            g.map(|g| g.sign),
        ));
    }

    let conditional = if t > 0 {
        let data = DMatrix::from_fn(t, n, |r, c| columns[c][r]);
        multivariate_granger(&data, tau)
            .map(|v| v.into_iter().map(|c| ((c.cause, c.effect), c.test)).collect::<HashMap<_, _>>())
            .unwrap_or_default()
    } else {
        HashMap::new()
    };
    for &(i, j) in &pairs {
        let g = conditional.get(&(i, j));
        report.push(entry(
            i,
            j,
            TestKind::MeanConditional,
            tau,
            g.map(|g| g.f_statistic),
            g.map(|g| g.p_value),
            g.map(|g| g.sign),
        ));
    }

    for side in TailSide::ALL {
        let window = cfg.davis_window.get(granularity);
        let events: Vec<_> = columns
            .iter()
            .map(|c| tail_events(c, side, window, cfg.davis_phi).ok())
            .collect();
        for &(i, j) in &pairs {
            let h = match (&events[i], &events[j]) {
                (Some(z), Some(w)) => hong_tail_test(z, w, m as f64).ok(),
                _ => None,
            };
            report.push(entry(
                i,
                j,
                TestKind::tail(side),
                m,
                h.as_ref().map(|h| h.q),
                h.as_ref().map(|h| h.p_value),
                h.as_ref().map(|h| h.sign()),
            ));
        }
    }
    report
        .apply_fdr(cfg.fdr_q)
        .map_err(ctx!(Stage::Causality, "FDR"))?;
    Ok(report)
}

fn causality(cfg: &PipelineConfig, out: &mut Outputs) -> Result<(), PipelineError> {
    let periods: Vec<Option<Period>> = if cfg.periods.is_empty() {
        vec![None]
    } else {
        cfg.periods.iter().copied().map(Some).collect()
    };
    for &g in &cfg.granularities {
        for &repr in &cfg.representations {
            let srel = stats_file(repr, g);
            let irel = indicators_file(repr, g);
            let stats = tables::read_stats(open(&cfg.out, &srel)?).map_err(ctx!(Stage::Causality, srel))?;
            let ind = tables::read_indicators(open(&cfg.out, &irel)?).map_err(ctx!(Stage::Causality, irel))?;
            let rows = causality_rows(&stats, &ind);
            for period in &periods {
                let in_period: Vec<[Option<f64>; 9]> = rows
                    .iter()
                    .filter(|(id, _)| period.is_none_or(|p| p.contains(id.date())))
                    .map(|(_, v)| *v)
                    .collect();
                let run = longest_defined_run(&in_period);
                let columns: Vec<Vec<f64>> = (0..CAUSALITY_VARIABLES.len())
                    .map(|c| in_period[run.clone()].iter().map(|r| r[c].unwrap()).collect())
                    .collect();
                info!("causality {repr} {g}: {} usable windows", run.len());
                let report = causality_report(&CAUSALITY_VARIABLES, &columns, g, cfg)?;
                out.write(&causality_file(period.as_ref(), repr, g), |w| report.write_csv(w))?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a PipelineConfig,
    seed: u64,
    files: BTreeMap<String, String>,
}

fn collect_files(dir: &Path, acc: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            collect_files(&p, acc)?;
        } else {
            acc.push(p);
        }
    }
    Ok(())
}

/// SHA-256 of every file under `root` except the manifest, keyed by
/// slash-separated relative path.
pub fn hash_bundle(root: &Path) -> std::io::Result<BTreeMap<String, String>> {
    let mut files = Vec::new();
    collect_files(root, &mut files)?;
    let mut out = BTreeMap::new();
    for p in files {
        let rel = p.strip_prefix(root).unwrap();
        let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if key == MANIFEST {
            continue;
        }
        let mut h = Sha256::new();
        std::io::copy(&mut File::open(&p)?, &mut h)?;
        out.insert(key, hex::encode(h.finalize()));
    }
    Ok(out)
}

/// Config echo (without the output directory), seed and content hashes.
fn write_manifest(cfg: &PipelineConfig) -> Result<(), PipelineError> {
    let files = hash_bundle(&cfg.out).map_err(|e| PipelineError::Config(format!("hashing outputs: {e}")))?;
    let manifest = Manifest {
        config: cfg,
        seed: cfg.seed,
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(cfg.out.join(MANIFEST), text).map_err(|e| PipelineError::Config(format!("writing manifest: {e}")))
}

/// Parameters of the `synth` command.
#[derive(Debug, Clone)]
pub struct SynthRequest {
    pub chain: SynthChainConfig,
    pub initial_price: f64,
    pub log10_volatility: f64,
}

impl Default for SynthRequest {
    fn default() -> Self {
        SynthRequest {
            chain: SynthChainConfig::default(),
            initial_price: 13.5,
            log10_volatility: 0.02,
        }
    }
}

pub const SYNTH_TXLOG: &str = "synth.txlog";
pub const SYNTH_PRICES: &str = "synth_prices.csv";

/// Writes a synthetic chain and a price series covering its span (plus
/// one extra day) into `dir`.
pub fn run_synth(req: &SynthRequest, dir: &Path) -> Result<(PathBuf, PathBuf), PipelineError> {
    let txs = generate_synthetic_chain(&req.chain).map_err(|e| PipelineError::Config(e.to_string()))?;
    if !(req.initial_price > 0.0 && req.log10_volatility >= 0.0) {
        return Err(PipelineError::Config("initial price must be positive, volatility non-negative".into()));
    }
    fs::create_dir_all(dir).map_err(|e| PipelineError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let start: NaiveDate = day_of(req.chain.start_timestamp);
    let prices = generate_synthetic_prices(
        start,
        req.chain.span_days as usize + 1,
        req.initial_price,
        req.log10_volatility,
        derive_seed(req.chain.seed, &["synth", "prices"]),
    );
    let txlog = dir.join(SYNTH_TXLOG);
    let price_path = dir.join(SYNTH_PRICES);
    let write = |p: &Path, f: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| -> Result<(), PipelineError> {
        let mut w = BufWriter::new(File::create(p).map_err(ctx!(Stage::Ingest, format!("creating {}", p.display())))?);
        f(&mut w).and_then(|_| w.flush()).map_err(ctx!(Stage::Ingest, format!("writing {}", p.display())))
    };
    write(&txlog, &|w| write_transaction_log(w, &txs))?;
    write(&price_path, &|w| write_price_series(w, &prices))?;
    Ok((txlog, price_path))
}
