//! Binary directed address (AN) and user (UN) networks per time window.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::ClusterMap;
use crate::tx::{Transaction, WindowId};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("address '{0}' is missing from the cluster map")]
    UnmappedAddress(String),
    #[error("link density needs at least 2 nodes, graph has {0}")]
    TooFewNodes(usize),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("edge list line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Address network.
    An,
    /// User network.
    Un,
}

impl Representation {
    pub const ALL: [Representation; 2] = [Representation::An, Representation::Un];

    pub fn as_str(self) -> &'static str {
        match self {
            Representation::An => "an",
            Representation::Un => "un",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "an" => Ok(Representation::An),
            "un" => Ok(Representation::Un),
            other => Err(format!("unknown representation '{other}' (expected an or un)")),
        }
    }
}

/// Simple directed graph of one window: no self-loops, no parallel edges.
///
/// Nodes are numbered in order of first appearance; edges are sorted by
/// `(src, dst)`. Each edge carries the satoshi volume attributed to it,
/// which the binary statistics ignore.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedGraph {
    pub window_id: Option<WindowId>,
    pub repr: Representation,
    labels: Vec<String>,
    edges: Vec<(u32, u32)>,
    weights: Vec<f64>,
}

impl WindowedGraph {
    pub fn empty(repr: Representation) -> Self {
        WindowedGraph {
            window_id: None,
            repr,
            labels: Vec::new(),
            edges: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn with_window(mut self, id: WindowId) -> Self {
        self.window_id = Some(id);
        self
    }

    /// Number of nodes `N`.
    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    /// Number of links `L`.
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Edge set expressed with node labels.
    pub fn labelled_edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges
            .iter()
            .map(|&(s, d)| (self.labels[s as usize].as_str(), self.labels[d as usize].as_str()))
    }

    /// Total satoshi volume carried by the edges.
    pub fn total_volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn write_edge_list<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "src,dst")?;
        for (s, d) in self.labelled_edges() {
            writeln!(w, "{s},{d}")?;
        }
        Ok(())
    }

    /// Reads a `src,dst` edge list. Weights are not stored in the file and
    /// come back as zero.
    pub fn read_edge_list<R: BufRead>(r: R, repr: Representation) -> Result<Self, NetError> {
        let mut b = Builder::<String>::new(repr);
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "src,dst" {
            return Err(NetError::Malformed {
                line: 1,
                reason: format!("expected header 'src,dst', found '{header}'"),
            });
        }
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (s, d) = line.split_once(',').ok_or_else(|| NetError::Malformed {
                line: i + 2,
                reason: format!("expected 'src,dst', found '{line}'"),
            })?;
            if s == d {
                return Err(NetError::Malformed {
                    line: i + 2,
                    reason: format!("self-loop on '{s}'"),
                });
            }
            b.add_edge(s.to_string(), d.to_string(), 0.0, |k| k.clone());
        }
        Ok(b.finish())
    }
}

struct Builder<K> {
    repr: Representation,
    nodes: HashMap<K, u32>,
    labels: Vec<String>,
    edges: HashMap<(u32, u32), f64>,
}

impl<K: Hash + Eq + Clone> Builder<K> {
    fn new(repr: Representation) -> Self {
        Builder {
            repr,
            nodes: HashMap::new(),
            labels: Vec::new(),
            edges: HashMap::new(),
        }
    }

    fn node(&mut self, key: K, label: impl FnOnce(&K) -> String) -> u32 {
        if let Some(&id) = self.nodes.get(&key) {
            return id;
        }
        let id = self.labels.len() as u32;
        self.labels.push(label(&key));
        self.nodes.insert(key, id);
        id
    }

    fn add_edge(&mut self, src: K, dst: K, weight: f64, label: impl Fn(&K) -> String) {
        if src == dst {
            return;
        }
        let s = self.node(src, &label);
        let d = self.node(dst, &label);
        *self.edges.entry((s, d)).or_insert(0.0) += weight;
    }

    fn finish(self) -> WindowedGraph {
        let mut edges: Vec<((u32, u32), f64)> = self.edges.into_iter().collect();
        edges.sort_by_key(|e| e.0);
        let (edges, weights) = edges.into_iter().unzip();
        WindowedGraph {
            window_id: None,
            repr: self.repr,
            labels: self.labels,
            edges,
            weights,
        }
    }
}

/// Visits every `(input, output, volume)` triple of the complete bipartite
/// expansion of a non-coinbase transaction. The output value is split
/// across inputs in proportion to input value.
fn for_each_flow<'a>(tx: &'a Transaction, mut f: impl FnMut(&'a str, &'a str, f64)) {
    if tx.is_coinbase() {
        return;
    }
    let total_in: f64 = tx.inputs.iter().map(|i| i.value as f64).sum();
    for i in &tx.inputs {
        let share = i.value as f64 / total_in;
        for o in &tx.outputs {
            f(&i.address, &o.address, o.value as f64 * share);
        }
    }
}

/// Address network: an edge `u -> v` for every input `u` and output `v` of
/// every non-coinbase transaction, with self-pairs dropped.
pub fn build_address_network(txs: &[Transaction]) -> WindowedGraph {
    let mut b = Builder::<&str>::new(Representation::An);
    for tx in txs {
        for_each_flow(tx, |u, v, w| b.add_edge(u, v, w, |k| k.to_string()));
    }
    b.finish()
}

/// User network: the address network mapped through `cm`, self-loops
/// dropped. Node labels are user ids.
pub fn build_user_network(txs: &[Transaction], cm: &ClusterMap) -> Result<WindowedGraph, NetError> {
    let mut b = Builder::<u32>::new(Representation::Un);
    let user = |a: &str| cm.user_id(a).ok_or_else(|| NetError::UnmappedAddress(a.to_string()));
    for tx in txs {
        for leg in tx.inputs.iter().chain(&tx.outputs) {
            user(&leg.address)?;
        }
        for_each_flow(tx, |u, v, w| {
            let (su, sv) = (cm.user_id(u).unwrap(), cm.user_id(v).unwrap());
            b.add_edge(su, sv, w, |k| k.to_string());
        });
    }
    Ok(b.finish())
}

/// In-, out- and total degree of every node, indexed by node id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DegreeSequences {
    pub k_in: Vec<u64>,
    pub k_out: Vec<u64>,
    pub k_total: Vec<u64>,
}

impl DegreeSequences {
    pub fn len(&self) -> usize {
        self.k_in.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_in.is_empty()
    }
}

pub fn degree_sequences(g: &WindowedGraph) -> DegreeSequences {
    let n = g.n_nodes();
    let mut k_in = vec![0u64; n];
    let mut k_out = vec![0u64; n];
    for &(s, d) in g.edges() {
        k_out[s as usize] += 1;
        k_in[d as usize] += 1;
    }
    let k_total = k_in.iter().zip(&k_out).map(|(a, b)| a + b).collect();
    DegreeSequences { k_in, k_out, k_total }
}

/// `d = L / (N (N - 1))`.
pub fn link_density(g: &WindowedGraph) -> Result<f64, NetError> {
    let n = g.n_nodes();
    if n < 2 {
        return Err(NetError::TooFewNodes(n));
    }
    Ok(g.n_edges() as f64 / (n as f64 * (n as f64 - 1.0)))
}

/// `d = mu[k] / (N - 1)` with `mu[k]` the mean out-degree.
pub fn link_density_from_degrees(ds: &DegreeSequences) -> Result<f64, NetError> {
    let n = ds.len();
    if n < 2 {
        return Err(NetError::TooFewNodes(n));
    }
    let mean = ds.k_out.iter().sum::<u64>() as f64 / n as f64;
    Ok(mean / (n as f64 - 1.0))
}
