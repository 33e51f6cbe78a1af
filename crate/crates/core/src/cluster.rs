//! Address clustering with the multi-input and change-address heuristics.
//!
//! Addresses are interned into a dense index space in order of first
//! appearance, so "seen in an earlier transaction" reduces to an index
//! comparison against the size of the index space before the transaction
//! was registered.

use std::collections::{HashMap, HashSet};
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::tx::Transaction;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("cluster map line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("cluster map user ids are not contiguous from 0 (missing {missing})")]
    NonContiguous { missing: u32 },
}

/// Union-find over interned addresses, union by rank with path compression.
#[derive(Debug, Clone, Default)]
pub struct DisjointSet {
    parent: Vec<u32>,
    rank: Vec<u8>,
    names: Vec<Box<str>>,
    index: HashMap<Box<str>, u32>,
}

impl DisjointSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Returns the index of `address`, adding it as a singleton if new.
    pub fn register(&mut self, address: &str) -> u32 {
        if let Some(&i) = self.index.get(address) {
            return i;
        }
        let i = self.parent.len() as u32;
        self.parent.push(i);
        self.rank.push(0);
        let name: Box<str> = address.into();
        self.names.push(name.clone());
        self.index.insert(name, i);
        i
    }

    pub fn index_of(&self, address: &str) -> Option<u32> {
        self.index.get(address).copied()
    }

    pub fn address(&self, index: u32) -> &str {
        &self.names[index as usize]
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Representative without compressing the path.
    pub fn find_immutable(&self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns `false` if they already
    /// shared a set.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        let (ka, kb) = (self.rank[ra as usize], self.rank[rb as usize]);
        if ka < kb {
            self.parent[ra as usize] = rb;
        } else if ka > kb {
            self.parent[rb as usize] = ra;
        } else {
            self.parent[rb as usize] = ra;
            self.rank[ra as usize] += 1;
        }
        true
    }

    pub fn same_set(&mut self, a: u32, b: u32) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Puts every input address of `tx` into one set.
///
/// Inputs must already be registered in `ds`; unregistered inputs are
/// ignored.
pub fn apply_multi_input(tx: &Transaction, ds: &mut DisjointSet) {
    let mut ids = tx.inputs.iter().filter_map(|i| ds.index_of(&i.address));
    if let Some(first) = ids.next() {
        let rest: Vec<u32> = ids.collect();
        for other in rest {
            ds.union(first, other);
        }
    }
}

/// The single change output of `tx`, if the heuristic identifies one.
///
/// An output qualifies when its address was not seen in any earlier
/// transaction and is not one of this transaction's own inputs. The rule
/// fires only if exactly one distinct output address is new and the
/// amount paid to it is strictly lower than every input value.
pub fn change_output(tx: &Transaction, is_seen: impl Fn(&str) -> bool) -> Option<&str> {
    let min_in = tx.min_input_value()?;
    let mut candidate: Option<(&str, u64)> = None;
    for out in &tx.outputs {
        let addr = out.address.as_str();
        if is_seen(addr) || tx.inputs.iter().any(|i| i.address == addr) {
            continue;
        }
        match candidate {
            None => candidate = Some((addr, out.value)),
            Some((c, v)) if c == addr => candidate = Some((c, v.saturating_add(out.value))),
            Some(_) => return None,
        }
    }
    let (addr, value) = candidate?;
    (value < min_in).then_some(addr)
}

/// Joins the change output of `tx` (if any) with its inputs.
///
/// `seen` must hold every address of strictly earlier transactions and
/// nothing from `tx` itself. All addresses of `tx` must be registered.
pub fn apply_change_address(tx: &Transaction, ds: &mut DisjointSet, seen: &HashSet<String>) {
    if let Some(addr) = change_output(tx, |a| seen.contains(a)) {
        let (Some(c), Some(first)) = (ds.index_of(addr), ds.index_of(&tx.inputs[0].address)) else {
            return;
        };
        ds.union(first, c);
    }
}

/// Incremental clustering over a chronological transaction stream.
#[derive(Debug, Default)]
pub struct Clusterer {
    ds: DisjointSet,
    change_unions: usize,
}

impl Clusterer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, tx: &Transaction) {
        let seen_before = self.ds.len() as u32;
        for leg in tx.inputs.iter().chain(&tx.outputs) {
            self.ds.register(&leg.address);
        }
        if tx.is_coinbase() {
            return;
        }
        apply_multi_input(tx, &mut self.ds);
        let ds = &self.ds;
        let change = change_output(tx, |a| ds.index_of(a).is_some_and(|i| i < seen_before));
        if let Some(addr) = change {
            let c = self.ds.index_of(addr).expect("registered");
            let first = self.ds.index_of(&tx.inputs[0].address).expect("registered");
            if self.ds.union(first, c) {
                self.change_unions += 1;
            }
        }
    }

    pub fn disjoint_set(&self) -> &DisjointSet {
        &self.ds
    }

    /// Number of change-address unions that merged two distinct sets.
    pub fn change_unions(&self) -> usize {
        self.change_unions
    }

    pub fn finish(mut self) -> ClusterMap {
        let n = self.ds.len();
        let mut root_to_user: HashMap<u32, u32> = HashMap::new();
        let mut user_of = Vec::with_capacity(n);
        for i in 0..n as u32 {
            let root = self.ds.find(i);
            let next = root_to_user.len() as u32;
            user_of.push(*root_to_user.entry(root).or_insert(next));
        }
        let n_users = root_to_user.len();
        ClusterMap {
            addresses: self.ds.names,
            index: self.ds.index,
            user_of,
            n_users,
        }
    }
}

/// Clusters addresses with both heuristics in one chronological pass.
///
/// Transactions are processed by timestamp, then block height, then
/// their position in `txs`.
pub fn cluster_addresses(txs: &[Transaction]) -> ClusterMap {
    let mut order: Vec<usize> = (0..txs.len()).collect();
    order.sort_by_key(|&i| (txs[i].timestamp, txs[i].block_height));
    let mut c = Clusterer::new();
    for i in order {
        c.observe(&txs[i]);
    }
    c.finish()
}

/// Total map from address to user id. Ids are dense, numbered by the
/// first appearance of each cluster's earliest address.
#[derive(Debug, Clone, Default)]
pub struct ClusterMap {
    addresses: Vec<Box<str>>,
    index: HashMap<Box<str>, u32>,
    user_of: Vec<u32>,
    n_users: usize,
}

impl PartialEq for ClusterMap {
    fn eq(&self, other: &Self) -> bool {
        self.addresses == other.addresses && self.user_of == other.user_of
    }
}

impl ClusterMap {
    /// Every address its own user, in the given order.
    pub fn identity<'a>(addresses: impl IntoIterator<Item = &'a str>) -> Self {
        let mut cm = ClusterMap::default();
        for a in addresses {
            if cm.index.contains_key(a) {
                continue;
            }
            let i = cm.addresses.len() as u32;
            cm.addresses.push(a.into());
            cm.index.insert(a.into(), i);
            cm.user_of.push(i);
        }
        cm.n_users = cm.addresses.len();
        cm
    }

    pub fn user_id(&self, address: &str) -> Option<u32> {
        self.index.get(address).map(|&i| self.user_of[i as usize])
    }

    pub fn n_addresses(&self) -> usize {
        self.addresses.len()
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    /// `(address, user_id)` pairs in first-seen order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> + '_ {
        self.addresses.iter().map(|a| &**a).zip(self.user_of.iter().copied())
    }

    /// Clusters as sorted address lists, sorted by their first member.
    pub fn partition(&self) -> Vec<Vec<String>> {
        let mut groups: Vec<Vec<String>> = vec![Vec::new(); self.n_users];
        for (a, u) in self.iter() {
            groups[u as usize].push(a.to_string());
        }
        for g in &mut groups {
            g.sort();
        }
        groups.sort();
        groups
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "address,user_id")?;
        for (a, u) in self.iter() {
            writeln!(w, "{a},{u}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, ClusterError> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "address,user_id" {
            return Err(ClusterError::Malformed {
                line: 1,
                reason: format!("expected header 'address,user_id', found '{header}'"),
            });
        }
        let mut cm = ClusterMap::default();
        let mut max_user = None::<u32>;
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (a, u) = line.rsplit_once(',').ok_or_else(|| ClusterError::Malformed {
                line: line_no,
                reason: "expected 'address,user_id'".into(),
            })?;
            let u: u32 = u.trim().parse().map_err(|e| ClusterError::Malformed {
                line: line_no,
                reason: format!("user id '{u}': {e}"),
            })?;
            if a.is_empty() || cm.index.contains_key(a) {
                return Err(ClusterError::Malformed {
                    line: line_no,
                    reason: format!("empty or duplicate address '{a}'"),
                });
            }
            let idx = cm.addresses.len() as u32;
            cm.addresses.push(a.into());
            cm.index.insert(a.into(), idx);
            cm.user_of.push(u);
            max_user = Some(max_user.map_or(u, |m| m.max(u)));
        }
        let n_users = max_user.map_or(0, |m| m as usize + 1);
        let mut present = vec![false; n_users];
        for &u in &cm.user_of {
            present[u as usize] = true;
        }
        if let Some(missing) = present.iter().position(|p| !p) {
            return Err(ClusterError::NonContiguous {
                missing: missing as u32,
            });
        }
        cm.n_users = n_users;
        Ok(cm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tx::TxIo;

    fn tx(ts: i64, ins: &[(&str, u64)], outs: &[(&str, u64)]) -> Transaction {
        Transaction {
            tx_id: format!("t{ts}"),
            block_height: ts as u64,
            timestamp: ts,
            inputs: ins.iter().map(|(a, v)| TxIo::new(*a, *v)).collect(),
            outputs: outs.iter().map(|(a, v)| TxIo::new(*a, *v)).collect(),
        }
    }

    fn register_all(ds: &mut DisjointSet, t: &Transaction) {
        for l in t.inputs.iter().chain(&t.outputs) {
            ds.register(&l.address);
        }
    }

    #[test]
    fn multi_input_joins_inputs_only() {
        let t = tx(1, &[("a", 5), ("b", 5)], &[("c", 3)]);
        let mut ds = DisjointSet::new();
        register_all(&mut ds, &t);
        apply_multi_input(&t, &mut ds);
        let (a, b, c) = (0, 1, 2);
        assert_eq!(ds.find(a), ds.find(b));
        assert_ne!(ds.find(a), ds.find(c));
        assert_eq!(ds.find(c), c);
    }

    #[test]
    fn single_input_no_union() {
        let t = tx(1, &[("a", 5)], &[("c", 3)]);
        let mut ds = DisjointSet::new();
        register_all(&mut ds, &t);
        apply_multi_input(&t, &mut ds);
        assert_ne!(ds.find(0), ds.find(1));
    }

    #[test]
    fn three_inputs_one_set() {
        let t = tx(1, &[("a", 5), ("b", 5), ("c", 1)], &[("d", 3)]);
        let mut ds = DisjointSet::new();
        register_all(&mut ds, &t);
        apply_multi_input(&t, &mut ds);
        let r = ds.find(0);
        assert!((0..3).all(|i| ds.find(i) == r));
        assert_ne!(ds.find(3), r);
    }

    #[test]
    fn change_address_fires_on_new_lower_output() {
        let t = tx(
            2,
            &[("a", 100_000_000), ("b", 150_000_000)],
            &[("d", 50_000_000), ("e", 200_000_000)],
        );
        let seen: HashSet<String> = ["a", "b", "e"].iter().map(|s| s.to_string()).collect();
        let mut ds = DisjointSet::new();
        register_all(&mut ds, &t);
        apply_change_address(&t, &mut ds, &seen);
        let (a, d, e) = (ds.index_of("a").unwrap(), ds.index_of("d").unwrap(), ds.index_of("e").unwrap());
        assert!(ds.same_set(a, d));
        assert!(!ds.same_set(a, e));
    }

    #[test]
    fn change_address_skips_seen_candidate() {
        let t = tx(2, &[("a", 100)], &[("d", 50), ("e", 200)]);
        let seen: HashSet<String> = ["a", "d", "e"].iter().map(|s| s.to_string()).collect();
        assert_eq!(change_output(&t, |x| seen.contains(x)), None);
    }

    #[test]
    fn change_address_abstains_on_two_new_outputs() {
        let t = tx(2, &[("a", 100)], &[("d", 50), ("f", 40)]);
        let seen: HashSet<String> = ["a"].iter().map(|s| s.to_string()).collect();
        assert_eq!(change_output(&t, |x| seen.contains(x)), None);
    }

    #[test]
    fn change_value_must_be_strictly_lower() {
        let t = tx(2, &[("a", 100), ("b", 70)], &[("d", 70), ("e", 10)]);
        let seen: HashSet<String> = ["a", "b", "e"].iter().map(|s| s.to_string()).collect();
        assert_eq!(change_output(&t, |x| seen.contains(x)), None);
        let t = tx(2, &[("a", 100), ("b", 70)], &[("d", 69), ("e", 10)]);
        assert_eq!(change_output(&t, |x| seen.contains(x)), Some("d"));
    }

    #[test]
    fn coinbase_and_self_payment_never_fire() {
        let cb = tx(1, &[], &[("m", 50)]);
        assert_eq!(change_output(&cb, |_| false), None);
        let selfpay = tx(2, &[("a", 100)], &[("a", 50)]);
        assert_eq!(change_output(&selfpay, |_| false), None);
        let cm = cluster_addresses(&[tx(1, &[], &[("m", 50), ("n", 1)])]);
        assert_eq!(cm.n_users(), 2);
    }

    #[test]
    fn overlapping_inputs_chain_into_one_user() {
        let txs = [
            tx(1, &[("a", 5), ("b", 5)], &[("x", 100)]),
            tx(2, &[("b", 5), ("c", 5)], &[("y", 100)]),
        ];
        let cm = cluster_addresses(&txs);
        assert_eq!(cm.user_id("a"), cm.user_id("c"));
        assert_eq!(cm.user_id("a"), Some(0));
        assert_ne!(cm.user_id("x"), cm.user_id("y"));
    }

    #[test]
    fn disjoint_transactions_keep_every_address_apart() {
        let txs = [tx(1, &[("a", 5)], &[("b", 10)]), tx(2, &[("c", 5)], &[("d", 10)])];
        let cm = cluster_addresses(&txs);
        assert_eq!(cm.n_users(), 4);
        assert_eq!(
            cm.iter().collect::<Vec<_>>(),
            vec![("a", 0), ("b", 1), ("c", 2), ("d", 3)]
        );
    }

    #[test]
    fn output_seen_in_same_transaction_only_is_new() {
        // 'd' appears twice among this tx's outputs; it is still new.
        let t = tx(2, &[("a", 100)], &[("d", 20), ("e", 500), ("d", 30)]);
        let seen: HashSet<String> = ["a", "e"].iter().map(|s| s.to_string()).collect();
        assert_eq!(change_output(&t, |x| seen.contains(x)), Some("d"));
        let t = tx(2, &[("a", 100)], &[("d", 60), ("e", 500), ("d", 60)]);
        assert_eq!(change_output(&t, |x| seen.contains(x)), None);
    }

    #[test]
    fn user_ids_follow_first_appearance() {
        let txs = [
            tx(1, &[("p", 5)], &[("q", 10)]),
            tx(2, &[("z", 5), ("p", 5)], &[("q", 100)]),
        ];
        let cm = cluster_addresses(&txs);
        assert_eq!(cm.user_id("p"), Some(0));
        assert_eq!(cm.user_id("z"), Some(0));
        assert_eq!(cm.user_id("q"), Some(1));
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let txs = [tx(1, &[("a", 5), ("b", 5)], &[("c", 100)])];
        let cm = cluster_addresses(&txs);
        let mut buf = Vec::new();
        cm.write_csv(&mut buf).unwrap();
        let back = ClusterMap::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, cm);
        assert_eq!(back.n_users(), 2);
        assert!(matches!(
            ClusterMap::read_csv("address,user_id\na,0\nb,2\n".as_bytes()),
            Err(ClusterError::NonContiguous { missing: 1 })
        ));
        assert!(ClusterMap::read_csv("addr,uid\n".as_bytes()).is_err());
    }

    #[test]
    fn find_is_idempotent_after_unions() {
        let mut ds = DisjointSet::new();
        for i in 0..100 {
            ds.register(&format!("x{i}"));
        }
        for i in (0..99).step_by(3) {
            ds.union(i, i + 1);
        }
        for i in 0..100 {
            let r = ds.find(i);
            assert_eq!(ds.find(r), r);
            assert_eq!(ds.find_immutable(i), r);
        }
    }
}
