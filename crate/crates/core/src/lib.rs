//! Transaction network analysis of a public ledger: ingestion, entity
//! clustering, windowed graph construction, degree statistics, market
//! indicators and Granger causality between them.

pub mod causality;
pub mod cluster;
pub mod indicators;
pub mod ingest;
pub mod netbuild;
pub mod netstats;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod tx;
pub mod window;

pub use cluster::{cluster_addresses, ClusterMap};
pub use netbuild::{build_address_network, build_user_network, Representation, WindowedGraph};
pub use tx::{Granularity, PricePoint, PriceSeries, Transaction, TxIo, WindowId};
