//! Deterministic execute-order-validate pipeline simulator with
//! reordering-based optimistic concurrency control.
//!
//! Transactions are simulated against block snapshots, totally ordered,
//! checked against a dependency graph on arrival, reordered at block
//! formation and finally validated against the versioned state. Baseline
//! policies share the same pipeline so their ledgers can be compared on
//! identical input.

pub mod depgraph;
pub mod execution;
pub mod model;
pub mod mvstore;
pub mod oracle;
pub mod pipeline;
pub mod schedulers;
pub mod workload;

pub use depgraph::{Admission, DepGraph, GraphConfig, ReachMode};
pub use execution::{Endorsement, Executor, ReadMode};
pub use model::{Block, DependencyKind, Key, SeqNum, Transaction, TxnId, TxnStatus, Value, Version};
pub use mvstore::{MvStore, SnapshotHandle};
pub use pipeline::{run, run_trace, Ledger, Metrics, SimConfig, SimResult};
pub use schedulers::{Policy, PolicyKind};
pub use workload::{ContractCall, Proposal, Trace, WorkloadKind, WorkloadSpec};
