//! Executable model of a fast lightweight 2-way merger for sorting.
//!
//! The crate provides:
//! * [`merger`] — a cycle-level model of the FLiMS selector-plus-butterfly
//!   merger with its skew, stable, and whole-row (FLiMSj) variants;
//! * [`network`] — comparator-network construction, counting, evaluation,
//!   and export for the family of high-throughput 2-way merger designs;
//! * [`tree`] — a cycle-level simulator for parallel merge trees built from
//!   these mergers, FIFOs, and rate converters;
//! * [`sorter`] — a batch-oriented merge kernel equivalent to the cycle
//!   model, plus a complete chunked mergesort;
//! * [`oracle`] — independent reference oracles and dataset generators for
//!   the test batteries.

pub mod error;
pub mod merger;
pub mod network;
pub mod oracle;
pub mod record;
pub mod sorter;
pub mod tree;

pub use error::{ConfigError, ValidationError};
pub use merger::{
    butterfly_sort_row, dequeue_balance, merge_full, CycleTrace, MergeError, Merger, MergerConfig,
    TraceCycle, Variant,
};
pub use network::{
    build_network, comparator_count, compare_count, evaluate_network, export_network,
    import_network, pipeline_latency, read_outputs, ComparatorNetwork, CountComparison, Design,
    ExportFormat, Stage, StageKind,
};
pub use record::{Direction, Record, SortRule};
pub use sorter::{
    bench_csv, bench_sort, kernel_merge, sort, sort_chunks, BenchRow, RunSet, SortConfig,
};
pub use tree::{
    build_tree, simulate, NodeStalls, SimulateError, TreeMode, TreeStats, TreeTopology,
};
