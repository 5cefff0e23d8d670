//! Benchmark harness for hierarchical, self-describing array-storage
//! formats.
//!
//! Formats plug in through [`adapter::StorageAdapter`]; the built-in
//! [`nds::NativeStore`] needs no external libraries. [`engine`] runs the
//! timed write and read phases, and the pure pieces (payloads, records,
//! charts) come from `formatbench-core`.

pub mod adapter;
pub mod cli;
pub mod config;
pub mod engine;
pub mod nds;

pub use adapter::{AdapterError, AdapterInfo, DatasetHandle, Registry, StorageAdapter, StoreFile};
pub use config::{parse_config, serialize_config, ConfigError};
pub use engine::{run_trials, run_trials_with, RunOptions, RunOutcome};
pub use formatbench_core as core;
