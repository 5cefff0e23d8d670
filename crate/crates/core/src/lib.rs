//! Allocation-only building blocks of the formatbench harness.
//!
//! Everything here is pure: seeded payload generation, the workload model
//! and its validation, trial records with their CSV encoding and
//! aggregation, and SVG chart rendering. Filesystem access, timing and the
//! storage adapters live in the `formatbench` crate.

#![no_std]

extern crate alloc;

pub mod chart;
pub mod datagen;
pub mod results;
pub mod workload;

pub use chart::render_chart;
pub use datagen::{generate_payload, stream_seed, ArrayPayload, CapacityError, SplitMix64};
pub use results::{aggregate, from_csv, to_csv, Operation, SummaryRow, SummaryTable, TrialRecord};
pub use workload::{auto_test_name, dataset_name, validate, ReadSink, Violation, WorkloadConfig};
