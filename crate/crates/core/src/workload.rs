//! Benchmark workload description and its validation rules.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

pub const DEFAULT_TRIALS: usize = 10;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUTPUT_DIR: &str = ".";

/// Where read-back payloads go during the read phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ReadSink {
    /// Payloads are kept opaque to the optimizer and dropped.
    #[default]
    Discard,
    /// Payload values are printed, one dataset per line.
    StandardOutput,
}

impl ReadSink {
    pub fn as_str(self) -> &'static str {
        match self {
            ReadSink::Discard => "discard",
            ReadSink::StandardOutput => "standard_output",
        }
    }

    /// Accepts both the config spelling and the `stdout` shorthand.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "discard" => Some(ReadSink::Discard),
            "standard_output" | "stdout" => Some(ReadSink::StandardOutput),
            _ => None,
        }
    }
}

impl fmt::Display for ReadSink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of one benchmark run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadConfig {
    pub test_name: String,
    pub dataset_count: usize,
    /// Elements per dimension of every dataset.
    pub dims: Vec<usize>,
    pub trials: usize,
    /// Requested adapter names. Empty means every registered adapter.
    pub formats: Vec<String>,
    pub seed: u64,
    pub output_dir: String,
    pub keep_files: bool,
    pub read_sink: ReadSink,
}

impl WorkloadConfig {
    /// A config with every optional field at its default and an
    /// auto-generated name.
    pub fn new(dataset_count: usize, dims: Vec<usize>) -> Self {
        Self {
            test_name: auto_test_name(dataset_count, &dims),
            dataset_count,
            dims,
            trials: DEFAULT_TRIALS,
            formats: Vec::new(),
            seed: DEFAULT_SEED,
            output_dir: DEFAULT_OUTPUT_DIR.to_string(),
            keep_files: false,
            read_sink: ReadSink::Discard,
        }
    }

    /// Formats to run, with the empty list expanded to `registered`.
    pub fn resolved_formats<'a>(&'a self, registered: &[&'a str]) -> Vec<&'a str> {
        if self.formats.is_empty() {
            registered.to_vec()
        } else {
            self.formats.iter().map(String::as_str).collect()
        }
    }

    /// Structural invariants that do not depend on an adapter registry.
    pub fn check(&self) -> Result<(), Vec<Violation>> {
        let mut errs = Vec::new();
        self.collect_structural(&mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    fn collect_structural(&self, errs: &mut Vec<Violation>) {
        if self.dataset_count == 0 {
            errs.push(Violation::new("dataset_count", "must be at least 1"));
        }
        if self.dims.is_empty() {
            errs.push(Violation::new("dims", "must list at least one dimension"));
        }
        for (i, &d) in self.dims.iter().enumerate() {
            if d == 0 {
                errs.push(Violation::new("dims", format!("entry {i} must be at least 1")));
            }
        }
        if !self.dims.is_empty() && crate::datagen::element_count(&self.dims).is_none() {
            errs.push(Violation::new("dims", "shape exceeds addressable size"));
        }
        if self.trials == 0 {
            errs.push(Violation::new("trials", "must be at least 1"));
        }
        if let Some(reason) = test_name_problem(&self.test_name) {
            errs.push(Violation::new("test_name", reason));
        }
        for (i, name) in self.formats.iter().enumerate() {
            if self.formats[..i].contains(name) {
                errs.push(Violation::new("formats", format!("`{name}` listed twice")));
            }
        }
    }
}

fn test_name_problem(name: &str) -> Option<&'static str> {
    if name.is_empty() {
        Some("must not be empty")
    } else if name == "." || name == ".." {
        Some("must not be a relative directory name")
    } else if name.contains(['/', '\\', '\0', '\n', '\r']) {
        Some("must not contain path separators or line breaks")
    } else {
        None
    }
}

/// One broken rule, named by the config key it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: &'static str,
    pub message: String,
}

impl Violation {
    pub fn new(key: &'static str, message: impl Into<String>) -> Self {
        Self {
            key,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Checks every invariant of `config` and that each requested format is in
/// `registered`, returning all violations found.
pub fn validate(config: &WorkloadConfig, registered: &[&str]) -> Result<(), Vec<Violation>> {
    let mut errs = Vec::new();
    config.collect_structural(&mut errs);
    for name in &config.formats {
        if !registered.contains(&name.as_str()) {
            errs.push(Violation::new("formats", format!("unknown format `{name}`")));
        }
    }
    if config.resolved_formats(registered).is_empty() {
        errs.push(Violation::new("formats", "no formats registered"));
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// `<count>-Vector`, `<count>-Matrix` or `<count>-Tensor` by rank.
pub fn auto_test_name(dataset_count: usize, dims: &[usize]) -> String {
    let kind = match dims.len() {
        0 | 1 => "Vector",
        2 => "Matrix",
        _ => "Tensor",
    };
    format!("{dataset_count}-{kind}")
}

/// Name of the `index`-th dataset inside every store.
pub fn dataset_name(index: usize) -> String {
    format!("dataset_{index:05}")
}
