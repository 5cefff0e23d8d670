//! `formatbench` command line.
//!
//! Exit codes: 0 success, 1 invalid input (config, flags, CSV), 2 runtime
//! failure, 3 a format's read-back verification failed.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use formatbench_core::{aggregate, from_csv, render_chart, to_csv, validate, ReadSink, SummaryTable};

use crate::adapter::{AdapterInfo, Registry};
use crate::config::{parse_config_with, ConfigDefaults};
use crate::engine::{run_trials_with, BenchDirs, RunOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_UNVERIFIED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "formatbench", version, about = "Create/write/open/read benchmark for array storage formats")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SinkArg {
    Discard,
    Stdout,
}

impl From<SinkArg> for ReadSink {
    fn from(s: SinkArg) -> Self {
        match s {
            SinkArg::Discard => ReadSink::Discard,
            SinkArg::Stdout => ReadSink::StandardOutput,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the benchmark described by a YAML workload file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Where read-back data goes during the read phase.
        #[arg(long, value_enum)]
        sink: Option<SinkArg>,
        /// Keep `Files/` and `Files Read/` after each trial.
        #[arg(long)]
        keep_files: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Skip comparing read-back data with the written payloads.
        #[arg(long)]
        no_verify: bool,
        /// Flip a byte in every relocated store before it is read.
        #[arg(long, hide = true)]
        inject_corrupt_read: bool,
    },
    /// Render the chart for an existing results CSV.
    Report {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List known formats and whether they can run here.
    Formats,
    /// Remove `Files/` and `Files Read/` from an output directory.
    Clean {
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    execute(cli.command, &Registry::builtin())
}

pub fn execute(command: Command, registry: &Registry) -> i32 {
    match command {
        Command::Run {
            config,
            sink,
            keep_files,
            seed,
            trials,
            no_verify,
            inject_corrupt_read,
        } => {
            let overrides = Overrides {
                sink: sink.map(Into::into),
                keep_files,
                seed,
                trials,
            };
            run(&config, &overrides, !no_verify, inject_corrupt_read, registry)
        }
        Command::Report { csv, out } => report(&csv, &out),
        Command::Formats => {
            let mut stdout = io::stdout().lock();
            for info in registry.list() {
                let _ = writeln!(stdout, "{info}");
            }
            EXIT_OK
        }
        Command::Clean { output_dir } => {
            let dir = output_dir.unwrap_or_else(|| ConfigDefaults::from_env().output_dir.into());
            match BenchDirs::under(&dir).remove() {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("error: cleaning {}: {e}", dir.display());
                    EXIT_RUNTIME
                }
            }
        }
    }
}

#[derive(Debug, Default)]
pub struct Overrides {
    pub sink: Option<ReadSink>,
    pub keep_files: bool,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

fn run(
    config_path: &Path,
    overrides: &Overrides,
    verify: bool,
    inject_corrupt_read: bool,
    registry: &Registry,
) -> i32 {
    let text = match fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", config_path.display());
            return EXIT_INVALID;
        }
    };
    let mut config = match parse_config_with(&text, &ConfigDefaults::from_env()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", config_path.display());
            return EXIT_INVALID;
        }
    };
    if let Some(sink) = overrides.sink {
        config.read_sink = sink;
    }
    if overrides.keep_files {
        config.keep_files = true;
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(trials) = overrides.trials {
        config.trials = trials;
    }
    if let Err(errs) = validate(&config, &registry.names()) {
        for e in errs {
            eprintln!("error: {e}");
        }
        return EXIT_INVALID;
    }

    let mut options = RunOptions {
        verify,
        after_relocate: None,
    };
    if inject_corrupt_read {
        options.after_relocate = Some(Box::new(|_: &AdapterInfo, _: &Path, read: &Path| {
            corrupt_largest_file(read)
        }));
    }
    let outcome = match run_trials_with(&config, registry, &options) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    for f in &outcome.failures {
        eprintln!("warning: trial {} {} failed: {}", f.trial, f.format, f.message);
    }

    let records = outcome.records();
    let out_dir = PathBuf::from(&config.output_dir);
    let csv = to_csv(&records);
    let summary = match aggregate(&records) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let svg = render_chart(&summary, &config.test_name);
    let csv_path = out_dir.join(format!("{}.csv", config.test_name));
    let svg_path = out_dir.join(format!("{}.svg", config.test_name));
    let written = fs::create_dir_all(&out_dir)
        .and_then(|_| fs::write(&csv_path, csv))
        .and_then(|_| fs::write(&svg_path, svg));
    if let Err(e) = written {
        eprintln!("error: writing results to {}: {e}", out_dir.display());
        return EXIT_RUNTIME;
    }
    print_summary(&summary);
    println!("wrote {} and {}", csv_path.display(), svg_path.display());

    if verify && !outcome.all_verified() {
        eprintln!(
            "error: read-back verification failed in {} of {} records",
            summary.unverified,
            records.len()
        );
        return EXIT_UNVERIFIED;
    }
    EXIT_OK
}

fn report(csv_path: &Path, out: &Path) -> i32 {
    let text = match fs::read_to_string(csv_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", csv_path.display());
            return EXIT_INVALID;
        }
    };
    let summary = match from_csv(&text)
        .map_err(|e| e.to_string())
        .and_then(|r| aggregate(&r).map_err(|e| e.to_string()))
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", csv_path.display());
            return EXIT_INVALID;
        }
    };
    match fs::write(out, render_chart(&summary, &summary.test_name)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: writing {}: {e}", out.display());
            EXIT_RUNTIME
        }
    }
}

fn print_summary(summary: &SummaryTable) {
    use formatbench_core::Operation;
    println!(
        "{} ({} datasets of {:?}), mean seconds per dataset",
        summary.test_name, summary.dataset_count, summary.dims
    );
    println!(
        "{:<10} {:>14} {:>14} {:>14} {:>14} {:>7}",
        "format", "create", "write", "open", "read", "trials"
    );
    for format in summary.formats() {
        let cell = |op| summary.mean(format, op).unwrap_or(f64::NAN);
        let trials = summary
            .rows
            .iter()
            .find(|r| r.format == format)
            .map_or(0, |r| r.trial_count);
        println!(
            "{:<10} {:>14.9} {:>14.9} {:>14.9} {:>14.9} {:>7}",
            format,
            cell(Operation::Create),
            cell(Operation::Write),
            cell(Operation::Open),
            cell(Operation::Read),
            trials
        );
    }
}

/// Flips the low bit of the last byte of the largest non-JSON file under
/// `root` (or of `root` itself when it is a file). Metadata is left intact
/// so the damage shows up as wrong data rather than a format error.
fn corrupt_largest_file(root: &Path) -> io::Result<()> {
    fn largest(path: &Path, best: &mut Option<(u64, PathBuf)>) -> io::Result<()> {
        let meta = fs::metadata(path)?;
        if meta.is_dir() {
            let mut entries: Vec<_> = fs::read_dir(path)?.collect::<Result<_, _>>()?;
            entries.sort_by_key(|e| e.file_name());
            for e in entries {
                largest(&e.path(), best)?;
            }
        } else if path.extension().is_some_and(|e| e == "json") {
        } else if best.as_ref().is_none_or(|(len, _)| meta.len() > *len) {
            *best = Some((meta.len(), path.to_path_buf()));
        }
        Ok(())
    }
    let mut best = None;
    largest(root, &mut best)?;
    match best {
        Some((len, path)) if len > 0 => {
            let mut bytes = fs::read(&path)?;
            *bytes.last_mut().expect("non-empty") ^= 0x01;
            fs::write(path, bytes)
        }
        _ => Err(io::Error::new(io::ErrorKind::NotFound, "nothing to corrupt")),
    }
}
