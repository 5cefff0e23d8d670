//! The benchmark loop.
//!
//! Each trial runs, per format: a timed write phase into `Files/`, an
//! untimed copy of the result into `Files Read/` under a new name, and a
//! timed read phase on that copy. Only the four store operations are
//! timed; payload generation, verification, relocation and directory
//! management happen outside the timed regions.

use std::fmt::Write as _;
use std::fs;
use std::hint::black_box;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use formatbench_core::datagen::Fnv1a;
use formatbench_core::results::nanos_to_seconds;
use formatbench_core::{
    dataset_name, generate_payload, stream_seed, ArrayPayload, CapacityError, ReadSink,
    TrialRecord, WorkloadConfig,
};
use log::{info, warn};
use thiserror::Error;

use crate::adapter::{AdapterError, AdapterInfo, Registry, StorageAdapter};

pub const FILES_DIR: &str = "Files";
pub const FILES_READ_DIR: &str = "Files Read";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Capacity(CapacityError),
    #[error("writing read-back data: {0}")]
    Sink(#[source] io::Error),
    #[error("no requested format is available")]
    NoAvailableFormats,
    #[error("every format failed in trial {trial}: {}", summarize(.failures))]
    AllFormatsFailed {
        trial: usize,
        failures: Vec<CellFailure>,
    },
}

fn summarize(failures: &[CellFailure]) -> String {
    failures
        .iter()
        .map(|f| format!("{}: {}", f.format, f.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl EngineError {
    fn io(context: impl Into<String>, source: io::Error) -> Self {
        EngineError::Io {
            context: context.into(),
            source,
        }
    }
}

/// A (trial, format) cell that produced no record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellFailure {
    pub trial: usize,
    pub format: String,
    pub message: String,
}

/// Nanoseconds accumulated by one timed operation over a phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpTotal {
    pub nanos: u64,
    pub calls: u64,
    /// Longest single call.
    pub max_call_nanos: u64,
}

impl OpTotal {
    pub fn add(&mut self, elapsed: Duration) {
        let n = u64::try_from(elapsed.as_nanos()).unwrap_or(u64::MAX);
        self.nanos = self.nanos.saturating_add(n);
        self.calls += 1;
        self.max_call_nanos = self.max_call_nanos.max(n);
    }

    pub fn seconds(&self) -> f64 {
        nanos_to_seconds(self.nanos)
    }

    /// Exact per-dataset average over `count` datasets.
    pub fn average(&self, count: usize) -> Average {
        Average {
            total_nanos: self.nanos,
            count: count as u64,
        }
    }
}

/// A total divided by a dataset count, kept as the exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Average {
    pub total_nanos: u64,
    pub count: u64,
}

impl Average {
    pub fn seconds(&self) -> f64 {
        self.total_nanos as f64 / 1e9 / self.count as f64
    }

    /// Rounded to the nearest whole nanosecond, the resolution of the CSV.
    pub fn rounded_nanos(&self) -> u64 {
        let (t, n) = (u128::from(self.total_nanos), u128::from(self.count));
        ((2 * t + n) / (2 * n)) as u64
    }

    /// The average multiplied back by `count`, as a nanosecond total.
    pub fn times(&self, count: u64) -> Option<u64> {
        (count == self.count).then_some(self.total_nanos)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WritePhaseTiming {
    pub create: OpTotal,
    pub write: OpTotal,
    pub dataset_count: usize,
}

/// Outcome of comparing read-back payloads with regenerated originals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    /// `false` when verification was switched off.
    pub checked: bool,
    /// First dataset whose contents differed, and the element index.
    pub first_mismatch: Option<(String, usize)>,
    /// FNV-1a over the checksums of every payload read, in order.
    pub checksum: u64,
}

impl Verification {
    pub fn verified(&self) -> bool {
        self.checked && self.first_mismatch.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadPhaseTiming {
    pub open: OpTotal,
    pub read: OpTotal,
    pub close_nanos: u64,
    pub dataset_count: usize,
    pub verification: Verification,
}

/// `Files/` and `Files Read/` under an output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchDirs {
    pub files: PathBuf,
    pub files_read: PathBuf,
}

impl BenchDirs {
    pub fn under(output_dir: impl AsRef<Path>) -> Self {
        let root = output_dir.as_ref();
        Self {
            files: root.join(FILES_DIR),
            files_read: root.join(FILES_READ_DIR),
        }
    }

    pub fn prepare(&self) -> io::Result<()> {
        fs::create_dir_all(&self.files)?;
        fs::create_dir_all(&self.files_read)
    }

    /// Removes both directories. Missing directories are not an error.
    pub fn remove(&self) -> io::Result<()> {
        for dir in [&self.files, &self.files_read] {
            match fs::remove_dir_all(dir) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e),
                _ => {}
            }
        }
        Ok(())
    }
}

/// Path the write phase of `trial` uses for a format with extension `ext`.
pub fn written_path(dirs: &BenchDirs, config: &WorkloadConfig, trial: usize, ext: &str) -> PathBuf {
    dirs.files
        .join(format!("{}-trial{trial}.{ext}", config.test_name))
}

fn time<T>(total: &mut OpTotal, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    total.add(start.elapsed());
    out
}

/// Creates and fills one store under `dirs.files`, timing dataset creation
/// and writes separately.
pub fn run_write_phase(
    adapter: &dyn StorageAdapter,
    config: &WorkloadConfig,
    trial: usize,
    dirs: &BenchDirs,
) -> Result<(WritePhaseTiming, PathBuf), EngineError> {
    let path = written_path(dirs, config, trial, adapter.info().file_extension);
    let mut file = adapter.create_file(&path)?;
    let mut timing = WritePhaseTiming {
        create: OpTotal::default(),
        write: OpTotal::default(),
        dataset_count: config.dataset_count,
    };
    for i in 0..config.dataset_count {
        let payload = generate_payload(&config.dims, stream_seed(config.seed, trial as u64, i as u64))
            .map_err(EngineError::Capacity)?;
        let name = dataset_name(i);
        let ds = time(&mut timing.create, || file.create_dataset(&name, &config.dims))?;
        time(&mut timing.write, || file.write_dataset(&ds, &payload))?;
    }
    file.close()?;
    Ok((timing, path))
}

/// Name of the relocated copy: `_read` inserted before the extension.
pub fn read_name(written: &Path) -> Option<String> {
    let stem = written.file_stem()?.to_str()?;
    Some(match written.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_read.{ext}"),
        None => format!("{stem}_read"),
    })
}

/// Copies a closed store into `read_dir` under a new name, recursing into
/// directory stores. The original is left in place.
pub fn relocate_for_read(written: &Path, read_dir: &Path) -> io::Result<PathBuf> {
    let name = read_name(written).ok_or_else(|| {
        io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("{} has no usable file name", written.display()),
        )
    })?;
    let target = read_dir.join(name);
    let meta = fs::metadata(written)?;
    if fs::symlink_metadata(&target).is_ok() {
        return Err(io::Error::new(
            io::ErrorKind::AlreadyExists,
            format!("{} already exists", target.display()),
        ));
    }
    if meta.is_dir() {
        copy_tree(written, &target)?;
    } else {
        fs::copy(written, &target)?;
    }
    Ok(target)
}

fn copy_tree(from: &Path, to: &Path) -> io::Result<()> {
    fs::create_dir(to)?;
    for entry in fs::read_dir(from)? {
        let entry = entry?;
        let dest = to.join(entry.file_name());
        if entry.file_type()?.is_dir() {
            copy_tree(&entry.path(), &dest)?;
        } else {
            fs::copy(entry.path(), &dest)?;
        }
    }
    Ok(())
}

fn emit(sink: ReadSink, out: &mut dyn Write, name: &str, payload: &ArrayPayload) -> io::Result<()> {
    match sink {
        ReadSink::Discard => {
            black_box(payload.data());
            Ok(())
        }
        ReadSink::StandardOutput => {
            let mut line = String::with_capacity(payload.len() * 12 + name.len() + 2);
            line.push_str(name);
            line.push(':');
            for v in payload.data() {
                let _ = write!(line, " {v}");
            }
            line.push('\n');
            out.write_all(line.as_bytes())
        }
    }
}

/// Opens every dataset of the store at `read_path` and reads it into the
/// configured sink, timing opens and reads separately.
pub fn run_read_phase(
    adapter: &dyn StorageAdapter,
    read_path: &Path,
    config: &WorkloadConfig,
    trial: usize,
    verify: bool,
    out: &mut dyn Write,
) -> Result<ReadPhaseTiming, EngineError> {
    let mut file = adapter.open_file(read_path)?;
    let mut open = OpTotal::default();
    let mut read = OpTotal::default();
    let mut checksum = Fnv1a::new();
    let mut first_mismatch = None;
    for i in 0..config.dataset_count {
        let name = dataset_name(i);
        let ds = time(&mut open, || file.open_dataset(&name))?;
        let payload = time(&mut read, || -> Result<_, EngineError> {
            let payload = file.read_dataset(&ds)?;
            emit(config.read_sink, out, &name, &payload).map_err(EngineError::Sink)?;
            Ok(payload)
        })?;
        checksum.write(&payload.checksum().to_le_bytes());
        if verify && first_mismatch.is_none() {
            let expected =
                generate_payload(&config.dims, stream_seed(config.seed, trial as u64, i as u64))
                    .map_err(EngineError::Capacity)?;
            if let Some(k) = expected.first_difference(&payload) {
                first_mismatch = Some((name, k));
            }
        }
    }
    let start = Instant::now();
    file.close()?;
    let close_nanos = u64::try_from(start.elapsed().as_nanos()).unwrap_or(u64::MAX);
    if config.read_sink == ReadSink::StandardOutput {
        out.flush().map_err(EngineError::Sink)?;
    }
    Ok(ReadPhaseTiming {
        open,
        read,
        close_nanos,
        dataset_count: config.dataset_count,
        verification: Verification {
            checked: verify,
            first_mismatch,
            checksum: checksum.finish(),
        },
    })
}

/// Everything measured for one (trial, format) cell.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub write: WritePhaseTiming,
    pub read: ReadPhaseTiming,
    pub written_path: PathBuf,
    pub read_path: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub trials: Vec<TrialOutcome>,
    pub failures: Vec<CellFailure>,
    /// Requested formats that were not available.
    pub skipped: Vec<String>,
}

impl RunOutcome {
    pub fn records(&self) -> Vec<TrialRecord> {
        self.trials.iter().map(|t| t.record.clone()).collect()
    }

    pub fn all_verified(&self) -> bool {
        self.trials.iter().all(|t| t.record.verified)
    }
}

type RelocateHook<'a> = dyn Fn(&AdapterInfo, &Path, &Path) -> io::Result<()> + 'a;

pub struct RunOptions<'a> {
    /// Compare every read payload with its regenerated original.
    pub verify: bool,
    /// Called with (adapter, written path, read path) after each relocation
    /// and before the read phase.
    pub after_relocate: Option<Box<RelocateHook<'a>>>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self {
            verify: true,
            after_relocate: None,
        }
    }
}

pub fn run_trials(config: &WorkloadConfig, registry: &Registry) -> Result<RunOutcome, EngineError> {
    run_trials_with(config, registry, &RunOptions::default())
}

pub fn run_trials_with(
    config: &WorkloadConfig,
    registry: &Registry,
    options: &RunOptions<'_>,
) -> Result<RunOutcome, EngineError> {
    let dirs = BenchDirs::under(&config.output_dir);
    let mut outcome = RunOutcome::default();

    let names = registry.names();
    let mut adapters = Vec::new();
    for name in config.resolved_formats(&names) {
        let adapter = registry.get(name)?;
        if adapter.info().available {
            adapters.push(adapter);
        } else {
            warn!("skipping format `{name}`: not available on this system");
            outcome.skipped.push(name.to_string());
        }
    }
    if adapters.is_empty() {
        return Err(EngineError::NoAvailableFormats);
    }

    dirs.remove()
        .map_err(|e| EngineError::io("clearing previous benchmark files", e))?;
    let stdout = io::stdout();
    for trial in 0..config.trials {
        dirs.prepare()
            .map_err(|e| EngineError::io("creating benchmark directories", e))?;
        let mut failed = Vec::new();
        for &adapter in &adapters {
            let info = adapter.info();
            let mut out = stdout.lock();
            match run_cell(adapter, &info, config, trial, &dirs, options, &mut out) {
                Ok(cell) => {
                    if let Some((ds, k)) = &cell.read.verification.first_mismatch {
                        warn!(
                            "trial {trial}, {}: read-back mismatch in {ds} at element {k}",
                            info.name
                        );
                    }
                    outcome.trials.push(cell);
                }
                Err(e) => {
                    warn!("trial {trial}, {}: {e}", info.name);
                    failed.push(CellFailure {
                        trial,
                        format: info.name.to_string(),
                        message: e.to_string(),
                    });
                }
            }
        }
        if !config.keep_files {
            dirs.remove()
                .map_err(|e| EngineError::io("removing benchmark files", e))?;
        }
        if failed.len() == adapters.len() {
            return Err(EngineError::AllFormatsFailed {
                trial,
                failures: failed,
            });
        }
        outcome.failures.extend(failed);
        info!("trial {} of {} done", trial + 1, config.trials);
    }
    Ok(outcome)
}

fn run_cell(
    adapter: &dyn StorageAdapter,
    info: &AdapterInfo,
    config: &WorkloadConfig,
    trial: usize,
    dirs: &BenchDirs,
    options: &RunOptions<'_>,
    out: &mut dyn Write,
) -> Result<TrialOutcome, EngineError> {
    let (write, written_path) = run_write_phase(adapter, config, trial, dirs)?;
    let read_path = relocate_for_read(&written_path, &dirs.files_read)
        .map_err(|e| EngineError::io(format!("relocating {}", written_path.display()), e))?;
    if let Some(hook) = &options.after_relocate {
        hook(info, &written_path, &read_path)
            .map_err(|e| EngineError::io("after-relocate hook", e))?;
    }
    let read = run_read_phase(adapter, &read_path, config, trial, options.verify, out)?;
    let n = config.dataset_count;
    let avg = |t: &OpTotal| nanos_to_seconds(t.average(n).rounded_nanos());
    let record = TrialRecord {
        test_name: config.test_name.clone(),
        trial,
        format: info.name.to_string(),
        dataset_count: n,
        dims: config.dims.clone(),
        create_avg_s: avg(&write.create),
        write_avg_s: avg(&write.write),
        open_avg_s: avg(&read.open),
        read_avg_s: avg(&read.read),
        verified: read.verification.verified(),
    };
    Ok(TrialOutcome {
        record,
        write,
        read,
        written_path,
        read_path,
    })
}
