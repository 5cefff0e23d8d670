//! The storage-format contract timed by the engine, and the adapter registry.
//!
//! Every format is driven through the same sequence:
//! `create_file → (create_dataset, write_dataset)* → close` for the write
//! phase and `open_file → (open_dataset, read_dataset)* → close` for the
//! read phase. Element type is always 32-bit float.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use formatbench_core::ArrayPayload;
use thiserror::Error;

/// Why a store's on-disk contents could not be interpreted.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatProblem {
    #[error("missing metadata file `{0}`")]
    MissingMetadata(&'static str),
    #[error("malformed metadata: {0}")]
    Malformed(String),
    #[error("store kind `{0}` is not supported")]
    WrongStoreKind(String),
    #[error("store version {0} is not supported")]
    UnsupportedVersion(u64),
    #[error("unsupported dtype `{0}`")]
    UnsupportedDtype(String),
    #[error("unsupported element order `{0}`")]
    UnsupportedOrder(String),
    #[error("shape must list at least one dimension")]
    EmptyShape,
    #[error("shape entries must be positive")]
    NonPositiveShape,
    #[error("shape exceeds addressable size")]
    ShapeTooLarge,
    #[error("dataset has no data")]
    MissingData,
    #[error("data length mismatch: expected {expected} bytes, found {actual}")]
    LengthMismatch { expected: u64, actual: u64 },
    #[error("not a directory")]
    NotADirectory,
}

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("{}: already exists", .path.display())]
    AlreadyExists { path: PathBuf },
    #[error("{what} not found")]
    NotFound { what: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {problem}", .path.display())]
    Format { path: PathBuf, problem: FormatProblem },
    #[error("dataset `{name}` already exists")]
    DuplicateDataset { name: String },
    #[error("invalid dataset name `{name}`")]
    InvalidName { name: String },
    #[error("invalid dataset shape {dims:?}")]
    InvalidShape { dims: Vec<usize> },
    #[error("shape mismatch: dataset is {expected:?}, payload is {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("store is open read-only")]
    ReadOnly,
    #[error("{0}")]
    Usage(&'static str),
    #[error("format `{name}` is not available on this system")]
    Unavailable { name: String },
    #[error("adapter `{name}` is already registered")]
    DuplicateAdapter { name: String },
}

impl AdapterError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AdapterError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, problem: FormatProblem) -> Self {
        AdapterError::Format {
            path: path.into(),
            problem,
        }
    }

    pub fn is_format_error(&self) -> bool {
        matches!(self, AdapterError::Format { .. })
    }

    pub fn is_not_found(&self) -> bool {
        matches!(self, AdapterError::NotFound { .. })
    }

    pub fn is_usage_error(&self) -> bool {
        matches!(self, AdapterError::Usage(_))
    }
}

pub type Result<T, E = AdapterError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdapterInfo {
    /// Short lowercase identifier, unique within a registry.
    pub name: &'static str,
    /// Extension without the leading dot.
    pub file_extension: &'static str,
    pub available: bool,
}

impl fmt::Display for AdapterInfo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let state = if self.available {
            "available"
        } else {
            "unavailable"
        };
        write!(f, "{} {} .{}", self.name, state, self.file_extension)
    }
}

/// Identity of one open store instance. Dataset handles remember the
/// instance that issued them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StoreId(u64);

impl StoreId {
    pub fn fresh() -> Self {
        static NEXT: AtomicU64 = AtomicU64::new(1);
        StoreId(NEXT.fetch_add(1, Ordering::Relaxed))
    }
}

/// A dataset inside an open store. Only valid while that store stays open.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHandle {
    name: String,
    dims: Vec<usize>,
    owner: StoreId,
}

impl DatasetHandle {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, owner: StoreId) -> Self {
        Self {
            name: name.into(),
            dims,
            owner,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn owner(&self) -> StoreId {
        self.owner
    }
}

/// An open file or store of one format.
pub trait StoreFile {
    fn path(&self) -> &Path;

    fn create_dataset(&mut self, name: &str, dims: &[usize]) -> Result<DatasetHandle>;

    fn write_dataset(&mut self, dataset: &DatasetHandle, payload: &ArrayPayload) -> Result<()>;

    fn open_dataset(&mut self, name: &str) -> Result<DatasetHandle>;

    fn read_dataset(&mut self, dataset: &DatasetHandle) -> Result<ArrayPayload>;

    /// Flushes pending data and invalidates every handle issued by this
    /// store. A second call is a usage error.
    fn close(&mut self) -> Result<()>;
}

pub type FileHandle = Box<dyn StoreFile>;

/// One storage format.
pub trait StorageAdapter {
    fn info(&self) -> AdapterInfo;

    /// Creates an empty store at `path`, open for writing.
    fn create_file(&self, path: &Path) -> Result<FileHandle>;

    /// Opens an existing store read-only.
    fn open_file(&self, path: &Path) -> Result<FileHandle>;
}

/// Placeholder for a format whose backing library is not built into this
/// binary. It is listed so that configs naming it validate, and the engine
/// skips it with a notice.
#[derive(Debug, Clone)]
pub struct UnavailableAdapter {
    name: &'static str,
    file_extension: &'static str,
}

impl UnavailableAdapter {
    pub const fn new(name: &'static str, file_extension: &'static str) -> Self {
        Self {
            name,
            file_extension,
        }
    }
}

impl StorageAdapter for UnavailableAdapter {
    fn info(&self) -> AdapterInfo {
        AdapterInfo {
            name: self.name,
            file_extension: self.file_extension,
            available: false,
        }
    }

    fn create_file(&self, _path: &Path) -> Result<FileHandle> {
        Err(AdapterError::Unavailable {
            name: self.name.to_string(),
        })
    }

    fn open_file(&self, _path: &Path) -> Result<FileHandle> {
        Err(AdapterError::Unavailable {
            name: self.name.to_string(),
        })
    }
}

/// Named set of adapters, in registration order.
#[derive(Default)]
pub struct Registry {
    adapters: Vec<(AdapterInfo, Box<dyn StorageAdapter>)>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.adapters.iter().map(|(info, _)| info))
            .finish()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The native store plus entries for the externally backed formats.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(crate::nds::NativeStore))
            .expect("empty registry");
        for (name, ext) in [("hdf5", "hdf5"), ("netcdf4", "netc"), ("zarr", "zarr")] {
            r.register(Box::new(UnavailableAdapter::new(name, ext)))
                .expect("builtin names are unique");
        }
        r
    }

    /// Adds an adapter. Its availability is read once, here.
    pub fn register(&mut self, adapter: Box<dyn StorageAdapter>) -> Result<()> {
        let info = adapter.info();
        if self.adapters.iter().any(|(i, _)| i.name == info.name) {
            return Err(AdapterError::DuplicateAdapter {
                name: info.name.to_string(),
            });
        }
        self.adapters.push((info, adapter));
        Ok(())
    }

    /// Replaces the adapter registered under the same name, or adds it.
    pub fn replace(&mut self, adapter: Box<dyn StorageAdapter>) {
        let info = adapter.info();
        match self.adapters.iter_mut().find(|(i, _)| i.name == info.name) {
            Some(slot) => *slot = (info, adapter),
            None => self.adapters.push((info, adapter)),
        }
    }

    pub fn list(&self) -> Vec<AdapterInfo> {
        self.adapters.iter().map(|(i, _)| i.clone()).collect()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.adapters.iter().map(|(i, _)| i.name).collect()
    }

    pub fn info(&self, name: &str) -> Option<&AdapterInfo> {
        self.adapters.iter().find(|(i, _)| i.name == name).map(|(i, _)| i)
    }

    pub fn get(&self, name: &str) -> Result<&dyn StorageAdapter> {
        self.adapters
            .iter()
            .find(|(i, _)| i.name == name)
            .map(|(_, a)| a.as_ref())
            .ok_or_else(|| AdapterError::NotFound {
                what: format!("format `{name}`"),
            })
    }
}
