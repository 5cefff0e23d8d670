//! Native directory store (`nds`), a self-describing layout with one
//! directory per array:
//!
//! ```text
//! <root>.nds/_group.json             {"format":"nds","version":1}
//! <root>.nds/<name>/_array.json      {"shape":[..],"dtype":"f4le","order":"C"}
//! <root>.nds/<name>/data.bin         little-endian float32, row-major
//! ```
//!
//! Metadata is compact JSON with a fixed key order, so writing the same
//! payloads twice produces byte-identical stores.

use std::fs;
use std::io::{self, ErrorKind, Write};
use std::path::{Path, PathBuf};

use formatbench_core::datagen::element_count;
use formatbench_core::ArrayPayload;
use serde::{Deserialize, Serialize};

use crate::adapter::{
    AdapterError, AdapterInfo, DatasetHandle, FileHandle, FormatProblem, Result, StorageAdapter,
    StoreFile, StoreId,
};

pub const GROUP_METADATA: &str = "_group.json";
pub const ARRAY_METADATA: &str = "_array.json";
pub const DATA_FILE: &str = "data.bin";
pub const STORE_FORMAT: &str = "nds";
pub const STORE_VERSION: u64 = 1;
pub const DTYPE: &str = "f4le";
pub const ORDER: &str = "C";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoreMetadata {
    pub format: String,
    pub version: u64,
}

impl StoreMetadata {
    pub fn current() -> Self {
        Self {
            format: STORE_FORMAT.to_string(),
            version: STORE_VERSION,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayMetadataRepr<'a> {
    shape: Vec<u64>,
    #[serde(borrow)]
    dtype: std::borrow::Cow<'a, str>,
    #[serde(borrow)]
    order: std::borrow::Cow<'a, str>,
}

/// Shape of one stored array; dtype and order are fixed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayMetadata {
    pub shape: Vec<usize>,
}

impl ArrayMetadata {
    pub fn data_len(&self) -> u64 {
        self.shape.iter().product::<usize>() as u64 * 4
    }
}

pub fn encode_store_metadata() -> String {
    serde_json::to_string(&StoreMetadata::current()).expect("plain struct")
}

pub fn decode_store_metadata(text: &str) -> Result<StoreMetadata, FormatProblem> {
    let meta: StoreMetadata =
        serde_json::from_str(text).map_err(|e| FormatProblem::Malformed(e.to_string()))?;
    if meta.format != STORE_FORMAT {
        return Err(FormatProblem::WrongStoreKind(meta.format));
    }
    if meta.version != STORE_VERSION {
        return Err(FormatProblem::UnsupportedVersion(meta.version));
    }
    Ok(meta)
}

pub fn encode_array_metadata(shape: &[usize]) -> String {
    let repr = ArrayMetadataRepr {
        shape: shape.iter().map(|&d| d as u64).collect(),
        dtype: DTYPE.into(),
        order: ORDER.into(),
    };
    serde_json::to_string(&repr).expect("plain struct")
}

/// Strict decode: all three keys required, nothing else allowed.
pub fn decode_array_metadata(text: &str) -> Result<ArrayMetadata, FormatProblem> {
    let repr: ArrayMetadataRepr<'_> =
        serde_json::from_str(text).map_err(|e| FormatProblem::Malformed(e.to_string()))?;
    if repr.dtype != DTYPE {
        return Err(FormatProblem::UnsupportedDtype(repr.dtype.into_owned()));
    }
    if repr.order != ORDER {
        return Err(FormatProblem::UnsupportedOrder(repr.order.into_owned()));
    }
    if repr.shape.is_empty() {
        return Err(FormatProblem::EmptyShape);
    }
    if repr.shape.contains(&0) {
        return Err(FormatProblem::NonPositiveShape);
    }
    let shape = repr
        .shape
        .iter()
        .map(|&d| usize::try_from(d))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| FormatProblem::ShapeTooLarge)?;
    if element_count(&shape).is_none() {
        return Err(FormatProblem::ShapeTooLarge);
    }
    Ok(ArrayMetadata { shape })
}

pub fn encode_data(data: &[f32]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

pub fn decode_data(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

/// The built-in `nds` adapter.
#[derive(Debug, Clone, Copy, Default)]
pub struct NativeStore;

impl StorageAdapter for NativeStore {
    fn info(&self) -> AdapterInfo {
        AdapterInfo {
            name: STORE_FORMAT,
            file_extension: STORE_FORMAT,
            available: true,
        }
    }

    fn create_file(&self, path: &Path) -> Result<FileHandle> {
        fs::create_dir(path).map_err(|e| match e.kind() {
            ErrorKind::AlreadyExists => AdapterError::AlreadyExists {
                path: path.to_path_buf(),
            },
            _ => AdapterError::io(path, e),
        })?;
        let meta_path = path.join(GROUP_METADATA);
        fs::write(&meta_path, encode_store_metadata())
            .map_err(|e| AdapterError::io(&meta_path, e))?;
        Ok(Box::new(NdsFile::new(path, true)))
    }

    fn open_file(&self, path: &Path) -> Result<FileHandle> {
        let meta = fs::metadata(path).map_err(|e| not_found_or_io(e, path, "store"))?;
        if !meta.is_dir() {
            return Err(AdapterError::format(path, FormatProblem::NotADirectory));
        }
        let meta_path = path.join(GROUP_METADATA);
        let text = fs::read_to_string(&meta_path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => {
                AdapterError::format(path, FormatProblem::MissingMetadata(GROUP_METADATA))
            }
            ErrorKind::InvalidData => AdapterError::format(
                &meta_path,
                FormatProblem::Malformed("not valid UTF-8".into()),
            ),
            _ => AdapterError::io(&meta_path, e),
        })?;
        decode_store_metadata(&text).map_err(|p| AdapterError::format(&meta_path, p))?;
        Ok(Box::new(NdsFile::new(path, false)))
    }
}

fn not_found_or_io(e: io::Error, path: &Path, what: &str) -> AdapterError {
    if e.kind() == ErrorKind::NotFound {
        AdapterError::NotFound {
            what: format!("{what} {}", path.display()),
        }
    } else {
        AdapterError::io(path, e)
    }
}

fn valid_dataset_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && !name.starts_with('_')
        && !name.contains(['/', '\\', '\0'])
}

struct NdsFile {
    id: StoreId,
    root: PathBuf,
    writable: bool,
    open: bool,
}

impl NdsFile {
    fn new(root: &Path, writable: bool) -> Self {
        Self {
            id: StoreId::fresh(),
            root: root.to_path_buf(),
            writable,
            open: true,
        }
    }

    fn ensure_open(&self) -> Result<()> {
        if self.open {
            Ok(())
        } else {
            Err(AdapterError::Usage("store is closed"))
        }
    }

    fn check_handle(&self, ds: &DatasetHandle) -> Result<()> {
        if ds.owner() != self.id {
            return Err(AdapterError::Usage(
                "dataset handle belongs to a different store",
            ));
        }
        if !self.open {
            return Err(AdapterError::Usage(
                "dataset handle used after its store was closed",
            ));
        }
        Ok(())
    }

    fn dataset_dir(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn data_len(&self, data_path: &Path) -> Result<u64> {
        match fs::metadata(data_path) {
            Ok(m) => Ok(m.len()),
            Err(e) if e.kind() == ErrorKind::NotFound => {
                Err(AdapterError::format(data_path, FormatProblem::MissingData))
            }
            Err(e) => Err(AdapterError::io(data_path, e)),
        }
    }
}

impl StoreFile for NdsFile {
    fn path(&self) -> &Path {
        &self.root
    }

    fn create_dataset(&mut self, name: &str, dims: &[usize]) -> Result<DatasetHandle> {
        self.ensure_open()?;
        if !self.writable {
            return Err(AdapterError::ReadOnly);
        }
        if !valid_dataset_name(name) {
            return Err(AdapterError::InvalidName { name: name.into() });
        }
        if dims.is_empty() || dims.contains(&0) || element_count(dims).is_none() {
            return Err(AdapterError::InvalidShape { dims: dims.to_vec() });
        }
        let dir = self.dataset_dir(name);
        fs::create_dir(&dir).map_err(|e| match e.kind() {
            ErrorKind::AlreadyExists => AdapterError::DuplicateDataset { name: name.into() },
            _ => AdapterError::io(&dir, e),
        })?;
        let meta_path = dir.join(ARRAY_METADATA);
        fs::write(&meta_path, encode_array_metadata(dims))
            .map_err(|e| AdapterError::io(&meta_path, e))?;
        Ok(DatasetHandle::new(name, dims.to_vec(), self.id))
    }

    fn write_dataset(&mut self, ds: &DatasetHandle, payload: &ArrayPayload) -> Result<()> {
        self.check_handle(ds)?;
        if !self.writable {
            return Err(AdapterError::ReadOnly);
        }
        if payload.dims() != ds.dims() {
            return Err(AdapterError::ShapeMismatch {
                expected: ds.dims().to_vec(),
                actual: payload.dims().to_vec(),
            });
        }
        let data_path = self.dataset_dir(ds.name()).join(DATA_FILE);
        let mut file = fs::File::create(&data_path).map_err(|e| AdapterError::io(&data_path, e))?;
        file.write_all(&encode_data(payload.data()))
            .map_err(|e| AdapterError::io(&data_path, e))
    }

    fn open_dataset(&mut self, name: &str) -> Result<DatasetHandle> {
        self.ensure_open()?;
        let not_found = || AdapterError::NotFound {
            what: format!("dataset `{name}` in {}", self.root.display()),
        };
        if !valid_dataset_name(name) {
            return Err(not_found());
        }
        let dir = self.dataset_dir(name);
        if !dir.is_dir() {
            return Err(not_found());
        }
        let meta_path = dir.join(ARRAY_METADATA);
        let text = fs::read_to_string(&meta_path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => {
                AdapterError::format(&dir, FormatProblem::MissingMetadata(ARRAY_METADATA))
            }
            ErrorKind::InvalidData => AdapterError::format(
                &meta_path,
                FormatProblem::Malformed("not valid UTF-8".into()),
            ),
            _ => AdapterError::io(&meta_path, e),
        })?;
        let meta = decode_array_metadata(&text).map_err(|p| AdapterError::format(&meta_path, p))?;
        let data_path = dir.join(DATA_FILE);
        let actual = self.data_len(&data_path)?;
        let expected = meta.data_len();
        if actual != expected {
            return Err(AdapterError::format(
                &data_path,
                FormatProblem::LengthMismatch { expected, actual },
            ));
        }
        Ok(DatasetHandle::new(name, meta.shape, self.id))
    }

    fn read_dataset(&mut self, ds: &DatasetHandle) -> Result<ArrayPayload> {
        self.check_handle(ds)?;
        let data_path = self.dataset_dir(ds.name()).join(DATA_FILE);
        let bytes = fs::read(&data_path).map_err(|e| match e.kind() {
            ErrorKind::NotFound => AdapterError::format(&data_path, FormatProblem::MissingData),
            _ => AdapterError::io(&data_path, e),
        })?;
        let expected = ds.dims().iter().product::<usize>() as u64 * 4;
        if bytes.len() as u64 != expected {
            return Err(AdapterError::format(
                &data_path,
                FormatProblem::LengthMismatch {
                    expected,
                    actual: bytes.len() as u64,
                },
            ));
        }
        Ok(ArrayPayload::new(ds.dims().to_vec(), decode_data(&bytes))
            .expect("length checked against shape"))
    }

    fn close(&mut self) -> Result<()> {
        if !self.open {
            return Err(AdapterError::Usage("store already closed"));
        }
        self.open = false;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use formatbench_core::{generate_payload, stream_seed};

    fn payload(dims: &[usize], i: u64) -> ArrayPayload {
        generate_payload(dims, stream_seed(42, 0, i)).unwrap()
    }

    #[test]
    fn metadata_goldens() {
        assert_eq!(encode_store_metadata(), r#"{"format":"nds","version":1}"#);
        assert_eq!(
            encode_array_metadata(&[128]),
            r#"{"shape":[128],"dtype":"f4le","order":"C"}"#
        );
        assert_eq!(
            decode_array_metadata(r#"{"shape":[128],"dtype":"f4le","order":"C"}"#),
            Ok(ArrayMetadata { shape: vec![128] })
        );
    }

    #[test]
    fn strict_array_metadata() {
        let cases = [
            (r#"{"shape":[128],"dtype":"f8le","order":"C"}"#, FormatProblem::UnsupportedDtype("f8le".into())),
            (r#"{"shape":[128],"dtype":"f4le","order":"F"}"#, FormatProblem::UnsupportedOrder("F".into())),
            (r#"{"shape":[],"dtype":"f4le","order":"C"}"#, FormatProblem::EmptyShape),
            (r#"{"shape":[4,0],"dtype":"f4le","order":"C"}"#, FormatProblem::NonPositiveShape),
        ];
        for (text, want) in cases {
            assert_eq!(decode_array_metadata(text), Err(want), "{text}");
        }
        for text in [
            r#"{"shape":[128],"dtype":"f4le"}"#,
            r#"{"shape":[-1],"dtype":"f4le","order":"C"}"#,
            r#"{"shape":[128],"dtype":"f4le","order":"C","fill":0}"#,
            r#"{"shape":[128],"shape":[128],"dtype":"f4le","order":"C"}"#,
            "",
        ] {
            assert!(
                matches!(decode_array_metadata(text), Err(FormatProblem::Malformed(_))),
                "{text}"
            );
        }
        assert_eq!(
            decode_array_metadata(r#"{"shape":[18446744073709551615,2],"dtype":"f4le","order":"C"}"#),
            Err(FormatProblem::ShapeTooLarge)
        );
    }

    #[test]
    fn store_metadata_rejects_other_kinds() {
        assert_eq!(
            decode_store_metadata(r#"{"format":"zarr","version":1}"#),
            Err(FormatProblem::WrongStoreKind("zarr".into()))
        );
        assert_eq!(
            decode_store_metadata(r#"{"format":"nds","version":2}"#),
            Err(FormatProblem::UnsupportedVersion(2))
        );
    }

    #[test]
    fn layout_on_disk() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("run.nds");
        let mut f = NativeStore.create_file(&root).unwrap();
        let ds = f.create_dataset("dataset_00000", &[128]).unwrap();
        f.write_dataset(&ds, &payload(&[128], 0)).unwrap();
        f.close().unwrap();
        assert_eq!(
            fs::read_to_string(root.join(GROUP_METADATA)).unwrap(),
            r#"{"format":"nds","version":1}"#
        );
        let data = root.join("dataset_00000").join(DATA_FILE);
        assert_eq!(fs::metadata(data).unwrap().len(), 512);
    }

    #[test]
    fn row_major_offsets() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("m.nds");
        let mut f = NativeStore.create_file(&root).unwrap();
        let ds = f.create_dataset("m", &[2, 3]).unwrap();
        let values: Vec<f32> = (0..6).map(|k| k as f32).collect();
        f.write_dataset(&ds, &ArrayPayload::new(vec![2, 3], values).unwrap())
            .unwrap();
        f.close().unwrap();
        let bytes = fs::read(root.join("m").join(DATA_FILE)).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                let off = 4 * (3 * i + j);
                let v = f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
                assert_eq!(v, (3 * i + j) as f32);
            }
        }
    }

    #[test]
    fn empty_store_has_only_group_metadata() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("e.nds");
        NativeStore.create_file(&root).unwrap().close().unwrap();
        let names: Vec<_> = fs::read_dir(&root)
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, vec![GROUP_METADATA]);
    }

    #[test]
    fn truncated_data_is_a_length_error() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("t.nds");
        let mut f = NativeStore.create_file(&root).unwrap();
        let ds = f.create_dataset("d", &[128]).unwrap();
        f.write_dataset(&ds, &payload(&[128], 0)).unwrap();
        f.close().unwrap();
        let data = root.join("d").join(DATA_FILE);
        let bytes = fs::read(&data).unwrap();
        fs::write(&data, &bytes[..511]).unwrap();
        let mut f = NativeStore.open_file(&root).unwrap();
        match f.open_dataset("d").unwrap_err() {
            AdapterError::Format { path, problem } => {
                assert_eq!(path, data);
                assert_eq!(problem, FormatProblem::LengthMismatch { expected: 512, actual: 511 });
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unwritten_dataset_has_no_data() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("u.nds");
        let mut f = NativeStore.create_file(&root).unwrap();
        f.create_dataset("d", &[4]).unwrap();
        f.close().unwrap();
        let mut f = NativeStore.open_file(&root).unwrap();
        let err = f.open_dataset("d").unwrap_err();
        assert!(matches!(
            err,
            AdapterError::Format { problem: FormatProblem::MissingData, .. }
        ));
    }

    #[test]
    fn identical_payloads_identical_bytes() {
        let tmp = tempfile::tempdir().unwrap();
        let write = |name: &str| {
            let root = tmp.path().join(name);
            let mut f = NativeStore.create_file(&root).unwrap();
            for i in 0..3 {
                let ds = f.create_dataset(&format!("dataset_{i:05}"), &[4, 4]).unwrap();
                f.write_dataset(&ds, &payload(&[4, 4], i)).unwrap();
            }
            f.close().unwrap();
            root
        };
        let (a, b) = (write("a.nds"), write("b.nds"));
        for rel in [
            "_group.json".to_string(),
            "dataset_00001/_array.json".into(),
            "dataset_00002/data.bin".into(),
        ] {
            assert_eq!(fs::read(a.join(&rel)).unwrap(), fs::read(b.join(&rel)).unwrap());
        }
    }

    #[test]
    fn reserved_and_path_like_names() {
        let tmp = tempfile::tempdir().unwrap();
        let mut f = NativeStore.create_file(&tmp.path().join("n.nds")).unwrap();
        for bad in ["", "..", "a/b", "_group.json"] {
            assert!(matches!(
                f.create_dataset(bad, &[1]),
                Err(AdapterError::InvalidName { .. })
            ));
        }
        assert!(matches!(
            f.create_dataset("ok", &[]),
            Err(AdapterError::InvalidShape { .. })
        ));
    }
}
