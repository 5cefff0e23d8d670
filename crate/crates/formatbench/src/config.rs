//! YAML workload files.
//!
//! Keys: `test_name?`, `dataset_count`, `dims`, `trials?`, `formats?`,
//! `seed?`, `output_dir?`, `keep_files?`, `read_sink?`. Unknown keys are
//! rejected.

use formatbench_core::workload::{DEFAULT_OUTPUT_DIR, DEFAULT_SEED, DEFAULT_TRIALS};
use formatbench_core::{auto_test_name, ReadSink, Violation, WorkloadConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}{message}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Syntax { line: Option<usize>, message: String },
    #[error("missing required key{} {}", if .0.len() > 1 { "s" } else { "" }, .0.join(", "))]
    MissingKeys(Vec<&'static str>),
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    test_name: Option<String>,
    dataset_count: Option<i64>,
    dims: Option<Vec<i64>>,
    trials: Option<i64>,
    formats: Option<Vec<String>>,
    seed: Option<u64>,
    output_dir: Option<String>,
    keep_files: Option<bool>,
    read_sink: Option<String>,
}

/// Values used for keys a document leaves out, where they are not fixed.
#[derive(Debug, Clone)]
pub struct ConfigDefaults {
    pub output_dir: String,
}

impl Default for ConfigDefaults {
    fn default() -> Self {
        Self {
            output_dir: DEFAULT_OUTPUT_DIR.to_string(),
        }
    }
}

impl ConfigDefaults {
    /// Reads the default output directory from `FORMATBENCH_OUTPUT_DIR`.
    pub fn from_env() -> Self {
        match std::env::var("FORMATBENCH_OUTPUT_DIR") {
            Ok(dir) if !dir.is_empty() => Self { output_dir: dir },
            _ => Self::default(),
        }
    }
}

pub fn parse_config(document: &str) -> Result<WorkloadConfig, ConfigError> {
    parse_config_with(document, &ConfigDefaults::default())
}

/// Parses and structurally validates a workload document. Format names are
/// not checked here; see [`formatbench_core::validate`].
pub fn parse_config_with(
    document: &str,
    defaults: &ConfigDefaults,
) -> Result<WorkloadConfig, ConfigError> {
    let raw: ConfigFile = if document.trim().is_empty() {
        ConfigFile::default()
    } else {
        serde_yaml::from_str(document).map_err(|e| ConfigError::Syntax {
            line: e.location().map(|l| l.line()),
            message: e.to_string(),
        })?
    };

    let mut missing = Vec::new();
    if raw.dataset_count.is_none() {
        missing.push("dataset_count");
    }
    if raw.dims.is_none() {
        missing.push("dims");
    }
    if !missing.is_empty() {
        return Err(ConfigError::MissingKeys(missing));
    }

    // Negative counts clamp to zero so they report like zero does.
    let count = |v: i64| usize::try_from(v).unwrap_or(0);
    let dataset_count = count(raw.dataset_count.unwrap_or_default());
    let dims: Vec<usize> = raw.dims.unwrap_or_default().into_iter().map(count).collect();

    let mut violations = Vec::new();
    let read_sink = match raw.read_sink.as_deref() {
        None => ReadSink::Discard,
        Some(s) => ReadSink::parse(s).unwrap_or_else(|| {
            violations.push(Violation::new(
                "read_sink",
                format!("`{s}` is not one of discard, standard_output"),
            ));
            ReadSink::Discard
        }),
    };

    let config = WorkloadConfig {
        test_name: raw
            .test_name
            .unwrap_or_else(|| auto_test_name(dataset_count, &dims)),
        dataset_count,
        dims,
        trials: raw.trials.map_or(DEFAULT_TRIALS, count),
        formats: raw.formats.unwrap_or_default(),
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        output_dir: raw.output_dir.unwrap_or_else(|| defaults.output_dir.clone()),
        keep_files: raw.keep_files.unwrap_or(false),
        read_sink,
    };
    if let Err(errs) = config.check() {
        violations.extend(errs);
    }
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Invalid(violations))
    }
}

/// Writes every field explicitly, so the result parses back to `config`
/// regardless of defaults.
pub fn serialize_config(config: &WorkloadConfig) -> String {
    let raw = ConfigFile {
        test_name: Some(config.test_name.clone()),
        dataset_count: Some(config.dataset_count as i64),
        dims: Some(config.dims.iter().map(|&d| d as i64).collect()),
        trials: Some(config.trials as i64),
        formats: Some(config.formats.clone()),
        seed: Some(config.seed),
        output_dir: Some(config.output_dir.clone()),
        keep_files: Some(config.keep_files),
        read_sink: Some(config.read_sink.as_str().to_string()),
    };
    serde_yaml::to_string(&raw).expect("plain struct")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn violation_keys(err: ConfigError) -> Vec<&'static str> {
        match err {
            ConfigError::Invalid(v) => v.into_iter().map(|v| v.key).collect(),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn vector_workload_with_defaults() {
        let c = parse_config("{dataset_count: 2048, dims: [128]}").unwrap();
        assert_eq!(c.dataset_count, 2048);
        assert_eq!(c.dims, vec![128]);
        assert_eq!(c.test_name, "2048-Vector");
        assert_eq!(c.trials, 10);
        assert_eq!(c.seed, 42);
        assert!(c.formats.is_empty());
        assert_eq!(c.output_dir, ".");
        assert!(!c.keep_files);
        assert_eq!(c.read_sink, ReadSink::Discard);
    }

    #[test]
    fn minimal_workload() {
        let c = parse_config("{dataset_count: 1, dims: [1], trials: 1}").unwrap();
        assert_eq!((c.dataset_count, c.dims.as_slice(), c.trials), (1, &[1][..], 1));
    }

    #[test]
    fn zero_count_names_the_key() {
        let err = parse_config("{dataset_count: 0, dims: [128]}").unwrap_err();
        assert_eq!(violation_keys(err), vec!["dataset_count"]);
    }

    #[test]
    fn negative_and_zero_values_accumulate() {
        let err = parse_config("dataset_count: -3\ndims: [4, -1]\ntrials: 0\n").unwrap_err();
        assert_eq!(violation_keys(err), vec!["dataset_count", "dims", "trials"]);
    }

    #[test]
    fn explicit_name_overrides() {
        let c = parse_config("test_name: 4096-Datasets\ndataset_count: 4096\ndims: [256]\n").unwrap();
        assert_eq!(c.test_name, "4096-Datasets");
    }

    #[test]
    fn missing_keys() {
        match parse_config("trials: 3").unwrap_err() {
            ConfigError::MissingKeys(k) => assert_eq!(k, vec!["dataset_count", "dims"]),
            other => panic!("{other}"),
        }
        assert!(matches!(parse_config(""), Err(ConfigError::MissingKeys(_))));
        assert!(matches!(
            parse_config("dims: [2]"),
            Err(ConfigError::MissingKeys(k)) if k == vec!["dataset_count"]
        ));
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let err = parse_config("dataset_count: 4\ndims: [1, 2\ntrials: 1\n").unwrap_err();
        match err {
            ConfigError::Syntax { line, .. } => assert!(line.is_some()),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            parse_config("dataset_count: 1\ndims: [1]\nchunks: 4\n"),
            Err(ConfigError::Syntax { .. })
        ));
    }

    #[test]
    fn sink_values() {
        let c = parse_config("{dataset_count: 1, dims: [1], read_sink: standard_output}").unwrap();
        assert_eq!(c.read_sink, ReadSink::StandardOutput);
        let err = parse_config("{dataset_count: 1, dims: [1], read_sink: printer}").unwrap_err();
        assert_eq!(violation_keys(err), vec!["read_sink"]);
    }

    #[test]
    fn defaults_supply_output_dir() {
        let d = ConfigDefaults { output_dir: "/tmp/x".into() };
        assert_eq!(parse_config_with("{dataset_count: 1, dims: [1]}", &d).unwrap().output_dir, "/tmp/x");
        let c = parse_config_with("{dataset_count: 1, dims: [1], output_dir: out}", &d).unwrap();
        assert_eq!(c.output_dir, "out");
    }

    fn arb_config() -> impl Strategy<Value = WorkloadConfig> {
        (
            1usize..100_000,
            proptest::collection::vec(1usize..512, 1..4),
            1usize..50,
            proptest::sample::subsequence(vec!["nds", "hdf5", "netcdf4", "zarr"], 0..4),
            any::<u64>(),
            "[a-zA-Z0-9 _./-]{1,20}",
            any::<bool>(),
            any::<bool>(),
            proptest::option::of("[A-Za-z0-9_-]{1,16}"),
        )
            .prop_map(|(n, dims, trials, formats, seed, out, keep, stdout, name)| {
                let mut c = WorkloadConfig::new(n, dims);
                if let Some(name) = name {
                    c.test_name = name;
                }
                c.trials = trials;
                c.formats = formats.into_iter().map(String::from).collect();
                c.seed = seed;
                c.output_dir = out;
                c.keep_files = keep;
                if stdout {
                    c.read_sink = ReadSink::StandardOutput;
                }
                c
            })
    }

    proptest! {
        #[test]
        fn serialize_round_trip(c in arb_config()) {
            let text = serialize_config(&c);
            prop_assert_eq!(parse_config(&text).unwrap(), c);
        }
    }
}
