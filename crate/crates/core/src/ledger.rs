//! Append-only run ledger.
//!
//! Format (version 1): UTF-8 JSON lines separated by `\n`. Line one is the
//! [`LedgerHeader`]; every further line is one [`EvaluationRecord`]. A
//! trailing line without its newline is a torn write and is ignored on load
//! and cut off when the ledger is reopened for appending.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::EvaluationRecord;
use crate::evolution::GAParams;
use crate::space::{ConfigId, ConfigSpace};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger I/O")]
    Io(#[from] std::io::Error),
    #[error("ledger has no header line")]
    MissingHeader,
    #[error("ledger header is corrupt: {0}")]
    CorruptHeader(String),
    #[error("unsupported ledger format version {0}")]
    UnsupportedVersion(u32),
    #[error("ledger line {line} is corrupt: {message}")]
    CorruptRecord { line: usize, message: String },
    #[error("configuration {0} is already in the ledger")]
    DuplicateId(ConfigId),
    #[error("ledger space {found} does not match expected space {expected}")]
    SpaceMismatch { expected: String, found: String },
    #[error("ledger {0} already exists")]
    AlreadyExists(PathBuf),
    #[error("ledger was opened read-only")]
    ReadOnly,
}

/// PRNG layout: one ChaCha8 stream per generation phase under the master
/// seed (stream 0 samples the initial population).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngScheme {
    pub algorithm: String,
    pub master_seed: u64,
    pub streams: Vec<u64>,
}

impl RngScheme {
    pub fn for_params(params: &GAParams) -> Self {
        RngScheme {
            algorithm: "chacha8".into(),
            master_seed: params.seed,
            streams: (0..=params.generations as u64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerHeader {
    pub format_version: u32,
    pub space: ConfigSpace,
    pub space_fingerprint: String,
    #[serde(default)]
    pub ga_params: Option<GAParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<RngScheme>,
    pub evaluator: String,
    #[serde(default)]
    pub instances: Vec<String>,
    pub artifact_version: String,
    pub created_at: String,
}

impl LedgerHeader {
    pub fn new(
        space: &ConfigSpace,
        ga_params: Option<&GAParams>,
        evaluator: &str,
        instances: &[String],
        created_at: &str,
    ) -> Self {
        LedgerHeader {
            format_version: FORMAT_VERSION,
            space: space.clone(),
            space_fingerprint: space.fingerprint(),
            ga_params: ga_params.cloned(),
            rng: ga_params.map(RngScheme::for_params),
            evaluator: evaluator.to_string(),
            instances: instances.to_vec(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            created_at: created_at.to_string(),
        }
    }
}

#[derive(Debug)]
pub struct RunLedger {
    path: PathBuf,
    header: LedgerHeader,
    records: Vec<EvaluationRecord>,
    ids: HashSet<ConfigId>,
    ignored_partial_lines: usize,
    file: Option<File>,
}

fn write_line(file: &mut File, value: &impl Serialize) -> Result<(), LedgerError> {
    let mut line = serde_json::to_vec(value).map_err(std::io::Error::other)?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.flush()?;
    file.sync_data()?;
    Ok(())
}

impl RunLedger {
    /// Creates a new ledger file holding only the header. Refuses to
    /// overwrite an existing file.
    pub fn create(path: impl AsRef<Path>, header: LedgerHeader) -> Result<Self, LedgerError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => LedgerError::AlreadyExists(path.clone()),
                _ => LedgerError::Io(e),
            })?;
        write_line(&mut file, &header)?;
        Ok(RunLedger {
            path,
            header,
            records: Vec::new(),
            ids: HashSet::new(),
            ignored_partial_lines: 0,
            file: Some(file),
        })
    }

    /// Loads an existing ledger and reopens it for appending, discarding a
    /// torn trailing line first.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LedgerError> {
        let (mut ledger, complete_len) = Self::read(path.as_ref())?;
        let file = OpenOptions::new().write(true).open(&ledger.path)?;
        file.set_len(complete_len)?;
        let mut file = OpenOptions::new().append(true).open(&ledger.path)?;
        file.flush()?;
        ledger.file = Some(file);
        Ok(ledger)
    }

    fn read(path: &Path) -> Result<(Self, u64), LedgerError> {
        let bytes = std::fs::read(path)?;
        let complete_len = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        let ignored_partial_lines = usize::from(complete_len < bytes.len());
        let text = std::str::from_utf8(&bytes[..complete_len])
            .map_err(|e| LedgerError::CorruptHeader(e.to_string()))?;
        let mut lines = text.lines();
        let header_line = lines.next().ok_or(LedgerError::MissingHeader)?;
        let header: LedgerHeader =
            serde_json::from_str(header_line).map_err(|e| LedgerError::CorruptHeader(e.to_string()))?;
        if header.format_version != FORMAT_VERSION {
            return Err(LedgerError::UnsupportedVersion(header.format_version));
        }
        let mut records = Vec::new();
        let mut ids = HashSet::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: EvaluationRecord = serde_json::from_str(line).map_err(|e| LedgerError::CorruptRecord {
                line: i + 2,
                message: e.to_string(),
            })?;
            if !ids.insert(record.configuration.id.clone()) {
                return Err(LedgerError::CorruptRecord {
                    line: i + 2,
                    message: format!("duplicate configuration {}", record.configuration.id),
                });
            }
            records.push(record);
        }
        Ok((
            RunLedger {
                path: path.to_path_buf(),
                header,
                records,
                ids,
                ignored_partial_lines,
                file: None,
            },
            complete_len as u64,
        ))
    }

    pub fn header(&self) -> &LedgerHeader {
        &self.header
    }

    pub fn records(&self) -> &[EvaluationRecord] {
        &self.records
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn ignored_partial_lines(&self) -> usize {
        self.ignored_partial_lines
    }

    pub fn contains(&self, id: &ConfigId) -> bool {
        self.ids.contains(id)
    }

    pub fn check_space(&self, expected: &ConfigSpace) -> Result<(), LedgerError> {
        let expected = expected.fingerprint();
        if self.header.space_fingerprint != expected {
            return Err(LedgerError::SpaceMismatch {
                expected,
                found: self.header.space_fingerprint.clone(),
            });
        }
        Ok(())
    }

    /// Writes one record as a single line and syncs it to disk.
    pub fn append(&mut self, record: &EvaluationRecord) -> Result<(), LedgerError> {
        let file = self.file.as_mut().ok_or(LedgerError::ReadOnly)?;
        if self.ids.contains(&record.configuration.id) {
            return Err(LedgerError::DuplicateId(record.configuration.id.clone()));
        }
        write_line(file, record)?;
        self.ids.insert(record.configuration.id.clone());
        self.records.push(record.clone());
        Ok(())
    }
}

/// Reads a ledger without opening it for writing.
pub fn load_ledger(path: impl AsRef<Path>) -> Result<RunLedger, LedgerError> {
    RunLedger::read(path.as_ref()).map(|(ledger, _)| ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{ObjectiveVector, Status};
    use crate::space::default_space;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn header() -> LedgerHeader {
        LedgerHeader::new(&default_space(), Some(&GAParams::default()), "synthetic", &["i-1".into()], "t0")
    }

    fn record(seed: u64, status: Status) -> EvaluationRecord {
        let config = default_space().random_config(&mut ChaCha8Rng::seed_from_u64(seed));
        EvaluationRecord {
            configuration: config,
            objectives: ObjectiveVector::new(0.5, 1.25, 900.0 + seed as f64),
            per_instance: Vec::new(),
            generation: seed as usize % 3,
            wall_time: 0.0,
            status,
            failure: (status == Status::Failed).then(|| "boom".to_string()),
            evaluator: "synthetic".into(),
            label: None,
        }
    }

    #[test]
    fn append_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let mut ledger = RunLedger::create(&path, header()).unwrap();
        let a = record(1, Status::Ok);
        let b = record(2, Status::Failed);
        ledger.append(&a).unwrap();
        ledger.append(&b).unwrap();
        let loaded = load_ledger(&path).unwrap();
        assert_eq!(loaded.header(), &header());
        assert_eq!(loaded.records(), &[a.clone(), b]);
        assert_eq!(loaded.records()[1].status, Status::Failed);
        assert!(matches!(ledger.append(&a), Err(LedgerError::DuplicateId(_))));
    }

    #[test]
    fn refuses_to_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        RunLedger::create(&path, header()).unwrap();
        assert!(matches!(RunLedger::create(&path, header()), Err(LedgerError::AlreadyExists(_))));
    }

    #[test]
    fn torn_tail_is_ignored_and_cut() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        let mut ledger = RunLedger::create(&path, header()).unwrap();
        for s in 0..3 {
            ledger.append(&record(s, Status::Ok)).unwrap();
        }
        drop(ledger);
        let text = std::fs::read_to_string(&path).unwrap();
        let cut = text.len() - 20;
        std::fs::write(&path, &text[..cut]).unwrap();
        let loaded = load_ledger(&path).unwrap();
        assert_eq!(loaded.records().len(), 2);
        assert_eq!(loaded.ignored_partial_lines(), 1);

        let mut reopened = RunLedger::open(&path).unwrap();
        reopened.append(&record(2, Status::Ok)).unwrap();
        let again = load_ledger(&path).unwrap();
        assert_eq!(again.records().len(), 3);
        assert_eq!(again.ignored_partial_lines(), 0);
    }

    #[test]
    fn empty_or_corrupt_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(matches!(load_ledger(&path), Err(LedgerError::MissingHeader)));
        std::fs::write(&path, "{not json}\n").unwrap();
        assert!(matches!(load_ledger(&path), Err(LedgerError::CorruptHeader(_))));
    }

    #[test]
    fn space_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        RunLedger::create(&path, header()).unwrap();
        let loaded = load_ledger(&path).unwrap();
        assert!(loaded.check_space(&default_space()).is_ok());
        let other = ConfigSpace::new(default_space().params()[..7].to_vec()).unwrap();
        assert!(matches!(loaded.check_space(&other), Err(LedgerError::SpaceMismatch { .. })));
    }

    #[test]
    fn read_only_ledgers_reject_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.jsonl");
        RunLedger::create(&path, header()).unwrap();
        let mut loaded = load_ledger(&path).unwrap();
        assert!(matches!(loaded.append(&record(1, Status::Ok)), Err(LedgerError::ReadOnly)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn load_is_lossless(seeds in proptest::collection::hash_set(any::<u64>(), 0..12), gains in proptest::collection::vec(0.0f64..50.0, 12)) {
                let dir = tempfile::tempdir().unwrap();
                let path = dir.path().join("run.jsonl");
                let mut ledger = RunLedger::create(&path, header()).unwrap();
                let mut written = Vec::new();
                for (i, s) in seeds.into_iter().enumerate() {
                    let mut r = record(s, if i % 3 == 0 { Status::Failed } else { Status::Ok });
                    r.objectives.perf_gain = gains[i];
                    r.wall_time = gains[i] / 7.0;
                    if ledger.contains(&r.configuration.id) {
                        continue;
                    }
                    ledger.append(&r).unwrap();
                    written.push(r);
                }
                let loaded = load_ledger(&path).unwrap();
                prop_assert_eq!(loaded.records(), written.as_slice());
            }
        }
    }
}
