//! On-disk store with three partitions: SREP holds source data by section,
//! CREP the pipeline outputs awaiting distribution, DREP the distributed
//! copies together with their metadata.
//!
//! ```text
//! <root>/
//!   index.json            {"repo-format": 1, "entries": [...]}
//!   node.json             node descriptor
//!   srep/<section>/<local_id>.v<version>.<suffix>
//!   crep/<kind>/<local_id>.v<version>.<suffix>
//!   drep/<kind>/<local_id>.v<version>.<suffix>
//!   drep/<kind>/<local_id>.v<version>.meta.json
//! ```
//!
//! Every file is written to a temporary sibling and renamed into place, so
//! readers never see partial content. Mutations hold an exclusive lock on
//! `<root>/.lock` and re-read the index first.

use std::fmt;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, SubsecRound, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::formats::{canonical_bytes, serialize_metadata, sha256_hex, FormatError};
use crate::model::{
    ContentKind, Context, Dataset, DatasetRef, MetadataRecord, NodeDescriptor, ValidationError,
};

pub const REPO_FORMAT: u32 = 1;
pub const ROOT_ENV: &str = "LIVEDATA_ROOT";

#[derive(Debug, thiserror::Error)]
pub enum RepoError {
    #[error("no repository at {0} (run `init` first)")]
    NotInitialized(PathBuf),
    #[error("a repository already exists at {0}")]
    AlreadyInitialized(PathBuf),
    #[error("unsupported repository format {0}")]
    UnsupportedFormat(u32),
    #[error("{dataset} is not in {partition}")]
    NotFound { dataset: DatasetRef, partition: Partition },
    #[error("{dataset} is already stored in {partition}; versions are immutable")]
    VersionConflict { dataset: DatasetRef, partition: Partition },
    #[error("{kind} content does not belong in SREP section {section}")]
    SectionMismatch { kind: ContentKind, section: SrepSection },
    #[error("hash mismatch for {dataset}: expected {expected}, got {actual}")]
    HashMismatch {
        dataset: DatasetRef,
        expected: String,
        actual: String,
    },
    #[error("stored bytes of {dataset} in {partition} are corrupt ({path})")]
    Corruption {
        dataset: DatasetRef,
        partition: Partition,
        path: PathBuf,
    },
    #[error("metadata does not describe {0}")]
    MetadataMismatch(DatasetRef),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RepoError + '_ {
    move |source| RepoError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Srep,
    Crep,
    Drep,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Srep => "srep",
            Partition::Crep => "crep",
            Partition::Drep => "drep",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_str().to_uppercase())
    }
}

impl FromStr for Partition {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "srep" => Ok(Partition::Srep),
            "crep" => Ok(Partition::Crep),
            "drep" => Ok(Partition::Drep),
            _ => Err(ValidationError::new("partition", format!("unknown partition `{s}`"))),
        }
    }
}

/// Sub-sections of the source partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SrepSection {
    LowQuality,
    ExternalLanguage,
    ExternalReference,
}

impl SrepSection {
    pub const ALL: [SrepSection; 3] = [
        SrepSection::LowQuality,
        SrepSection::ExternalLanguage,
        SrepSection::ExternalReference,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SrepSection::LowQuality => "low_quality",
            SrepSection::ExternalLanguage => "external_language",
            SrepSection::ExternalReference => "external_reference",
        }
    }

    /// Whether content of `kind` may be stored in this section. Besides the
    /// three source kinds, datasets fetched from peers land here: language
    /// datasets in `external_language`, knowledge datasets in
    /// `external_reference`, anything else in `low_quality`.
    pub fn accepts(self, kind: ContentKind) -> bool {
        self == Self::for_fetched(kind)
    }

    pub fn for_fetched(kind: ContentKind) -> SrepSection {
        use ContentKind::*;
        match kind {
            Language | ExternalLanguage => SrepSection::ExternalLanguage,
            Knowledge | ExternalReference => SrepSection::ExternalReference,
            LowQuality | Standardised | Graph => SrepSection::LowQuality,
        }
    }
}

impl fmt::Display for SrepSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SrepSection {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| ValidationError::new("srep-section", format!("unknown SREP section `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepositoryEntry {
    #[serde(rename = "ref")]
    pub dataset: DatasetRef,
    pub partition: Partition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srep_section: Option<SrepSection>,
    #[serde(with = "crate::model::rfc3339_seconds")]
    pub stored_at: DateTime<Utc>,
    pub content_hash: String,
    /// Path of the content file relative to the repository root.
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derived_from: Vec<DatasetRef>,
    /// DREP only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<MetadataRecord>,
    /// Non-fatal findings recorded at promotion.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RepositoryEntry {
    fn same_slot(&self, partition: Partition, dataset: &DatasetRef) -> bool {
        self.partition == partition && self.dataset.same_version(dataset)
    }

    /// Path of the metadata file next to a DREP content file.
    pub fn metadata_file(&self) -> Option<String> {
        (self.partition == Partition::Drep).then(|| {
            let dir = self.file.rsplit_once('/').map_or("", |(d, _)| d);
            format!("{dir}/{}.meta.json", self.dataset.file_stem())
        })
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Index {
    #[serde(rename = "repo-format")]
    format: u32,
    entries: Vec<RepositoryEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ListFilter {
    pub kind: Option<ContentKind>,
    pub section: Option<SrepSection>,
    /// DREP entries whose metadata carries this category.
    pub category: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntegrityIssue {
    #[serde(rename = "ref")]
    pub dataset: DatasetRef,
    pub partition: Partition,
    pub problem: String,
}

impl fmt::Display for IntegrityIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.partition, self.dataset, self.problem)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IntegrityReport {
    pub issues: Vec<IntegrityIssue>,
}

impl IntegrityReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Identity transform applied to bytes at promotion. It exists as a slot for
/// data protection policies; none is implemented.
pub type Anonymizer = fn(&DatasetRef, Vec<u8>) -> Vec<u8>;

fn no_anonymization(_: &DatasetRef, bytes: Vec<u8>) -> Vec<u8> {
    bytes
}

pub struct Repository {
    root: PathBuf,
    node: NodeDescriptor,
    anonymizer: Anonymizer,
}

impl fmt::Debug for Repository {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Repository").field("root", &self.root).finish_non_exhaustive()
    }
}

/// Writes `bytes` to a temporary file in the target directory, then renames
/// it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RepoError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io(dir))?;
    tmp.write_all(bytes).map_err(io(path))?;
    tmp.as_file().sync_all().map_err(io(path))?;
    tmp.persist(path).map_err(|e| RepoError::Io {
        path: path.to_owned(),
        source: e.error,
    })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RepoError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| RepoError::Json {
        path: path.to_owned(),
        source,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, RepoError> {
    let bytes = fs::read(path).map_err(io(path))?;
    serde_json::from_slice(&bytes).map_err(|source| RepoError::Json {
        path: path.to_owned(),
        source,
    })
}

/// Opens `path` and takes an exclusive advisory lock on it, released when
/// the returned handle is dropped.
pub fn lock_file(path: &Path) -> Result<File, RepoError> {
    let file = File::options()
        .create(true)
        .truncate(false)
        .write(true)
        .open(path)
        .map_err(io(path))?;
    file.lock().map_err(io(path))?;
    Ok(file)
}

fn now() -> DateTime<Utc> {
    Utc::now().trunc_subsecs(0)
}

impl Repository {
    /// Creates the directory layout, the index and `node.json`.
    pub fn init(root: impl Into<PathBuf>, node: NodeDescriptor) -> Result<Repository, RepoError> {
        let root = root.into();
        node.validate().into_result()?;
        if root.join("index.json").exists() {
            return Err(RepoError::AlreadyInitialized(root));
        }
        for s in SrepSection::ALL {
            let dir = root.join("srep").join(s.as_str());
            fs::create_dir_all(&dir).map_err(io(&dir))?;
        }
        for p in ["crep", "drep"] {
            for k in ContentKind::CORE {
                let dir = root.join(p).join(k.as_str());
                fs::create_dir_all(&dir).map_err(io(&dir))?;
            }
        }
        write_json(&root.join("node.json"), &node)?;
        write_json(
            &root.join("index.json"),
            &Index {
                format: REPO_FORMAT,
                entries: Vec::new(),
            },
        )?;
        Ok(Repository {
            root,
            node,
            anonymizer: no_anonymization,
        })
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Repository, RepoError> {
        let root = root.into();
        if !root.join("index.json").is_file() {
            return Err(RepoError::NotInitialized(root));
        }
        let node: NodeDescriptor = read_json(&root.join("node.json"))?;
        node.validate().into_result()?;
        let repo = Repository {
            root,
            node,
            anonymizer: no_anonymization,
        };
        repo.index()?;
        Ok(repo)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn node(&self) -> &NodeDescriptor {
        &self.node
    }

    pub fn set_anonymizer(&mut self, anonymizer: Anonymizer) {
        self.anonymizer = anonymizer;
    }

    fn index(&self) -> Result<Index, RepoError> {
        let index: Index = read_json(&self.root.join("index.json"))?;
        if index.format != REPO_FORMAT {
            return Err(RepoError::UnsupportedFormat(index.format));
        }
        Ok(index)
    }

    /// Runs `f` on the freshly read index under the writer lock and saves
    /// the index when `f` succeeds.
    fn mutate<T>(&self, f: impl FnOnce(&mut Index) -> Result<T, RepoError>) -> Result<T, RepoError> {
        let _lock = lock_file(&self.root.join(".lock"))?;
        let mut index = self.index()?;
        let out = f(&mut index)?;
        write_json(&self.root.join("index.json"), &index)?;
        Ok(out)
    }

    fn file_for(&self, partition: Partition, folder: &str, dataset: &DatasetRef) -> String {
        // Datasets from other nodes may share a local id with ours.
        let node = if dataset.node_id == self.node.node_id {
            String::new()
        } else {
            format!("{}.", dataset.node_id)
        };
        format!(
            "{}/{folder}/{node}{}.{}",
            partition.as_str(),
            dataset.file_stem(),
            dataset.kind.file_suffix()
        )
    }

    fn conflict(index: &Index, partition: Partition, dataset: &DatasetRef) -> Result<(), RepoError> {
        if index.entries.iter().any(|e| e.same_slot(partition, dataset)) {
            return Err(RepoError::VersionConflict {
                dataset: dataset.clone(),
                partition,
            });
        }
        Ok(())
    }

    /// Stores raw or external bytes in an SREP section.
    pub fn ingest_source(
        &self,
        bytes: &[u8],
        dataset: &DatasetRef,
        section: SrepSection,
        provenance: &str,
    ) -> Result<RepositoryEntry, RepoError> {
        if !section.accepts(dataset.kind) {
            return Err(RepoError::SectionMismatch {
                kind: dataset.kind,
                section,
            });
        }
        self.mutate(|index| {
            Self::conflict(index, Partition::Srep, dataset)?;
            let file = self.file_for(Partition::Srep, section.as_str(), dataset);
            write_atomic(&self.root.join(&file), bytes)?;
            let entry = RepositoryEntry {
                dataset: dataset.clone(),
                partition: Partition::Srep,
                srep_section: Some(section),
                stored_at: now(),
                content_hash: sha256_hex(bytes),
                file,
                provenance: Some(provenance.to_owned()),
                derived_from: Vec::new(),
                metadata: None,
                warnings: Vec::new(),
            };
            index.entries.push(entry.clone());
            Ok(entry)
        })
    }

    /// Stores a pipeline output. `bytes` must be its canonical serialization
    /// under `context`.
    pub fn store_core(
        &self,
        dataset: &Dataset,
        bytes: &[u8],
        context: &Context<'_>,
        derived_from: &[DatasetRef],
    ) -> Result<RepositoryEntry, RepoError> {
        crate::model::validate(dataset, Some(context)).into_result()?;
        let id = dataset.id();
        let expected = sha256_hex(&canonical_bytes(dataset, context)?);
        let actual = sha256_hex(bytes);
        if expected != actual {
            return Err(RepoError::HashMismatch {
                dataset: id.clone(),
                expected,
                actual,
            });
        }
        self.mutate(|index| {
            Self::conflict(index, Partition::Crep, id)?;
            let file = self.file_for(Partition::Crep, id.kind.as_str(), id);
            write_atomic(&self.root.join(&file), bytes)?;
            let mut derived_from = derived_from.to_vec();
            derived_from.sort();
            derived_from.dedup();
            let entry = RepositoryEntry {
                dataset: id.clone(),
                partition: Partition::Crep,
                srep_section: None,
                stored_at: now(),
                content_hash: actual,
                file,
                provenance: None,
                derived_from,
                metadata: None,
                warnings: Vec::new(),
            };
            index.entries.push(entry.clone());
            Ok(entry)
        })
    }

    /// Copies a CREP dataset into DREP with its metadata. Links to local
    /// datasets that are not distributed produce warnings, since they may be
    /// promoted later; links to other nodes are resolved lazily.
    pub fn promote_to_distribution(
        &self,
        dataset: &DatasetRef,
        metadata: &MetadataRecord,
    ) -> Result<RepositoryEntry, RepoError> {
        metadata.validate().into_result()?;
        if metadata.dataset != *dataset {
            return Err(RepoError::MetadataMismatch(dataset.clone()));
        }
        self.mutate(|index| {
            let crep = index
                .entries
                .iter()
                .find(|e| e.same_slot(Partition::Crep, dataset) && e.dataset.kind == dataset.kind)
                .cloned()
                .ok_or_else(|| RepoError::NotFound {
                    dataset: dataset.clone(),
                    partition: Partition::Crep,
                })?;
            Self::conflict(index, Partition::Drep, dataset)?;
            if metadata.content_hash != crep.content_hash {
                return Err(RepoError::HashMismatch {
                    dataset: dataset.clone(),
                    expected: crep.content_hash.clone(),
                    actual: metadata.content_hash.clone(),
                });
            }
            let bytes = self.read_verified(&crep)?;
            let bytes = (self.anonymizer)(dataset, bytes);
            let actual = sha256_hex(&bytes);
            if actual != crep.content_hash {
                return Err(RepoError::HashMismatch {
                    dataset: dataset.clone(),
                    expected: crep.content_hash.clone(),
                    actual,
                });
            }
            let warnings = metadata
                .links
                .all()
                .filter(|r| r.node_id == self.node.node_id)
                .filter(|r| !index.entries.iter().any(|e| e.same_slot(Partition::Drep, r)))
                .map(|r| format!("link target {r} is not distributed yet"))
                .collect();
            let file = self.file_for(Partition::Drep, dataset.kind.as_str(), dataset);
            write_atomic(&self.root.join(&file), &bytes)?;
            let entry = RepositoryEntry {
                dataset: dataset.clone(),
                partition: Partition::Drep,
                srep_section: None,
                stored_at: now(),
                content_hash: crep.content_hash.clone(),
                file,
                provenance: None,
                derived_from: crep.derived_from.clone(),
                metadata: Some(metadata.clone()),
                warnings,
            };
            let meta_file = entry.metadata_file().expect("DREP entry");
            write_atomic(&self.root.join(meta_file), &serialize_metadata(metadata)?)?;
            index.entries.push(entry.clone());
            Ok(entry)
        })
    }

    /// Entries ordered by `(local_id, version)`, then node.
    pub fn list(&self, partition: Partition, filter: &ListFilter) -> Result<Vec<RepositoryEntry>, RepoError> {
        let mut entries: Vec<RepositoryEntry> = self
            .index()?
            .entries
            .into_iter()
            .filter(|e| e.partition == partition)
            .filter(|e| filter.kind.is_none_or(|k| e.dataset.kind == k))
            .filter(|e| filter.section.is_none_or(|s| e.srep_section == Some(s)))
            .filter(|e| {
                filter.category.as_ref().is_none_or(|c| {
                    e.metadata.as_ref().is_some_and(|m| m.categories.contains(c))
                })
            })
            .collect();
        entries.sort_by(|a, b| {
            (a.dataset.local_id.as_str(), a.dataset.version, a.dataset.node_id.as_str()).cmp(&(
                b.dataset.local_id.as_str(),
                b.dataset.version,
                b.dataset.node_id.as_str(),
            ))
        });
        Ok(entries)
    }

    /// Finds an entry by `(node, local_id, version)`; the kind of `dataset`
    /// is not compared.
    pub fn entry(&self, dataset: &DatasetRef, partition: Partition) -> Result<RepositoryEntry, RepoError> {
        self.index()?
            .entries
            .into_iter()
            .find(|e| e.same_slot(partition, dataset))
            .ok_or_else(|| RepoError::NotFound {
                dataset: dataset.clone(),
                partition,
            })
    }

    /// Latest SREP version of a local id.
    pub fn latest_source(&self, local_id: &str) -> Result<Option<RepositoryEntry>, RepoError> {
        Ok(self
            .index()?
            .entries
            .into_iter()
            .filter(|e| e.partition == Partition::Srep && e.dataset.node_id == self.node.node_id)
            .filter(|e| e.dataset.local_id.as_str() == local_id)
            .max_by_key(|e| e.dataset.version))
    }

    fn read_verified(&self, entry: &RepositoryEntry) -> Result<Vec<u8>, RepoError> {
        let path = self.root.join(&entry.file);
        let corrupt = || RepoError::Corruption {
            dataset: entry.dataset.clone(),
            partition: entry.partition,
            path: path.clone(),
        };
        let bytes = fs::read(&path).map_err(|_| corrupt())?;
        if sha256_hex(&bytes) != entry.content_hash {
            return Err(corrupt());
        }
        Ok(bytes)
    }

    /// Reads stored bytes, verifying them against the recorded hash.
    pub fn get_bytes(&self, dataset: &DatasetRef, partition: Partition) -> Result<Vec<u8>, RepoError> {
        let entry = self.entry(dataset, partition)?;
        self.read_verified(&entry)
    }

    pub fn integrity_check(&self) -> Result<IntegrityReport, RepoError> {
        let index = self.index()?;
        let mut issues = Vec::new();
        let mut issue = |e: &RepositoryEntry, problem: String| {
            issues.push(IntegrityIssue {
                dataset: e.dataset.clone(),
                partition: e.partition,
                problem,
            })
        };
        for e in &index.entries {
            match fs::read(self.root.join(&e.file)) {
                Err(_) => issue(e, format!("file {} is missing", e.file)),
                Ok(bytes) => {
                    let actual = sha256_hex(&bytes);
                    if actual != e.content_hash {
                        issue(e, format!("file {} hashes to {actual}, recorded {}", e.file, e.content_hash));
                    }
                }
            }
            if (e.partition == Partition::Srep) != e.srep_section.is_some() {
                issue(e, "SREP section is missing or set outside SREP".into());
            }
            if e.partition != Partition::Drep {
                continue;
            }
            let counterpart = index
                .entries
                .iter()
                .find(|c| c.same_slot(Partition::Crep, &e.dataset) && c.dataset.kind == e.dataset.kind);
            match counterpart {
                None => issue(e, "no CREP counterpart (DREP must be a subset of CREP)".into()),
                Some(c) if c.content_hash != e.content_hash => {
                    issue(e, "CREP counterpart has a different content hash".into())
                }
                Some(c) if fs::metadata(self.root.join(&c.file)).is_err() => {
                    issue(e, format!("CREP counterpart file {} is missing", c.file))
                }
                Some(_) => {}
            }
            match (&e.metadata, e.metadata_file()) {
                (Some(m), Some(file)) => {
                    if m.content_hash != e.content_hash {
                        issue(e, "metadata content_hash differs from the stored bytes".into());
                    }
                    match fs::read(self.root.join(&file)) {
                        Err(_) => issue(e, format!("metadata file {file} is missing")),
                        Ok(bytes) => match crate::formats::parse_metadata(&bytes) {
                            Ok(parsed) if parsed == *m => {}
                            Ok(_) => issue(e, format!("metadata file {file} differs from the index")),
                            Err(err) => issue(e, format!("metadata file {file} is invalid: {err}")),
                        },
                    }
                }
                _ => issue(e, "DREP entry has no metadata".into()),
            }
        }
        Ok(IntegrityReport { issues })
    }
}
