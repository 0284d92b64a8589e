//! Domain types for stratified content, catalogue metadata and node identity.
//!
//! Everything here is an immutable value once constructed. Invariants are
//! checked by [`validate`], which returns a report instead of failing fast;
//! cross-dataset invariants (concept resolution, composition integrity) are
//! only checked when a [`Context`] is supplied.

mod datasets;
mod ids;
mod metadata;
mod validate;
mod value;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use datasets::{
    Column, Composition, Concept, Dataset, Discriminator, EType, Entity, GraphDataset,
    KnowledgeDataset, LanguageDataset, Lexicalization, Link, Literal, Property, PropertyRange,
    Role, SourceDataset, StandardisedDataset, Table,
};
pub use ids::{is_valid_language_tag, is_valid_node_id, is_valid_slug, LocalId, NodeId};
pub use metadata::{rfc3339_seconds, rfc3339_seconds_opt, DescriptiveFields, DownloadPolicy, MetadataLinks, MetadataRecord};
pub use validate::{validate, Context, ValidationError, ValidationReport, Violation};
pub use value::{parse_iso_date, Cell, Datatype, Decimal, Value};

/// What a repository entry holds. The first four kinds live in CREP/DREP,
/// the last three in SREP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentKind {
    Standardised,
    Language,
    Knowledge,
    Graph,
    LowQuality,
    ExternalLanguage,
    ExternalReference,
}

impl ContentKind {
    pub const CORE: [ContentKind; 4] = [
        ContentKind::Standardised,
        ContentKind::Language,
        ContentKind::Knowledge,
        ContentKind::Graph,
    ];

    pub fn is_core(self) -> bool {
        Self::CORE.contains(&self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ContentKind::Standardised => "standardised",
            ContentKind::Language => "language",
            ContentKind::Knowledge => "knowledge",
            ContentKind::Graph => "graph",
            ContentKind::LowQuality => "low_quality",
            ContentKind::ExternalLanguage => "external_language",
            ContentKind::ExternalReference => "external_reference",
        }
    }

    /// File suffix used by the `<local_id>.v<version>.<suffix>` convention.
    pub fn file_suffix(self) -> &'static str {
        match self {
            ContentKind::Standardised => "bundle",
            ContentKind::Language | ContentKind::ExternalLanguage => "lang.csv",
            ContentKind::Knowledge | ContentKind::ExternalReference => "onto.ttl",
            ContentKind::Graph => "graph.ttl",
            ContentKind::LowQuality => "csv",
        }
    }
}

impl fmt::Display for ContentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContentKind {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let all = [
            ContentKind::Standardised,
            ContentKind::Language,
            ContentKind::Knowledge,
            ContentKind::Graph,
            ContentKind::LowQuality,
            ContentKind::ExternalLanguage,
            ContentKind::ExternalReference,
        ];
        all.into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ValidationError::new("unknown-kind", format!("unknown content kind `{s}`")))
    }
}

/// Globally unique handle of a dataset version.
///
/// Identity is `(node_id, local_id, version)`; `kind` travels with the
/// handle so links can be checked without dereferencing them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRef")]
pub struct DatasetRef {
    pub node_id: NodeId,
    pub local_id: LocalId,
    pub version: u32,
    pub kind: ContentKind,
}

#[derive(Deserialize)]
struct RawRef {
    node_id: NodeId,
    local_id: LocalId,
    version: u32,
    kind: ContentKind,
}

impl TryFrom<RawRef> for DatasetRef {
    type Error = ValidationError;

    fn try_from(raw: RawRef) -> Result<Self, Self::Error> {
        if raw.version == 0 {
            return Err(ValidationError::new("ref-version", "dataset version must be positive"));
        }
        Ok(DatasetRef {
            node_id: raw.node_id,
            local_id: raw.local_id,
            version: raw.version,
            kind: raw.kind,
        })
    }
}

impl DatasetRef {
    pub fn new(node_id: &str, local_id: &str, version: u32, kind: ContentKind) -> Result<Self, ValidationError> {
        RawRef {
            node_id: node_id.parse()?,
            local_id: local_id.parse()?,
            version,
            kind,
        }
        .try_into()
    }

    /// `(node, local, version)` without the kind.
    pub fn key(&self) -> (&NodeId, &LocalId, u32) {
        (&self.node_id, &self.local_id, self.version)
    }

    pub fn same_version(&self, other: &DatasetRef) -> bool {
        self.key() == other.key()
    }

    pub fn with_kind(&self, kind: ContentKind) -> DatasetRef {
        DatasetRef { kind, ..self.clone() }
    }

    /// `<local_id>.v<version>`
    pub fn file_stem(&self) -> String {
        format!("{}.v{}", self.local_id, self.version)
    }

    /// `/api/v1/datasets/<node>/<local>/<version>`
    pub fn catalogue_path(&self) -> String {
        format!("/api/v1/datasets/{}/{}/{}", self.node_id, self.local_id, self.version)
    }

    /// Dataset IRI used in Turtle documents.
    pub fn iri(&self) -> String {
        format!("urn:livedata:{}:{}:v{}", self.node_id, self.local_id, self.version)
    }

    pub fn from_iri(iri: &str, kind: ContentKind) -> Option<DatasetRef> {
        let rest = iri.strip_prefix("urn:livedata:")?;
        let mut parts = rest.split(':');
        let node = parts.next()?;
        let local = parts.next()?;
        let version = parts.next()?.strip_prefix('v')?.parse().ok()?;
        if parts.next().is_some() {
            return None;
        }
        DatasetRef::new(node, local, version, kind).ok()
    }

    /// Parses `node/local/version`; the kind is supplied by the caller.
    pub fn parse_path(s: &str, kind: ContentKind) -> Result<DatasetRef, ValidationError> {
        let parts: Vec<&str> = s.split('/').collect();
        let [node, local, version] = parts.as_slice() else {
            return Err(ValidationError::new(
                "ref-syntax",
                format!("`{s}` is not of the form node/local_id/version"),
            ));
        };
        let version = version
            .trim_start_matches('v')
            .parse()
            .map_err(|_| ValidationError::new("ref-syntax", format!("bad version in `{s}`")))?;
        DatasetRef::new(node, local, version, kind)
    }
}

impl fmt::Display for DatasetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{} ({})", self.node_id, self.local_id, self.version, self.kind)
    }
}

/// Identity and landing-page description of a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDescriptor {
    pub node_id: NodeId,
    pub name: String,
    pub domain_description: BTreeMap<String, String>,
    pub base_url: String,
    pub publisher: String,
}

impl NodeDescriptor {
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if !is_absolute_url(&self.base_url) {
            report.push("node-base-url", format!("base_url `{}` is not an absolute http(s) URL", self.base_url));
        }
        if self.base_url.ends_with('/') {
            report.push("node-base-url", format!("base_url `{}` must not end with `/`", self.base_url));
        }
        for tag in self.domain_description.keys() {
            if !is_valid_language_tag(tag) {
                report.push("language-tag", format!("domain_description has invalid language tag `{tag}`"));
            }
        }
        report
    }

    /// Absolute catalogue URL of a dataset published on this node.
    pub fn catalogue_url(&self, dataset: &DatasetRef) -> String {
        format!("{}{}", self.base_url, dataset.catalogue_path())
    }
}

pub(crate) fn is_absolute_url(s: &str) -> bool {
    let rest = s
        .strip_prefix("http://")
        .or_else(|| s.strip_prefix("https://"));
    match rest {
        Some(r) => {
            let host = r.split('/').next().unwrap_or("");
            !host.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == '<' || c == '>' || c == '"')
        }
        None => false,
    }
}
