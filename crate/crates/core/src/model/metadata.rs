use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ids::{is_valid_language_tag, is_valid_slug};
use super::{ContentKind, DatasetRef, ValidationError, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownloadPolicy {
    Automatic,
    Request,
}

impl fmt::Display for DownloadPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DownloadPolicy::Automatic => "automatic",
            DownloadPolicy::Request => "request",
        })
    }
}

impl FromStr for DownloadPolicy {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "automatic" => Ok(DownloadPolicy::Automatic),
            "request" => Ok(DownloadPolicy::Request),
            _ => Err(ValidationError::new("download-policy", format!("unknown download policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataLinks {
    pub composed_of: Vec<DatasetRef>,
    pub uses_language: Vec<DatasetRef>,
    pub derived_from: Vec<DatasetRef>,
}

impl MetadataLinks {
    pub fn all(&self) -> impl Iterator<Item = &DatasetRef> {
        self.composed_of
            .iter()
            .chain(&self.uses_language)
            .chain(&self.derived_from)
    }
}

/// Catalogue description of one distributed dataset. Field order is the
/// serialized key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetadataRecord {
    #[serde(rename = "ref")]
    pub dataset: DatasetRef,
    pub title: BTreeMap<String, String>,
    pub description: BTreeMap<String, String>,
    pub categories: BTreeSet<String>,
    pub license: String,
    #[serde(with = "rfc3339_seconds")]
    pub issued_at: DateTime<Utc>,
    pub publisher: String,
    pub download_policy: DownloadPolicy,
    pub links: MetadataLinks,
    pub content_hash: String,
}

/// RFC 3339 UTC timestamps with whole seconds, e.g. `2024-05-01T10:00:00Z`.
pub mod rfc3339_seconds {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

/// As [`rfc3339_seconds`], for optional fields.
pub mod rfc3339_seconds_opt {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Option<DateTime<Utc>>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(t) => super::rfc3339_seconds::serialize(t, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DateTime<Utc>>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::rfc3339_seconds")] DateTime<Utc>);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

/// Human-supplied fields of a metadata record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptiveFields {
    pub title: BTreeMap<String, String>,
    pub description: BTreeMap<String, String>,
    #[serde(default)]
    pub categories: BTreeSet<String>,
    pub license: String,
}

impl MetadataRecord {
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let kind = self.dataset.kind;
        let links = &self.links;
        match kind {
            ContentKind::Graph => {
                let kinds: BTreeSet<ContentKind> = links.composed_of.iter().map(|r| r.kind).collect();
                let expected = BTreeSet::from([ContentKind::Standardised, ContentKind::Language, ContentKind::Knowledge]);
                if links.composed_of.len() != 3 || kinds != expected {
                    report.push(
                        "graph-composition",
                        format!(
                            "graph record must be composed of exactly one standardised, language and knowledge dataset (got {})",
                            links.composed_of.len()
                        ),
                    );
                }
                if !links.uses_language.is_empty() {
                    report.push("link-rules", "graph record carries uses_language");
                }
            }
            ContentKind::Knowledge => {
                if links.uses_language.is_empty() || links.uses_language.iter().any(|r| r.kind != ContentKind::Language) {
                    report.push("knowledge-language", "knowledge record must use at least one language dataset");
                }
                if !links.composed_of.is_empty() {
                    report.push("link-rules", "knowledge record carries composed_of");
                }
            }
            ContentKind::Standardised | ContentKind::Language => {
                if !links.composed_of.is_empty() || !links.uses_language.is_empty() {
                    report.push("link-rules", format!("{kind} record must not carry composed_of or uses_language"));
                }
            }
            _ => report.push("ref-kind", format!("{kind} content is never distributed")),
        }
        for (field, map) in [("title", &self.title), ("description", &self.description)] {
            if map.is_empty() {
                report.push("multilingual-text", format!("{field} has no language version"));
            }
            for (tag, text) in map {
                if !is_valid_language_tag(tag) {
                    report.push("language-tag", format!("{field} has invalid language tag `{tag}`"));
                }
                if text.trim().is_empty() {
                    report.push("multilingual-text", format!("{field}@{tag} is empty"));
                }
            }
        }
        for c in &self.categories {
            if !is_valid_slug(c) {
                report.push("category", format!("category `{c}` is not a slug"));
            }
        }
        if self.content_hash.len() != 64 || !self.content_hash.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase()) {
            report.push("content-hash", "content_hash must be 64 lowercase hex digits");
        }
        if self.license.trim().is_empty() {
            report.push("license", "license is empty");
        }
        report
    }
}
