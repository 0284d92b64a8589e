use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::model::{is_valid_language_tag, is_valid_slug, ContentKind, Datatype, DatasetRef, LocalId, Lexicalization, NodeId};

/// Transformation settings, read from a JSON document.
///
/// ```json
/// {
///   "output": { "local_id": "uni", "version": 1 },
///   "default_language_tag": "it",
///   "tables": [{
///     "source": "professors-raw",
///     "table": "professor",
///     "columns": [
///       { "header": "ID", "attribute": "id", "datatype": "identifier", "role": "primary_key" },
///       { "header": "First Name", "datatype": "string" }
///     ]
///   }],
///   "lexicon": { "professor": [{ "lemma": "professore", "language_tag": "it", "gloss": "docente universitario" }] },
///   "specializations": []
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    pub output: OutputSpec,
    pub default_language_tag: String,
    #[serde(default = "default_null_markers")]
    pub null_markers: BTreeSet<String>,
    pub tables: Vec<TableMapping>,
    #[serde(default)]
    pub lexicon: BTreeMap<String, Vec<Lexicalization>>,
    #[serde(default)]
    pub specializations: Vec<Specialization>,
}

fn default_null_markers() -> BTreeSet<String> {
    ["", "NA", "N/A", "-", "null"].into_iter().map(String::from).collect()
}

/// Base local id of the outputs; the standardised dataset is published as
/// `<local_id>-standardised`, its siblings as `-language`, `-knowledge` and
/// `-graph`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub local_id: LocalId,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableMapping {
    /// Local id of the source dataset in the source repository.
    pub source: LocalId,
    /// Latest stored version when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_version: Option<u32>,
    pub table: String,
    pub columns: Vec<ColumnMapping>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    pub header: String,
    /// Defaults to the slug of `header`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    pub datatype: Datatype,
    #[serde(default)]
    pub role: RoleSpec,
    /// Referenced table of a foreign key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl ColumnMapping {
    pub fn attribute(&self) -> String {
        self.attribute.clone().unwrap_or_else(|| slugify(&self.header))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleSpec {
    #[default]
    Plain,
    PrimaryKey,
    ForeignKey,
}

/// Functional specializations of a table EType selected by one attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Specialization {
    pub table: String,
    pub attribute: String,
    /// Attribute value (lexical form) to child EType.
    pub values: BTreeMap<String, ChildSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChildSpec {
    pub etype: String,
    pub concept: String,
}

/// Lowercases, maps runs of non-alphanumerics to `_` and trims `_` at the
/// ends: `Courses Taught` becomes `courses_taught`.
pub fn slugify(header: &str) -> String {
    let mut out = String::new();
    for c in header.chars().flat_map(char::to_lowercase) {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.is_empty() && !out.ends_with('_') {
            out.push('_');
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    out
}

impl TransformConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, PipelineError> {
        let cfg: TransformConfig =
            serde_json::from_slice(bytes).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn standardised_ref(&self, node: &NodeId) -> Result<DatasetRef, PipelineError> {
        let local = format!("{}-standardised", self.output.local_id);
        Ok(DatasetRef::new(node.as_str(), &local, self.output.version, ContentKind::Standardised)?)
    }

    pub fn mapping_for(&self, table: &str) -> Option<&TableMapping> {
        self.tables.iter().find(|t| t.table == table)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.output.version == 0 {
            return fail("output.version must be positive".into());
        }
        if !is_valid_slug(&format!("{}-standardised", self.output.local_id)) {
            return fail(format!("output.local_id `{}` is too long", self.output.local_id));
        }
        if !is_valid_language_tag(&self.default_language_tag) {
            return fail(format!("default_language_tag `{}` is not a language tag", self.default_language_tag));
        }
        let tables: HashSet<&str> = self.tables.iter().map(|t| t.table.as_str()).collect();
        if tables.len() != self.tables.len() {
            return fail("a table is mapped twice".into());
        }
        let mut sources = HashSet::new();
        for t in &self.tables {
            if !sources.insert((&t.source, t.source_version)) {
                return fail(format!("source `{}` is mapped twice", t.source));
            }
            if !is_valid_slug(&t.table) {
                return fail(format!("table `{}` is not a slug", t.table));
            }
            let mut headers = HashSet::new();
            let mut attributes = HashSet::new();
            let mut keys = 0;
            for c in &t.columns {
                if !headers.insert(c.header.as_str()) {
                    return fail(format!("{}: header `{}` is mapped twice", t.table, c.header));
                }
                let attribute = c.attribute();
                if !is_valid_slug(&attribute) {
                    return fail(format!("{}: attribute `{attribute}` is not a slug", t.table));
                }
                if !attributes.insert(attribute.clone()) {
                    return fail(format!("{}: attribute `{attribute}` is used twice", t.table));
                }
                match (c.role, &c.target) {
                    (RoleSpec::ForeignKey, Some(target)) if tables.contains(target.as_str()) => {}
                    (RoleSpec::ForeignKey, Some(target)) => {
                        return fail(format!("{}.{attribute} targets unmapped table `{target}`", t.table))
                    }
                    (RoleSpec::ForeignKey, None) => return fail(format!("{}.{attribute} has no target", t.table)),
                    (_, Some(_)) => return fail(format!("{}.{attribute} has a target but is not a foreign key", t.table)),
                    (RoleSpec::PrimaryKey, None) => keys += 1,
                    (RoleSpec::Plain, None) => {}
                }
            }
            if keys > 1 {
                return fail(format!("{} has more than one primary key", t.table));
            }
        }
        for (concept, lexs) in &self.lexicon {
            if !is_valid_slug(concept) {
                return fail(format!("lexicon concept `{concept}` is not a slug"));
            }
            if lexs.is_empty() {
                return fail(format!("lexicon concept `{concept}` has no lexicalization"));
            }
            let mut tags = HashSet::new();
            for l in lexs {
                if !is_valid_language_tag(&l.language_tag) || !tags.insert(l.language_tag.as_str()) {
                    return fail(format!("lexicon concept `{concept}`: bad or repeated tag `{}`", l.language_tag));
                }
                if l.lemma.trim().is_empty() || l.gloss.trim().is_empty() {
                    return fail(format!("lexicon concept `{concept}`@{}: empty lemma or gloss", l.language_tag));
                }
            }
        }
        let mut specialized = HashSet::new();
        let mut children = HashSet::new();
        for s in &self.specializations {
            if !tables.contains(s.table.as_str()) {
                return fail(format!("specialization of unmapped table `{}`", s.table));
            }
            if !specialized.insert(s.table.as_str()) {
                return fail(format!("table `{}` has more than one specialization rule", s.table));
            }
            for child in s.values.values() {
                if !is_valid_slug(&child.etype) || tables.contains(child.etype.as_str()) || !children.insert(&child.etype) {
                    return fail(format!("child etype `{}` is not a fresh slug", child.etype));
                }
                if !self.lexicon.contains_key(&child.concept) {
                    return fail(format!("child concept `{}` is not in the lexicon", child.concept));
                }
            }
        }
        Ok(())
    }
}
