use std::collections::{BTreeSet, HashMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ids::{is_valid_language_tag, is_valid_slug};
use super::{Cell, ContentKind, Context, Datatype, DatasetRef, ValidationReport, Value};

/// Raw, low-quality input: one table of string cells keyed by header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDataset {
    pub id: DatasetRef,
    pub headers: Vec<String>,
    /// `None` marks a null cell (only produced by cleaning).
    pub rows: Vec<Vec<Option<String>>>,
    pub provenance: String,
    pub retrieved_at: DateTime<Utc>,
}

impl SourceDataset {
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.id.kind != ContentKind::LowQuality {
            report.push("ref-kind", format!("source dataset {} must be low_quality", self.id));
        }
        let mut seen = HashSet::new();
        for h in &self.headers {
            if !seen.insert(h) {
                report.push("header-unique", format!("duplicate header `{h}`"));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.headers.len() {
                report.push(
                    "row-arity",
                    format!("row {} has {} cells, expected {}", i + 1, row.len(), self.headers.len()),
                );
            }
        }
        report
    }

    pub fn column_index(&self, header: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == header)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Role {
    Plain,
    PrimaryKey,
    /// Names the referenced table, whose primary key the values point at.
    ForeignKey(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub attribute: String,
    pub datatype: Datatype,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn primary_key_index(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.role == Role::PrimaryKey)
    }

    pub fn column_index(&self, attribute: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.attribute == attribute)
    }

    /// Rows sorted by primary key, or by the whole row when there is none.
    pub fn sort_rows(&mut self) {
        match self.primary_key_index() {
            Some(pk) => self.rows.sort_by(|a, b| a[pk].cmp(&b[pk]).then_with(|| a.cmp(b))),
            None => self.rows.sort(),
        }
    }
}

/// Cleaned, typed tabular data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardisedDataset {
    pub id: DatasetRef,
    pub tables: Vec<Table>,
}

impl StandardisedDataset {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Tables sorted by name, rows by primary key. Column order is kept.
    pub fn canonicalize(&mut self) {
        self.tables.sort_by(|a, b| a.name.cmp(&b.name));
        for t in &mut self.tables {
            t.sort_rows();
        }
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }

    pub fn row_count(&self) -> usize {
        self.tables.iter().map(|t| t.rows.len()).sum()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.id.kind != ContentKind::Standardised {
            report.push("ref-kind", format!("{} is not a standardised ref", self.id));
        }
        let mut names = HashSet::new();
        for t in &self.tables {
            if !is_valid_slug(&t.name) {
                report.push("table-name", format!("table name `{}` is not a slug", t.name));
            }
            if !names.insert(t.name.as_str()) {
                report.push("table-unique", format!("duplicate table `{}`", t.name));
            }
            validate_table(t, &mut report);
        }
        for t in &self.tables {
            for (ci, col) in t.columns.iter().enumerate() {
                let Role::ForeignKey(target) = &col.role else {
                    continue;
                };
                let Some(target_table) = self.table(target) else {
                    report.push(
                        "foreign-key-target",
                        format!("{}.{} references unknown table `{target}`", t.name, col.attribute),
                    );
                    continue;
                };
                let Some(pk) = target_table.primary_key_index() else {
                    report.push(
                        "foreign-key-target",
                        format!("{}.{} references `{target}` which has no primary key", t.name, col.attribute),
                    );
                    continue;
                };
                if target_table.columns[pk].datatype != col.datatype {
                    report.push(
                        "foreign-key-datatype",
                        format!(
                            "{}.{} is {} but {target}.{} is {}",
                            t.name, col.attribute, col.datatype, target_table.columns[pk].attribute,
                            target_table.columns[pk].datatype
                        ),
                    );
                    continue;
                }
                let keys: HashSet<&Value> = target_table.rows.iter().filter_map(|r| r.get(pk)?.as_ref()).collect();
                for (ri, row) in t.rows.iter().enumerate() {
                    if let Some(Some(v)) = row.get(ci) {
                        if !keys.contains(v) {
                            report.push(
                                "foreign-key-dangling",
                                format!("{} row {} column {}: `{v}` not found in {target}", t.name, ri + 1, col.attribute),
                            );
                        }
                    }
                }
            }
        }
        report
    }
}

fn validate_table(t: &Table, report: &mut ValidationReport) {
    let mut attrs = HashSet::new();
    for c in &t.columns {
        if !is_valid_slug(&c.attribute) {
            report.push("column-name", format!("{}: attribute `{}` is not a slug", t.name, c.attribute));
        }
        if !attrs.insert(c.attribute.as_str()) {
            report.push("column-unique", format!("{}: duplicate attribute `{}`", t.name, c.attribute));
        }
    }
    if t.columns.iter().filter(|c| c.role == Role::PrimaryKey).count() > 1 {
        report.push("single-primary-key", format!("{} declares more than one primary key", t.name));
    }
    for (ri, row) in t.rows.iter().enumerate() {
        if row.len() != t.columns.len() {
            report.push(
                "row-arity",
                format!("{} row {} has {} cells, expected {}", t.name, ri + 1, row.len(), t.columns.len()),
            );
            continue;
        }
        for (cell, col) in row.iter().zip(&t.columns) {
            if let Some(v) = cell {
                if v.datatype() != col.datatype {
                    report.push(
                        "cell-datatype",
                        format!(
                            "{} row {} column {}: {} value in {} column",
                            t.name, ri + 1, col.attribute, v.datatype(), col.datatype
                        ),
                    );
                }
            }
        }
    }
    if let Some(pk) = t.primary_key_index() {
        let mut seen = HashSet::new();
        for (ri, row) in t.rows.iter().enumerate() {
            match row.get(pk) {
                Some(Some(v)) => {
                    if !seen.insert(v) {
                        report.push(
                            "primary-key-duplicate",
                            format!("{}: duplicate primary key `{v}` at row {}", t.name, ri + 1),
                        );
                    }
                }
                Some(None) => report.push(
                    "primary-key-null",
                    format!("{} row {}: null primary key", t.name, ri + 1),
                ),
                None => {}
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lexicalization {
    pub lemma: String,
    pub language_tag: String,
    pub gloss: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub concept_id: String,
    pub lexicalizations: Vec<Lexicalization>,
}

impl Concept {
    pub fn lemma(&self, language_tag: &str) -> Option<&str> {
        self.lexicalizations
            .iter()
            .find(|l| l.language_tag == language_tag)
            .map(|l| l.lemma.as_str())
    }
}

/// Concepts with multilingual lexicalizations and glosses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageDataset {
    pub id: DatasetRef,
    pub concepts: Vec<Concept>,
}

impl LanguageDataset {
    pub fn concept(&self, concept_id: &str) -> Option<&Concept> {
        self.concepts.iter().find(|c| c.concept_id == concept_id)
    }

    pub fn canonicalize(&mut self) {
        self.concepts.sort_by(|a, b| a.concept_id.cmp(&b.concept_id));
        for c in &mut self.concepts {
            c.lexicalizations
                .sort_by(|a, b| a.language_tag.cmp(&b.language_tag).then_with(|| a.cmp(b)));
        }
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.id.kind != ContentKind::Language {
            report.push("ref-kind", format!("{} is not a language ref", self.id));
        }
        let mut ids = HashSet::new();
        for c in &self.concepts {
            if !is_valid_slug(&c.concept_id) {
                report.push("concept-id", format!("concept id `{}` is not a slug", c.concept_id));
            }
            if !ids.insert(c.concept_id.as_str()) {
                report.push("concept-unique", format!("duplicate concept `{}`", c.concept_id));
            }
            if c.lexicalizations.is_empty() {
                report.push("concept-lexicalization", format!("concept `{}` has no lexicalization", c.concept_id));
            }
            let mut tags = HashSet::new();
            for lex in &c.lexicalizations {
                if !is_valid_language_tag(&lex.language_tag) {
                    report.push(
                        "language-tag",
                        format!("concept `{}`: invalid language tag `{}`", c.concept_id, lex.language_tag),
                    );
                }
                if !tags.insert(lex.language_tag.as_str()) {
                    report.push(
                        "lexicalization-functional",
                        format!("concept `{}` has two lemmas for `{}`", c.concept_id, lex.language_tag),
                    );
                }
                if lex.gloss.trim().is_empty() {
                    report.push(
                        "gloss-empty",
                        format!("concept `{}` has an empty gloss for `{}`", c.concept_id, lex.language_tag),
                    );
                }
                if lex.lemma.trim().is_empty() {
                    report.push(
                        "lemma-empty",
                        format!("concept `{}` has an empty lemma for `{}`", c.concept_id, lex.language_tag),
                    );
                }
            }
        }
        report
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PropertyRange {
    Data(Datatype),
    /// Target EType id.
    Object(String),
}

/// A data or object property. Properties of a table EType are kept in
/// column order; `prop_id` is `<table>.<attribute>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub prop_id: String,
    pub concept: String,
    pub range: PropertyRange,
}

impl Property {
    /// The column attribute this property maps to.
    pub fn attribute(&self) -> &str {
        self.prop_id.split_once('.').map_or(&self.prop_id, |(_, a)| a)
    }

    pub fn is_data(&self) -> bool {
        matches!(self.range, PropertyRange::Data(_))
    }
}

pub(crate) fn is_valid_prop_id(s: &str) -> bool {
    match s.split_once('.') {
        Some((t, a)) => is_valid_slug(t) && is_valid_slug(a),
        None => is_valid_slug(s),
    }
}

/// The attribute value that selects a functional specialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discriminator {
    /// Data property of an ancestor EType.
    pub property: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EType {
    pub etype_id: String,
    pub concept: String,
    pub parent: Option<String>,
    /// Data property whose value identifies instances (the table key).
    pub key: Option<String>,
    pub discriminator: Option<Discriminator>,
    pub properties: Vec<Property>,
}

impl EType {
    pub fn data_properties(&self) -> impl Iterator<Item = &Property> {
        self.properties.iter().filter(|p| p.is_data())
    }

    pub fn object_properties(&self) -> impl Iterator<Item = &Property> {
        self.properties.iter().filter(|p| !p.is_data())
    }
}

/// An ontology: ETypes with data/object properties and functional
/// specializations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeDataset {
    pub id: DatasetRef,
    pub language_refs: Vec<DatasetRef>,
    pub etypes: Vec<EType>,
}

impl KnowledgeDataset {
    pub fn etype(&self, etype_id: &str) -> Option<&EType> {
        self.etypes.iter().find(|e| e.etype_id == etype_id)
    }

    /// `etype_id` followed by its ancestors, nearest first. Stops on cycles.
    pub fn lineage<'a>(&'a self, etype_id: &'a str) -> Vec<&'a EType> {
        let mut out: Vec<&EType> = Vec::new();
        let mut cur = self.etype(etype_id);
        while let Some(e) = cur {
            if out.iter().any(|seen| seen.etype_id == e.etype_id) {
                break;
            }
            out.push(e);
            cur = e.parent.as_deref().and_then(|p| self.etype(p));
        }
        out
    }

    /// Root of the specialization chain (the table EType).
    pub fn root_of<'a>(&'a self, etype_id: &'a str) -> Option<&'a EType> {
        self.lineage(etype_id).last().copied()
    }

    pub fn is_a(&self, etype_id: &str, ancestor: &str) -> bool {
        self.lineage(etype_id).iter().any(|e| e.etype_id == ancestor)
    }

    /// Property declared on `etype_id` or one of its ancestors.
    pub fn property_for<'a>(&'a self, etype_id: &'a str, prop_id: &str) -> Option<&'a Property> {
        self.lineage(etype_id)
            .into_iter()
            .flat_map(|e| e.properties.iter())
            .find(|p| p.prop_id == prop_id)
    }

    pub fn property(&self, prop_id: &str) -> Option<(&EType, &Property)> {
        self.etypes
            .iter()
            .find_map(|e| e.properties.iter().find(|p| p.prop_id == prop_id).map(|p| (e, p)))
    }

    pub fn children<'a>(&'a self, etype_id: &'a str) -> impl Iterator<Item = &'a EType> {
        self.etypes
            .iter()
            .filter(move |e| e.parent.as_deref() == Some(etype_id))
    }

    pub fn concepts(&self) -> BTreeSet<&str> {
        self.etypes
            .iter()
            .flat_map(|e| std::iter::once(e.concept.as_str()).chain(e.properties.iter().map(|p| p.concept.as_str())))
            .collect()
    }

    pub fn canonicalize(&mut self) {
        self.etypes.sort_by(|a, b| a.etype_id.cmp(&b.etype_id));
        self.language_refs.sort();
        self.language_refs.dedup();
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }

    pub fn validate(&self, context: Option<&Context<'_>>) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.id.kind != ContentKind::Knowledge {
            report.push("ref-kind", format!("{} is not a knowledge ref", self.id));
        }
        if self.language_refs.is_empty() {
            report.push("language-refs", "knowledge dataset names no language dataset");
        }
        for r in &self.language_refs {
            if r.kind != ContentKind::Language {
                report.push("language-refs", format!("language ref {r} has the wrong kind"));
            }
        }
        let mut ids = HashSet::new();
        let mut props = HashSet::new();
        for e in &self.etypes {
            if !is_valid_slug(&e.etype_id) {
                report.push("etype-id", format!("etype id `{}` is not a slug", e.etype_id));
            }
            if !ids.insert(e.etype_id.as_str()) {
                report.push("etype-unique", format!("duplicate etype `{}`", e.etype_id));
            }
            for p in &e.properties {
                if !is_valid_prop_id(&p.prop_id) {
                    report.push("prop-id", format!("property id `{}` is malformed", p.prop_id));
                }
                if !props.insert(p.prop_id.as_str()) {
                    report.push("prop-unique", format!("duplicate property `{}`", p.prop_id));
                }
            }
        }
        for e in &self.etypes {
            if let Some(parent) = &e.parent {
                if self.etype(parent).is_none() {
                    report.push("parent-unknown", format!("`{}` specializes unknown `{parent}`", e.etype_id));
                }
            }
            for p in e.object_properties() {
                if let PropertyRange::Object(target) = &p.range {
                    if self.etype(target).is_none() {
                        report.push(
                            "object-target",
                            format!("`{}` targets unknown etype `{target}`", p.prop_id),
                        );
                    }
                }
            }
            if let Some(key) = &e.key {
                if !e.data_properties().any(|p| &p.prop_id == key) {
                    report.push(
                        "key-property",
                        format!("key `{key}` of `{}` is not one of its data properties", e.etype_id),
                    );
                }
            }
            if let Some(d) = &e.discriminator {
                let declared = e.parent.as_deref().is_some_and(|parent| {
                    self.property_for(parent, &d.property).is_some_and(Property::is_data)
                });
                if !declared {
                    report.push(
                        "discriminator-property",
                        format!(
                            "discriminator `{}` of `{}` is not a data property of an ancestor",
                            d.property, e.etype_id
                        ),
                    );
                }
            }
        }
        if let Some(cycle) = self.find_cycle() {
            report.push("parent-cycle", format!("specialization cycle through `{cycle}`"));
        }
        if let Some(ctx) = context {
            let known: HashSet<&str> = ctx
                .languages
                .iter()
                .filter(|l| self.language_refs.iter().any(|r| r.same_version(&l.id)))
                .flat_map(|l| l.concepts.iter().map(|c| c.concept_id.as_str()))
                .collect();
            for concept in self.concepts() {
                if !known.contains(concept) {
                    report.push(
                        "concept-unresolved",
                        format!("concept `{concept}` is not defined by any referenced language dataset"),
                    );
                }
            }
        }
        report
    }

    fn find_cycle(&self) -> Option<&str> {
        let parents: HashMap<&str, &str> = self
            .etypes
            .iter()
            .filter_map(|e| Some((e.etype_id.as_str(), e.parent.as_deref()?)))
            .collect();
        for start in parents.keys() {
            let mut seen = HashSet::new();
            let mut cur = *start;
            while let Some(next) = parents.get(cur) {
                if !seen.insert(cur) {
                    return Some(cur);
                }
                cur = next;
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Literal {
    pub property: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Link {
    pub property: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub iri: String,
    pub etype: String,
    pub literals: Vec<Literal>,
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    pub standardised: DatasetRef,
    pub language: DatasetRef,
    pub knowledge: DatasetRef,
}

impl Composition {
    pub fn refs(&self) -> [&DatasetRef; 3] {
        [&self.standardised, &self.language, &self.knowledge]
    }
}

/// A knowledge graph composed from one standardised, language and
/// knowledge dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDataset {
    pub id: DatasetRef,
    pub composed_of: Composition,
    /// Table ETypes whose rows were composed, so empty tables survive
    /// decomposition.
    pub tables: Vec<String>,
    pub entities: Vec<Entity>,
}

impl GraphDataset {
    pub fn entity(&self, iri: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.iri == iri)
    }

    pub fn link_count(&self) -> usize {
        self.entities.iter().map(|e| e.links.len()).sum()
    }

    pub fn canonicalize(&mut self) {
        self.tables.sort();
        self.tables.dedup();
        self.entities.sort_by(|a, b| a.iri.cmp(&b.iri));
        for e in &mut self.entities {
            e.literals.sort();
            e.links.sort();
        }
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }

    pub fn validate(&self, context: Option<&Context<'_>>) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.id.kind != ContentKind::Graph {
            report.push("ref-kind", format!("{} is not a graph ref", self.id));
        }
        let c = &self.composed_of;
        if c.standardised.kind != ContentKind::Standardised
            || c.language.kind != ContentKind::Language
            || c.knowledge.kind != ContentKind::Knowledge
        {
            report.push("composition-kinds", "composed_of must name one standardised, language and knowledge dataset");
        }
        for t in &self.tables {
            if !is_valid_slug(t) {
                report.push("table-name", format!("table `{t}` is not a slug"));
            }
        }
        let by_iri: HashMap<&str, &Entity> = self.entities.iter().map(|e| (e.iri.as_str(), e)).collect();
        if by_iri.len() != self.entities.len() {
            let mut seen = HashSet::new();
            for e in &self.entities {
                if !seen.insert(&e.iri) {
                    report.push("entity-iri-unique", format!("duplicate entity IRI <{}>", e.iri));
                }
            }
        }
        for e in &self.entities {
            if !is_absolute_iri(&e.iri) {
                report.push("entity-iri", format!("entity IRI <{}> is not absolute", e.iri));
            }
            for l in &e.links {
                if !by_iri.contains_key(l.target.as_str()) {
                    report.push(
                        "link-dangling",
                        format!("<{}> {} links to missing <{}>", e.iri, l.property, l.target),
                    );
                }
            }
        }
        let Some(ctx) = context else {
            return report;
        };
        if let Some(s) = ctx.standardised {
            if !s.id.same_version(&c.standardised) {
                report.push("composition-standardised", format!("composed_of names {} but context has {}", c.standardised, s.id));
            }
        }
        if let Some(k) = ctx.knowledge {
            if !k.id.same_version(&c.knowledge) {
                report.push("composition-knowledge", format!("composed_of names {} but context has {}", c.knowledge, k.id));
            }
            if !k.language_refs.iter().any(|r| r.same_version(&c.language)) {
                report.push(
                    "composition-language",
                    format!("knowledge dataset {} does not use language dataset {}", k.id, c.language),
                );
            }
            self.validate_against(k, &by_iri, &mut report);
        }
        if !ctx.languages.is_empty() && !ctx.languages.iter().any(|l| l.id.same_version(&c.language)) {
            report.push("composition-language", format!("language dataset {} not in context", c.language));
        }
        report
    }

    fn validate_against(&self, k: &KnowledgeDataset, by_iri: &HashMap<&str, &Entity>, report: &mut ValidationReport) {
        for t in &self.tables {
            match k.etype(t) {
                Some(e) if e.parent.is_none() => {}
                _ => report.push("graph-table", format!("table `{t}` is not a root etype of {}", k.id)),
            }
        }
        for e in &self.entities {
            let Some(root) = k.root_of(&e.etype) else {
                report.push("entity-etype", format!("<{}> typed by unknown etype `{}`", e.iri, e.etype));
                continue;
            };
            if !self.tables.contains(&root.etype_id) {
                report.push(
                    "graph-table",
                    format!("<{}> belongs to table `{}` which is not listed", e.iri, root.etype_id),
                );
            }
            for l in &e.literals {
                match k.property_for(&e.etype, &l.property) {
                    Some(Property { range: PropertyRange::Data(dt), .. }) => {
                        if *dt != l.value.datatype() {
                            report.push(
                                "literal-datatype",
                                format!("<{}> {}: {} value for {dt} property", e.iri, l.property, l.value.datatype()),
                            );
                        }
                    }
                    _ => report.push(
                        "literal-property",
                        format!("<{}>: `{}` is not a data property of `{}`", e.iri, l.property, e.etype),
                    ),
                }
            }
            for l in &e.links {
                match k.property_for(&e.etype, &l.property) {
                    Some(Property { range: PropertyRange::Object(target), .. }) => {
                        if let Some(t) = by_iri.get(l.target.as_str()) {
                            if !k.is_a(&t.etype, target) {
                                report.push(
                                    "link-target-type",
                                    format!("<{}> {} targets a `{}`, expected `{target}`", e.iri, l.property, t.etype),
                                );
                            }
                        }
                    }
                    _ => report.push(
                        "link-property",
                        format!("<{}>: `{}` is not an object property of `{}`", e.iri, l.property, e.etype),
                    ),
                }
            }
        }
    }
}

pub(crate) fn is_absolute_iri(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    !rest.is_empty()
        && scheme.as_bytes().first().is_some_and(u8::is_ascii_alphabetic)
        && scheme.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'+' || b == b'-' || b == b'.')
        && !s.chars().any(|c| c.is_whitespace() || c.is_control() || "<>\"{}|^`\\".contains(c))
}

/// Any of the four stratified content types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dataset {
    Standardised(StandardisedDataset),
    Language(LanguageDataset),
    Knowledge(KnowledgeDataset),
    Graph(GraphDataset),
}

impl Dataset {
    pub fn id(&self) -> &DatasetRef {
        match self {
            Dataset::Standardised(d) => &d.id,
            Dataset::Language(d) => &d.id,
            Dataset::Knowledge(d) => &d.id,
            Dataset::Graph(d) => &d.id,
        }
    }

    pub fn kind(&self) -> ContentKind {
        self.id().kind
    }

    /// Refs this dataset is built from, per the catalogue link rules.
    pub fn composition_links(&self) -> (Vec<DatasetRef>, Vec<DatasetRef>) {
        match self {
            Dataset::Graph(g) => (g.composed_of.refs().into_iter().cloned().collect(), Vec::new()),
            Dataset::Knowledge(k) => (Vec::new(), k.language_refs.clone()),
            _ => (Vec::new(), Vec::new()),
        }
    }
}

impl From<StandardisedDataset> for Dataset {
    fn from(d: StandardisedDataset) -> Self {
        Dataset::Standardised(d)
    }
}
impl From<LanguageDataset> for Dataset {
    fn from(d: LanguageDataset) -> Self {
        Dataset::Language(d)
    }
}
impl From<KnowledgeDataset> for Dataset {
    fn from(d: KnowledgeDataset) -> Self {
        Dataset::Knowledge(d)
    }
}
impl From<GraphDataset> for Dataset {
    fn from(d: GraphDataset) -> Self {
        Dataset::Graph(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sref(kind: ContentKind, local: &str) -> DatasetRef {
        DatasetRef::new("unitn", local, 1, kind).unwrap()
    }

    fn id(s: &str) -> Cell {
        Some(Value::Identifier(s.into()))
    }

    fn university() -> StandardisedDataset {
        StandardisedDataset {
            id: sref(ContentKind::Standardised, "uni-s"),
            tables: vec![
                Table {
                    name: "professor".into(),
                    columns: vec![
                        Column { attribute: "id".into(), datatype: Datatype::Identifier, role: Role::PrimaryKey },
                        Column { attribute: "last_name".into(), datatype: Datatype::String, role: Role::Plain },
                    ],
                    rows: vec![vec![id("p01"), Some(Value::String("Rossi".into()))]],
                },
                Table {
                    name: "course".into(),
                    columns: vec![
                        Column { attribute: "code".into(), datatype: Datatype::Identifier, role: Role::PrimaryKey },
                        Column {
                            attribute: "professor_id".into(),
                            datatype: Datatype::Identifier,
                            role: Role::ForeignKey("professor".into()),
                        },
                    ],
                    rows: vec![vec![id("c1"), id("p01")]],
                },
            ],
        }
    }

    #[test]
    fn valid_standardised() {
        assert!(university().validate().is_empty(), "{}", university().validate());
    }

    #[test]
    fn standardised_negative_cases() {
        let cases: Vec<(&str, Box<dyn Fn(&mut StandardisedDataset)>)> = vec![
            ("ref-kind", Box::new(|s| s.id.kind = ContentKind::Graph)),
            ("table-unique", Box::new(|s| s.tables[1].name = "professor".into())),
            ("table-name", Box::new(|s| s.tables[1].name = "Course".into())),
            ("column-unique", Box::new(|s| s.tables[0].columns[1].attribute = "id".into())),
            ("column-name", Box::new(|s| s.tables[0].columns[1].attribute = "last name".into())),
            ("cell-datatype", Box::new(|s| s.tables[0].rows[0][1] = Some(Value::Integer(3)))),
            ("row-arity", Box::new(|s| s.tables[0].rows[0].pop().map(|_| ()).unwrap_or(()))),
            ("primary-key-null", Box::new(|s| s.tables[0].rows[0][0] = None)),
            (
                "primary-key-duplicate",
                Box::new(|s| {
                    let r = s.tables[0].rows[0].clone();
                    s.tables[0].rows.push(r)
                }),
            ),
            ("foreign-key-dangling", Box::new(|s| s.tables[1].rows[0][1] = id("p99"))),
            (
                "foreign-key-target",
                Box::new(|s| s.tables[1].columns[1].role = Role::ForeignKey("room".into())),
            ),
            (
                "single-primary-key",
                Box::new(|s| s.tables[1].columns[1].role = Role::PrimaryKey),
            ),
            (
                "foreign-key-datatype",
                Box::new(|s| {
                    s.tables[1].columns[1].datatype = Datatype::String;
                    s.tables[1].rows[0][1] = Some(Value::String("p01".into()));
                }),
            ),
        ];
        for (rule, mutate) in cases {
            let mut s = university();
            mutate(&mut s);
            let report = s.validate();
            assert!(report.has_rule(rule), "expected {rule}, got {report}");
        }
    }

    fn language() -> LanguageDataset {
        LanguageDataset {
            id: sref(ContentKind::Language, "uni-l"),
            concepts: vec![Concept {
                concept_id: "course".into(),
                lexicalizations: vec![
                    Lexicalization { lemma: "course".into(), language_tag: "en".into(), gloss: "a unit of teaching".into() },
                    Lexicalization { lemma: "corso".into(), language_tag: "it".into(), gloss: "unità didattica".into() },
                ],
            }],
        }
    }

    #[test]
    fn language_negative_cases() {
        assert!(language().validate().is_empty());
        let cases: Vec<(&str, Box<dyn Fn(&mut LanguageDataset)>)> = vec![
            ("concept-unique", Box::new(|l| l.concepts.push(l.concepts[0].clone()))),
            ("concept-lexicalization", Box::new(|l| l.concepts[0].lexicalizations.clear())),
            ("lexicalization-functional", Box::new(|l| l.concepts[0].lexicalizations[1].language_tag = "en".into())),
            ("gloss-empty", Box::new(|l| l.concepts[0].lexicalizations[0].gloss = "  ".into())),
            ("lemma-empty", Box::new(|l| l.concepts[0].lexicalizations[0].lemma = String::new())),
            ("language-tag", Box::new(|l| l.concepts[0].lexicalizations[0].language_tag = "english".into())),
            ("concept-id", Box::new(|l| l.concepts[0].concept_id = "Course".into())),
            ("ref-kind", Box::new(|l| l.id.kind = ContentKind::Knowledge)),
        ];
        for (rule, mutate) in cases {
            let mut l = language();
            mutate(&mut l);
            assert!(l.validate().has_rule(rule), "expected {rule}");
        }
    }

    fn knowledge() -> KnowledgeDataset {
        KnowledgeDataset {
            id: sref(ContentKind::Knowledge, "uni-k"),
            language_refs: vec![sref(ContentKind::Language, "uni-l")],
            etypes: vec![
                EType {
                    etype_id: "course".into(),
                    concept: "course".into(),
                    parent: None,
                    key: Some("course.code".into()),
                    discriminator: None,
                    properties: vec![
                        Property { prop_id: "course.code".into(), concept: "course".into(), range: PropertyRange::Data(Datatype::Identifier) },
                        Property { prop_id: "course.level".into(), concept: "course".into(), range: PropertyRange::Data(Datatype::String) },
                        Property { prop_id: "course.prereq".into(), concept: "course".into(), range: PropertyRange::Object("course".into()) },
                    ],
                },
                EType {
                    etype_id: "master_course".into(),
                    concept: "course".into(),
                    parent: Some("course".into()),
                    key: None,
                    discriminator: Some(Discriminator { property: "course.level".into(), value: "master".into() }),
                    properties: vec![],
                },
            ],
        }
    }

    #[test]
    fn knowledge_negative_cases() {
        let langs = [language()];
        let ctx = Context::new().with_languages(&langs);
        assert!(knowledge().validate(Some(&ctx)).is_empty(), "{}", knowledge().validate(Some(&ctx)));
        let cases: Vec<(&str, Box<dyn Fn(&mut KnowledgeDataset)>)> = vec![
            ("etype-unique", Box::new(|k| k.etypes[1].etype_id = "course".into())),
            ("prop-unique", Box::new(|k| k.etypes[0].properties[1].prop_id = "course.code".into())),
            ("parent-unknown", Box::new(|k| k.etypes[1].parent = Some("lecture".into()))),
            ("parent-cycle", Box::new(|k| k.etypes[0].parent = Some("master_course".into()))),
            ("object-target", Box::new(|k| k.etypes[0].properties[2].range = PropertyRange::Object("room".into()))),
            ("key-property", Box::new(|k| k.etypes[0].key = Some("course.prereq".into()))),
            ("discriminator-property", Box::new(|k| k.etypes[1].discriminator.as_mut().unwrap().property = "course.prereq".into())),
            ("concept-unresolved", Box::new(|k| k.etypes[0].properties[0].concept = "course_taught".into())),
            ("language-refs", Box::new(|k| k.language_refs.clear())),
            ("prop-id", Box::new(|k| k.etypes[0].properties[0].prop_id = "course..code".into())),
        ];
        for (rule, mutate) in cases {
            let mut k = knowledge();
            mutate(&mut k);
            let report = k.validate(Some(&ctx));
            assert!(report.has_rule(rule), "expected {rule}, got {report}");
        }
    }

    #[test]
    fn concept_resolution_needs_context() {
        let mut k = knowledge();
        k.etypes[0].concept = "course_taught".into();
        assert!(k.validate(None).is_empty());
        let langs = [language()];
        let report = k.validate(Some(&Context::new().with_languages(&langs)));
        assert!(report.has_rule("concept-unresolved"));
        assert!(report.violations[0].message.contains("course_taught"));
    }

    fn graph() -> GraphDataset {
        GraphDataset {
            id: sref(ContentKind::Graph, "uni-g"),
            composed_of: Composition {
                standardised: sref(ContentKind::Standardised, "uni-s"),
                language: sref(ContentKind::Language, "uni-l"),
                knowledge: sref(ContentKind::Knowledge, "uni-k"),
            },
            tables: vec!["course".into()],
            entities: vec![
                Entity {
                    iri: "https://unitn.example/resource/uni-s/course/c1".into(),
                    etype: "master_course".into(),
                    literals: vec![Literal { property: "course.code".into(), value: Value::Identifier("c1".into()) }],
                    links: vec![],
                },
                Entity {
                    iri: "https://unitn.example/resource/uni-s/course/c2".into(),
                    etype: "course".into(),
                    literals: vec![],
                    links: vec![Link {
                        property: "course.prereq".into(),
                        target: "https://unitn.example/resource/uni-s/course/c1".into(),
                    }],
                },
            ],
        }
    }

    #[test]
    fn graph_negative_cases() {
        let langs = [language()];
        let k = knowledge();
        let ctx = Context::new().with_languages(&langs).with_knowledge(&k);
        assert!(graph().validate(Some(&ctx)).is_empty(), "{}", graph().validate(Some(&ctx)));
        let cases: Vec<(&str, Box<dyn Fn(&mut GraphDataset)>)> = vec![
            ("link-dangling", Box::new(|g| g.entities[1].links[0].target = "https://unitn.example/x".into())),
            ("entity-iri-unique", Box::new(|g| g.entities[1].iri = g.entities[0].iri.clone())),
            ("entity-iri", Box::new(|g| g.entities[0].iri = "course c1".into())),
            ("entity-etype", Box::new(|g| g.entities[0].etype = "lecture".into())),
            ("literal-property", Box::new(|g| g.entities[0].literals[0].property = "course.prereq".into())),
            ("literal-datatype", Box::new(|g| g.entities[0].literals[0].value = Value::Integer(1))),
            ("link-property", Box::new(|g| g.entities[1].links[0].property = "course.code".into())),
            ("graph-table", Box::new(|g| g.tables.clear())),
            ("composition-kinds", Box::new(|g| g.composed_of.language.kind = ContentKind::Graph)),
            ("composition-knowledge", Box::new(|g| g.composed_of.knowledge.version = 2)),
        ];
        for (rule, mutate) in cases {
            let mut g = graph();
            mutate(&mut g);
            let report = g.validate(Some(&ctx));
            assert!(report.has_rule(rule), "expected {rule}, got {report}");
        }
    }

    #[test]
    fn dangling_link_is_caught_without_context() {
        let mut g = graph();
        g.entities[1].links[0].target = "https://unitn.example/resource/uni-s/course/c9".into();
        let report = g.validate(None);
        assert!(report.has_rule("link-dangling"));
    }

    #[test]
    fn lineage_and_inheritance() {
        let k = knowledge();
        assert_eq!(k.root_of("master_course").unwrap().etype_id, "course");
        assert!(k.property_for("master_course", "course.code").is_some());
        assert!(k.is_a("master_course", "course"));
        assert!(!k.is_a("course", "master_course"));
        assert_eq!(k.etypes[0].properties[0].attribute(), "code");
    }

    #[test]
    fn canonical_row_order_uses_typed_keys() {
        let mut t = Table {
            name: "t".into(),
            columns: vec![Column { attribute: "n".into(), datatype: Datatype::Integer, role: Role::PrimaryKey }],
            rows: vec![vec![Some(Value::Integer(10))], vec![Some(Value::Integer(9))]],
        };
        t.sort_rows();
        assert_eq!(t.rows[0][0], Some(Value::Integer(9)));
    }
}
