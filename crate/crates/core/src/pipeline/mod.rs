//! Config-driven transformation from raw source tables to the four
//! stratified datasets.
//!
//! ```text
//! SourceDataset* --clean--> --standardise--> S --extract_language--> L
//!                                            S, L --build_knowledge--> K
//!                                            S, L, K --compose_graph--> G
//! ```

mod clean;
mod compose;
mod config;
mod knowledge;
mod language;
mod metadata;
mod standardise;

pub use clean::{clean, clean_cell};
pub use compose::{compose_graph, decompose_graph, entity_iri, row_hash};
pub use config::{
    slugify, ChildSpec, ColumnMapping, OutputSpec, RoleSpec, Specialization, TableMapping, TransformConfig,
};
pub use knowledge::build_knowledge;
pub use language::{default_lexicalization, extract_language};
pub use metadata::{generate_metadata, generate_metadata_at};
pub use standardise::{coerce, standardise};

use crate::formats::FormatError;
use crate::model::{
    ContentKind, DatasetRef, GraphDataset, KnowledgeDataset, LanguageDataset, NodeDescriptor, SourceDataset,
    StandardisedDataset, ValidationError,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("unmapped headers in `{source_id}`: {}", headers.join(", "))]
    UnmappedHeaders { source_id: String, headers: Vec<String> },
    #[error("{table} row {row} column {column}: cannot read `{value}` as {datatype}")]
    Coercion {
        table: String,
        row: usize,
        column: String,
        value: String,
        datatype: String,
    },
    #[error("{table}: duplicate primary key `{key}` at rows {first} and {second}")]
    DuplicateKey {
        table: String,
        key: String,
        first: usize,
        second: usize,
    },
    #[error("specialization of `{table}`: discriminator attribute `{attribute}` is missing")]
    DiscriminatorMissing { table: String, attribute: String },
    #[error("specialization of `{table}` on `{attribute}` does not cover: {}", values.join(", "))]
    UncoveredValues {
        table: String,
        attribute: String,
        values: Vec<String>,
    },
    #[error("compose: {0}")]
    Compose(String),
    #[error("decompose: {0}")]
    Decompose(String),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// The four outputs of one pipeline run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineOutput {
    pub standardised: StandardisedDataset,
    pub language: LanguageDataset,
    pub knowledge: KnowledgeDataset,
    pub graph: GraphDataset,
}

impl PipelineOutput {
    /// Refs in the fixed order S, L, K, G.
    pub fn refs(&self) -> [&DatasetRef; 4] {
        [&self.standardised.id, &self.language.id, &self.knowledge.id, &self.graph.id]
    }
}

/// Ref of a dataset produced alongside `standardised`: the `-standardised`
/// suffix of its local id is swapped for the kind name.
pub fn sibling_ref(standardised: &DatasetRef, kind: ContentKind) -> DatasetRef {
    let local = standardised.local_id.as_str();
    let base = local.strip_suffix("-standardised").unwrap_or(local);
    let mut r = standardised.with_kind(kind);
    r.local_id = format!("{base}-{kind}")
        .parse()
        .unwrap_or_else(|_| standardised.local_id.clone());
    r
}

/// Runs every stage in order.
pub fn run(
    sources: &[SourceDataset],
    cfg: &TransformConfig,
    node: &NodeDescriptor,
) -> Result<PipelineOutput, PipelineError> {
    cfg.validate()?;
    let cleaned: Vec<SourceDataset> = sources.iter().map(|s| clean(s, cfg)).collect();
    let standardised = standardise(&cleaned, cfg, &node.node_id)?;
    let language = extract_language(&standardised, cfg)?;
    let knowledge = build_knowledge(&standardised, &language, cfg)?;
    let graph = compose_graph(&standardised, &language, &knowledge, node)?;
    Ok(PipelineOutput {
        standardised,
        language,
        knowledge,
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_refs() {
        let s = DatasetRef::new("unitn", "uni-standardised", 3, ContentKind::Standardised).unwrap();
        let g = sibling_ref(&s, ContentKind::Graph);
        assert_eq!(g.local_id.as_str(), "uni-graph");
        assert_eq!((g.version, g.kind), (3, ContentKind::Graph));
        let plain = DatasetRef::new("num", "mn", 1, ContentKind::Standardised).unwrap();
        assert_eq!(sibling_ref(&plain, ContentKind::Language).local_id.as_str(), "mn-language");
    }
}
