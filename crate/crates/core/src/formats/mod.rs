//! Canonical byte forms of the stratified content types and metadata.
//!
//! | content       | form                                               | suffix       |
//! |---------------|----------------------------------------------------|--------------|
//! | standardised  | bundle of a JSON schema descriptor + one CSV/table | `bundle`     |
//! | language      | CSV `concept_id,language_tag,lemma,gloss`          | `lang.csv`   |
//! | knowledge     | Turtle, OWL vocabulary                             | `onto.ttl`   |
//! | graph         | Turtle                                             | `graph.ttl`  |
//! | metadata      | JSON                                               | `meta.json`  |
//!
//! Every serializer emits exactly one byte string per value, and every
//! parser returns the canonical value, so `serialize(parse(b))` is stable.

pub mod csv;
mod graph;
mod knowledge;
mod language;
mod metadata;
mod standardised;
mod source;
pub mod turtle;

use sha2::{Digest, Sha256};

use crate::model::{Context, Dataset, ValidationError};

pub use graph::{graph_composition, parse_graph, serialize_graph};
pub use knowledge::{parse_knowledge, serialize_knowledge, VOCAB};
pub use language::{parse_language, serialize_language, LANGUAGE_HEADER};
pub use metadata::{parse_metadata, serialize_metadata};
pub use source::parse_source;
pub use standardised::{
    parse_standardised, parse_standardised_bundle, serialize_standardised, serialize_standardised_bundle,
    StandardisedFiles,
};
pub use turtle::{Literal as TurtleLiteral, Term, Triple, TurtleDocument, TurtleError};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("invalid dataset: {0}")]
    Invalid(#[from] ValidationError),
    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("turtle: {0}")]
    Turtle(#[from] TurtleError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not UTF-8 text")]
    Utf8,
    #[error("{table} row {row} column {column}: `{value}` is not a valid {datatype}")]
    CellDatatype {
        table: String,
        row: usize,
        column: String,
        value: String,
        datatype: String,
    },
    #[error("{0}")]
    Structure(String),
    #[error("unknown vocabulary term <{0}>")]
    UnknownTerm(String),
    #[error("predicate <{0}> is not declared by the knowledge dataset")]
    UndeclaredPredicate(String),
}

pub(crate) fn utf8(bytes: &[u8]) -> Result<&str, FormatError> {
    std::str::from_utf8(bytes).map_err(|_| FormatError::Utf8)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Canonical serialization of any stratified dataset.
///
/// Knowledge datasets need the language datasets they reference in
/// `context`, since class and property labels are drawn from them.
pub fn canonical_bytes(dataset: &Dataset, context: &Context<'_>) -> Result<Vec<u8>, FormatError> {
    match dataset {
        Dataset::Standardised(s) => serialize_standardised_bundle(s),
        Dataset::Language(l) => serialize_language(l),
        Dataset::Knowledge(k) => serialize_knowledge(k, context.languages),
        Dataset::Graph(g) => serialize_graph(g),
    }
}

/// SHA-256 of the canonical serialization, lowercase hex.
pub fn canonical_hash(dataset: &Dataset, context: &Context<'_>) -> Result<String, FormatError> {
    canonical_bytes(dataset, context).map(|b| sha256_hex(&b))
}

/// Parses canonical bytes of a core content kind. The language CSV does not
/// carry its ref, so `id` supplies it; graphs need their knowledge dataset.
pub fn parse_dataset(
    bytes: &[u8],
    id: &crate::model::DatasetRef,
    knowledge: Option<&crate::model::KnowledgeDataset>,
) -> Result<Dataset, FormatError> {
    use crate::model::ContentKind;
    Ok(match id.kind {
        ContentKind::Standardised => parse_standardised_bundle(bytes)?.into(),
        ContentKind::Language => parse_language(bytes, id)?.into(),
        ContentKind::Knowledge => parse_knowledge(bytes)?.into(),
        ContentKind::Graph => {
            let k = knowledge.ok_or_else(|| FormatError::Structure("parsing a graph needs its knowledge dataset".into()))?;
            parse_graph(bytes, k)?.into()
        }
        other => return Err(FormatError::Structure(format!("{other} content has no stratified format"))),
    })
}
