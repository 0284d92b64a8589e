use std::collections::BTreeSet;

use super::{sibling_ref, PipelineError, TransformConfig};
use crate::model::{Concept, ContentKind, LanguageDataset, Lexicalization, StandardisedDataset};

/// Lexicalization used when the lexicon has no entry for a concept.
pub fn default_lexicalization(concept_id: &str, language_tag: &str, local_id: &str) -> Lexicalization {
    Lexicalization {
        lemma: concept_id.replace('_', " "),
        language_tag: language_tag.to_owned(),
        gloss: format!("concept for {concept_id} as used in dataset {local_id}"),
    }
}

/// One concept per table, per attribute and per specialization child.
pub fn extract_language(s: &StandardisedDataset, cfg: &TransformConfig) -> Result<LanguageDataset, PipelineError> {
    s.validate().into_result()?;
    let mut ids: BTreeSet<&str> = BTreeSet::new();
    for t in &s.tables {
        ids.insert(&t.name);
        ids.extend(t.columns.iter().map(|c| c.attribute.as_str()));
    }
    for spec in &cfg.specializations {
        ids.extend(spec.values.values().map(|c| c.concept.as_str()));
    }
    let concepts = ids
        .into_iter()
        .map(|id| Concept {
            concept_id: id.to_owned(),
            lexicalizations: cfg.lexicon.get(id).cloned().unwrap_or_else(|| {
                vec![default_lexicalization(id, &cfg.default_language_tag, s.id.local_id.as_str())]
            }),
        })
        .collect();
    let dataset = LanguageDataset {
        id: sibling_ref(&s.id, ContentKind::Language),
        concepts,
    }
    .canonicalized();
    dataset.validate().into_result()?;
    Ok(dataset)
}
