use std::collections::BTreeSet;

use super::{sibling_ref, PipelineError, TransformConfig};
use crate::model::{
    ContentKind, Context, Discriminator, EType, KnowledgeDataset, LanguageDataset, Property, PropertyRange, Role,
    StandardisedDataset,
};

/// One EType per table plus the configured functional specializations.
pub fn build_knowledge(
    s: &StandardisedDataset,
    l: &LanguageDataset,
    cfg: &TransformConfig,
) -> Result<KnowledgeDataset, PipelineError> {
    s.validate().into_result()?;
    l.validate().into_result()?;
    let mut etypes = Vec::new();
    for t in &s.tables {
        let properties = t
            .columns
            .iter()
            .map(|c| Property {
                prop_id: format!("{}.{}", t.name, c.attribute),
                concept: c.attribute.clone(),
                range: match &c.role {
                    Role::ForeignKey(target) => PropertyRange::Object(target.clone()),
                    _ => PropertyRange::Data(c.datatype),
                },
            })
            .collect();
        etypes.push(EType {
            etype_id: t.name.clone(),
            concept: t.name.clone(),
            parent: None,
            key: t.primary_key_index().map(|i| format!("{}.{}", t.name, t.columns[i].attribute)),
            discriminator: None,
            properties,
        });
    }
    for spec in &cfg.specializations {
        let missing = || PipelineError::DiscriminatorMissing {
            table: spec.table.clone(),
            attribute: spec.attribute.clone(),
        };
        let table = s.table(&spec.table).ok_or_else(missing)?;
        let ci = table.column_index(&spec.attribute).ok_or_else(missing)?;
        if table.columns[ci].role != Role::Plain {
            return Err(PipelineError::Config(format!(
                "discriminator {}.{} must be a plain column",
                spec.table, spec.attribute
            )));
        }
        let observed: BTreeSet<String> = table.rows.iter().filter_map(|r| Some(r[ci].as_ref()?.lexical())).collect();
        let uncovered: Vec<String> = observed.into_iter().filter(|v| !spec.values.contains_key(v)).collect();
        if !uncovered.is_empty() {
            return Err(PipelineError::UncoveredValues {
                table: spec.table.clone(),
                attribute: spec.attribute.clone(),
                values: uncovered,
            });
        }
        for (value, child) in &spec.values {
            etypes.push(EType {
                etype_id: child.etype.clone(),
                concept: child.concept.clone(),
                parent: Some(spec.table.clone()),
                key: None,
                discriminator: Some(Discriminator {
                    property: format!("{}.{}", spec.table, spec.attribute),
                    value: value.clone(),
                }),
                properties: Vec::new(),
            });
        }
    }
    let dataset = KnowledgeDataset {
        id: sibling_ref(&s.id, ContentKind::Knowledge),
        language_refs: vec![l.id.clone()],
        etypes,
    }
    .canonicalized();
    dataset
        .validate(Some(&Context::new().with_languages(std::slice::from_ref(l))))
        .into_result()?;
    Ok(dataset)
}
