use chrono::{DateTime, SubsecRound, Utc};

use super::PipelineError;
use crate::formats::canonical_hash;
use crate::model::{
    Context, Dataset, DatasetRef, DescriptiveFields, DownloadPolicy, MetadataLinks, MetadataRecord, NodeDescriptor,
};

/// Builds the catalogue record of a dataset. Link fields follow the kind
/// rules; `derived_from` carries pipeline provenance. Knowledge datasets need
/// their language datasets in `context` for the content hash.
pub fn generate_metadata(
    dataset: &Dataset,
    context: &Context<'_>,
    node: &NodeDescriptor,
    policy: DownloadPolicy,
    fields: &DescriptiveFields,
    derived_from: &[DatasetRef],
) -> Result<MetadataRecord, PipelineError> {
    generate_metadata_at(dataset, context, node, policy, fields, derived_from, Utc::now())
}

/// As `generate_metadata`, with an explicit issue time (truncated to seconds).
pub fn generate_metadata_at(
    dataset: &Dataset,
    context: &Context<'_>,
    node: &NodeDescriptor,
    policy: DownloadPolicy,
    fields: &DescriptiveFields,
    derived_from: &[DatasetRef],
    issued_at: DateTime<Utc>,
) -> Result<MetadataRecord, PipelineError> {
    crate::model::validate(dataset, Some(context)).into_result()?;
    let (mut composed_of, mut uses_language) = dataset.composition_links();
    let mut derived_from = derived_from.to_vec();
    for list in [&mut composed_of, &mut uses_language, &mut derived_from] {
        list.sort();
        list.dedup();
    }
    let record = MetadataRecord {
        dataset: dataset.id().clone(),
        title: fields.title.clone(),
        description: fields.description.clone(),
        categories: fields.categories.clone(),
        license: fields.license.clone(),
        issued_at: issued_at.trunc_subsecs(0),
        publisher: node.publisher.clone(),
        download_policy: policy,
        links: MetadataLinks {
            composed_of,
            uses_language,
            derived_from,
        },
        content_hash: canonical_hash(dataset, context)?,
    };
    record.validate().into_result()?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ContentKind, GraphDataset, KnowledgeDataset, LanguageDataset, StandardisedDataset};
    use crate::model::Composition;

    fn r(local: &str, kind: ContentKind) -> DatasetRef {
        DatasetRef::new("unitn", local, 1, kind).unwrap()
    }

    fn node() -> NodeDescriptor {
        NodeDescriptor {
            node_id: "unitn".parse().unwrap(),
            name: "UniTN".into(),
            domain_description: Default::default(),
            base_url: "https://data.unitn.it".into(),
            publisher: "University of Trento".into(),
        }
    }

    fn fields() -> DescriptiveFields {
        DescriptiveFields {
            title: [("en".to_string(), "Courses".to_string())].into(),
            description: [("it".to_string(), "Corsi".to_string())].into(),
            categories: Default::default(),
            license: "CC-BY-4.0".into(),
        }
    }

    fn generate(d: Dataset, f: &DescriptiveFields) -> Result<MetadataRecord, PipelineError> {
        generate_metadata(&d, &Context::new(), &node(), DownloadPolicy::Automatic, f, &[])
    }

    #[test]
    fn kind_link_rules() {
        let (s, l, k) = (
            r("u-standardised", ContentKind::Standardised),
            r("u-language", ContentKind::Language),
            r("u-knowledge", ContentKind::Knowledge),
        );
        let g = GraphDataset {
            id: r("u-graph", ContentKind::Graph),
            composed_of: Composition {
                standardised: s.clone(),
                language: l.clone(),
                knowledge: k.clone(),
            },
            tables: vec![],
            entities: vec![],
        };
        let m = generate(g.into(), &fields()).unwrap();
        // Sorted, as the serializer writes them.
        assert_eq!(m.links.composed_of, vec![k.clone(), l.clone(), s.clone()]);
        let kd = KnowledgeDataset {
            id: k,
            language_refs: vec![l.clone()],
            etypes: vec![],
        };
        assert_eq!(generate(kd.into(), &fields()).unwrap().links.uses_language, vec![l.clone()]);
        let sd = StandardisedDataset { id: s, tables: vec![] };
        let m = generate(sd.into(), &fields()).unwrap();
        assert!(m.links.composed_of.is_empty() && m.links.uses_language.is_empty());
        assert_eq!(m.issued_at.timestamp_subsec_nanos(), 0);
    }

    #[test]
    fn missing_title_is_an_error() {
        let mut f = fields();
        f.title.clear();
        let ld = LanguageDataset {
            id: r("u-language", ContentKind::Language),
            concepts: vec![],
        };
        assert!(generate(ld.into(), &f).is_err());
    }
}
