use super::FormatError;
use crate::model::MetadataRecord;

/// Pretty-printed JSON with a trailing newline; link lists are sorted.
pub fn serialize_metadata(record: &MetadataRecord) -> Result<Vec<u8>, FormatError> {
    record.validate().into_result()?;
    let mut record = record.clone();
    for list in [
        &mut record.links.composed_of,
        &mut record.links.uses_language,
        &mut record.links.derived_from,
    ] {
        list.sort();
        list.dedup();
    }
    let mut out = serde_json::to_vec_pretty(&record)?;
    out.push(b'\n');
    Ok(out)
}

pub fn parse_metadata(bytes: &[u8]) -> Result<MetadataRecord, FormatError> {
    let record: MetadataRecord = serde_json::from_slice(bytes)?;
    record.validate().into_result()?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ContentKind, DatasetRef, DownloadPolicy, MetadataLinks};

    fn record() -> MetadataRecord {
        let r = |local: &str, kind| DatasetRef::new("num", local, 2, kind).unwrap();
        MetadataRecord {
            dataset: r("mn-graph", ContentKind::Graph),
            title: [("mn".to_string(), "Багш нар".to_string()), ("en".into(), "Professors".into())].into(),
            description: [("en".to_string(), "Professors and courses".to_string())].into(),
            categories: ["education".to_string()].into(),
            license: "CC-BY-4.0".into(),
            issued_at: "2024-03-01T10:00:00Z".parse().unwrap(),
            publisher: "num".into(),
            download_policy: DownloadPolicy::Request,
            links: MetadataLinks {
                composed_of: vec![
                    r("mn-standardised", ContentKind::Standardised),
                    r("mn-language", ContentKind::Language),
                    r("mn-knowledge", ContentKind::Knowledge),
                ],
                uses_language: vec![],
                derived_from: vec![],
            },
            content_hash: "0".repeat(64),
        }
    }

    #[test]
    fn round_trip_and_layout() {
        let bytes = serialize_metadata(&record()).unwrap();
        let text = std::str::from_utf8(&bytes).unwrap();
        assert!(text.starts_with("{\n  \"ref\": {"), "{text}");
        assert!(text.contains("\"issued_at\": \"2024-03-01T10:00:00Z\""), "{text}");
        assert!(text.ends_with("}\n"));
        let back = parse_metadata(&bytes).unwrap();
        assert_eq!(serialize_metadata(&back).unwrap(), bytes);
    }

    #[test]
    fn parsing_revalidates_links() {
        let mut json: serde_json::Value = serde_json::from_slice(&serialize_metadata(&record()).unwrap()).unwrap();
        json["links"]["composed_of"].as_array_mut().unwrap().pop();
        let err = parse_metadata(&serde_json::to_vec(&json).unwrap()).unwrap_err();
        assert!(err.to_string().contains("compos"), "{err}");
    }
}
