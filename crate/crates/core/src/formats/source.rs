use chrono::{DateTime, Utc};

use super::csv::read_records;
use super::{utf8, FormatError};
use crate::model::{DatasetRef, SourceDataset};

/// Reads a raw delimited file with a header row. Every cell is kept as text,
/// empty ones included; null markers are only recognised by cleaning.
pub fn parse_source(
    bytes: &[u8],
    id: &DatasetRef,
    provenance: &str,
    retrieved_at: DateTime<Utc>,
) -> Result<SourceDataset, FormatError> {
    let mut records = read_records(utf8(bytes)?, true)?.into_iter();
    let headers: Vec<String> = records
        .next()
        .ok_or_else(|| FormatError::Structure("source file has no header row".into()))?
        .into_iter()
        .map(Option::unwrap_or_default)
        .collect();
    let mut rows = Vec::new();
    for (i, record) in records.enumerate() {
        if record.len() != headers.len() {
            return Err(FormatError::Csv {
                line: i + 2,
                message: format!("{} fields, header has {}", record.len(), headers.len()),
            });
        }
        rows.push(record.into_iter().map(|c| Some(c.unwrap_or_default())).collect());
    }
    let dataset = SourceDataset {
        id: id.clone(),
        headers,
        rows,
        provenance: provenance.to_owned(),
        retrieved_at,
    };
    dataset.validate().into_result()?;
    Ok(dataset)
}
