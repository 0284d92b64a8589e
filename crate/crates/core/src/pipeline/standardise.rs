use std::collections::HashMap;

use chrono::NaiveDate;

use super::{PipelineError, RoleSpec, TransformConfig};
use crate::model::{
    parse_iso_date, Column, Datatype, Decimal, NodeId, Role, SourceDataset, StandardisedDataset, Table, Value,
};

fn parse_date(s: &str) -> Option<NaiveDate> {
    let b = s.as_bytes();
    if b.len() != 10 {
        return None;
    }
    let digits_except = |a: usize, c: usize| b.iter().enumerate().all(|(i, x)| i == a || i == c || x.is_ascii_digit());
    if b[4] == b'-' && b[7] == b'-' {
        parse_iso_date(s)
    } else if b[2] == b'/' && b[5] == b'/' && digits_except(2, 5) {
        NaiveDate::parse_from_str(s, "%d/%m/%Y").ok()
    } else if b[4] == b'/' && b[7] == b'/' && digits_except(4, 7) {
        NaiveDate::parse_from_str(s, "%Y/%m/%d").ok()
    } else {
        None
    }
}

/// Reads a cleaned raw cell as `datatype`.
///
/// Dates accept `YYYY-MM-DD`, `DD/MM/YYYY` and `YYYY/MM/DD`; booleans accept
/// `yes/no/1/0/true/false` in any case; numbers take an optional sign.
pub fn coerce(datatype: Datatype, s: &str) -> Option<Value> {
    match datatype {
        Datatype::Boolean => match s.to_ascii_lowercase().as_str() {
            "yes" | "1" | "true" => Some(Value::Boolean(true)),
            "no" | "0" | "false" => Some(Value::Boolean(false)),
            _ => None,
        },
        Datatype::Date => parse_date(s).map(Value::Date),
        Datatype::Decimal => Decimal::parse(s).map(Value::Decimal),
        other => Value::parse_lexical(other, s),
    }
}

/// Maps each cleaned source onto its configured table.
///
/// Configured columns missing from a source (for example dropped by `clean`
/// for being all-null) become all-null columns.
pub fn standardise(
    sources: &[SourceDataset],
    cfg: &TransformConfig,
    node: &NodeId,
) -> Result<StandardisedDataset, PipelineError> {
    let mut tables = Vec::new();
    for mapping in &cfg.tables {
        let candidates: Vec<&SourceDataset> = sources
            .iter()
            .filter(|s| s.id.local_id == mapping.source && mapping.source_version.is_none_or(|v| v == s.id.version))
            .collect();
        let source = match candidates.as_slice() {
            [one] => *one,
            [] => return Err(PipelineError::Config(format!("no source `{}` was supplied", mapping.source))),
            _ => return Err(PipelineError::Config(format!("several versions of source `{}` were supplied", mapping.source))),
        };
        let unmapped: Vec<String> = source
            .headers
            .iter()
            .filter(|h| !mapping.columns.iter().any(|c| &c.header == *h))
            .cloned()
            .collect();
        if !unmapped.is_empty() {
            return Err(PipelineError::UnmappedHeaders {
                source_id: source.id.local_id.to_string(),
                headers: unmapped,
            });
        }
        let columns: Vec<Column> = mapping
            .columns
            .iter()
            .map(|c| Column {
                attribute: c.attribute(),
                datatype: c.datatype,
                role: match c.role {
                    RoleSpec::Plain => Role::Plain,
                    RoleSpec::PrimaryKey => Role::PrimaryKey,
                    RoleSpec::ForeignKey => Role::ForeignKey(c.target.clone().unwrap_or_default()),
                },
            })
            .collect();
        let positions: Vec<Option<usize>> = mapping.columns.iter().map(|c| source.column_index(&c.header)).collect();
        let mut rows = Vec::with_capacity(source.rows.len());
        for (ri, raw_row) in source.rows.iter().enumerate() {
            let mut row = Vec::with_capacity(columns.len());
            for (col, pos) in columns.iter().zip(&positions) {
                let Some(text) = pos.and_then(|p| raw_row.get(p)?.as_deref()) else {
                    row.push(None);
                    continue;
                };
                let value = coerce(col.datatype, text).ok_or_else(|| PipelineError::Coercion {
                    table: mapping.table.clone(),
                    row: ri + 1,
                    column: col.attribute.clone(),
                    value: text.to_owned(),
                    datatype: col.datatype.to_string(),
                })?;
                row.push(Some(value));
            }
            rows.push(row);
        }
        let table = Table {
            name: mapping.table.clone(),
            columns,
            rows,
        };
        check_keys(&table)?;
        tables.push(table);
    }
    let dataset = StandardisedDataset {
        id: cfg.standardised_ref(node)?,
        tables,
    }
    .canonicalized();
    dataset.validate().into_result()?;
    Ok(dataset)
}

fn check_keys(table: &Table) -> Result<(), PipelineError> {
    let Some(pk) = table.primary_key_index() else {
        return Ok(());
    };
    let mut seen: HashMap<&Value, usize> = HashMap::new();
    for (ri, row) in table.rows.iter().enumerate() {
        if let Some(v) = &row[pk] {
            if let Some(first) = seen.insert(v, ri + 1) {
                return Err(PipelineError::DuplicateKey {
                    table: table.name.clone(),
                    key: v.lexical(),
                    first,
                    second: ri + 1,
                });
            }
        }
    }
    Ok(())
}
