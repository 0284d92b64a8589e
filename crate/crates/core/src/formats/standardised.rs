//! Standardised datasets: one CSV per table plus a JSON schema descriptor,
//! packed into a single length-framed bundle for storage and hashing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::csv::{read_records, write_record};
use super::{utf8, FormatError};
use crate::model::{Column, Datatype, DatasetRef, Role, StandardisedDataset, Table, Value};

const BUNDLE_MAGIC: &str = "livedata-bundle/1";
const SCHEMA_FORMAT: &str = "livedata-standardised/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaDescriptor {
    format: String,
    dataset: DatasetRef,
    tables: Vec<TableSchema>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableSchema {
    name: String,
    file: String,
    columns: Vec<ColumnSchema>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ColumnSchema {
    attribute: String,
    datatype: Datatype,
    role: RoleName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RoleName {
    Plain,
    PrimaryKey,
    ForeignKey,
}

/// The file set of a standardised dataset: `<stem>.schema.json` and one
/// `<stem>.<table>.csv` per table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardisedFiles {
    pub schema_name: String,
    pub schema: Vec<u8>,
    /// File name → CSV bytes, in table-name order.
    pub tables: BTreeMap<String, Vec<u8>>,
}

fn table_file(id: &DatasetRef, table: &str) -> String {
    format!("{}.{table}.csv", id.file_stem())
}

pub fn serialize_standardised(dataset: &StandardisedDataset) -> Result<StandardisedFiles, FormatError> {
    dataset.validate().into_result()?;
    let dataset = dataset.clone().canonicalized();
    let mut tables = BTreeMap::new();
    let mut schema_tables = Vec::new();
    for t in &dataset.tables {
        let file = table_file(&dataset.id, &t.name);
        let mut out = String::new();
        write_record(&mut out, t.columns.iter().map(|c| Some(c.attribute.as_str())));
        for row in &t.rows {
            let cells: Vec<Option<String>> = row.iter().map(|c| c.as_ref().map(Value::lexical)).collect();
            write_record(&mut out, cells.iter().map(|c| c.as_deref()));
        }
        tables.insert(file.clone(), out.into_bytes());
        schema_tables.push(TableSchema {
            name: t.name.clone(),
            file,
            columns: t
                .columns
                .iter()
                .map(|c| {
                    let (role, target) = match &c.role {
                        Role::Plain => (RoleName::Plain, None),
                        Role::PrimaryKey => (RoleName::PrimaryKey, None),
                        Role::ForeignKey(t) => (RoleName::ForeignKey, Some(t.clone())),
                    };
                    ColumnSchema {
                        attribute: c.attribute.clone(),
                        datatype: c.datatype,
                        role,
                        target,
                    }
                })
                .collect(),
        });
    }
    let descriptor = SchemaDescriptor {
        format: SCHEMA_FORMAT.into(),
        dataset: dataset.id.clone(),
        tables: schema_tables,
    };
    let mut schema = serde_json::to_vec_pretty(&descriptor)?;
    schema.push(b'\n');
    Ok(StandardisedFiles {
        schema_name: format!("{}.schema.json", dataset.id.file_stem()),
        schema,
        tables,
    })
}

pub fn parse_standardised(files: &StandardisedFiles) -> Result<StandardisedDataset, FormatError> {
    let descriptor: SchemaDescriptor = serde_json::from_slice(&files.schema)?;
    if descriptor.format != SCHEMA_FORMAT {
        return Err(FormatError::Structure(format!("unsupported schema format `{}`", descriptor.format)));
    }
    let mut tables = Vec::new();
    for ts in descriptor.tables {
        let columns = ts
            .columns
            .iter()
            .map(|c| {
                let role = match (c.role, &c.target) {
                    (RoleName::Plain, None) => Role::Plain,
                    (RoleName::PrimaryKey, None) => Role::PrimaryKey,
                    (RoleName::ForeignKey, Some(t)) => Role::ForeignKey(t.clone()),
                    (RoleName::ForeignKey, None) => {
                        return Err(FormatError::Structure(format!("{}.{}: foreign key without target", ts.name, c.attribute)))
                    }
                    (_, Some(_)) => {
                        return Err(FormatError::Structure(format!("{}.{}: target on a non-foreign-key column", ts.name, c.attribute)))
                    }
                };
                Ok(Column {
                    attribute: c.attribute.clone(),
                    datatype: c.datatype,
                    role,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let bytes = files
            .tables
            .get(&ts.file)
            .ok_or_else(|| FormatError::Structure(format!("missing table file `{}`", ts.file)))?;
        tables.push(parse_table(&ts.name, columns, utf8(bytes)?)?);
    }
    if files.tables.len() != tables.len() {
        return Err(FormatError::Structure("bundle holds table files not named by the schema".into()));
    }
    let dataset = StandardisedDataset {
        id: descriptor.dataset,
        tables,
    }
    .canonicalized();
    dataset.validate().into_result()?;
    Ok(dataset)
}

fn parse_table(name: &str, columns: Vec<Column>, text: &str) -> Result<Table, FormatError> {
    let mut records = read_records(text, false)?.into_iter();
    let header = records
        .next()
        .ok_or_else(|| FormatError::Structure(format!("{name}: missing header row")))?;
    for (i, h) in header.iter().enumerate() {
        let h = h.as_deref().unwrap_or("");
        match columns.get(i) {
            Some(c) if c.attribute == h => {}
            Some(c) if columns.iter().any(|c| c.attribute == h) => {
                return Err(FormatError::Structure(format!(
                    "{name}: column `{h}` out of order (expected `{}`)",
                    c.attribute
                )))
            }
            _ => return Err(FormatError::Structure(format!("{name}: unknown column `{h}`"))),
        }
    }
    if header.len() != columns.len() {
        return Err(FormatError::Structure(format!(
            "{name}: missing column `{}`",
            columns[header.len()].attribute
        )));
    }
    let mut rows = Vec::new();
    for (ri, record) in records.enumerate() {
        if record.len() != columns.len() {
            return Err(FormatError::Structure(format!(
                "{name} row {}: {} cells, expected {}",
                ri + 1,
                record.len(),
                columns.len()
            )));
        }
        let row = record
            .into_iter()
            .zip(&columns)
            .map(|(cell, col)| match cell {
                None => Ok(None),
                Some(text) => Value::parse_lexical(col.datatype, &text)
                    .map(Some)
                    .ok_or_else(|| FormatError::CellDatatype {
                        table: name.to_owned(),
                        row: ri + 1,
                        column: col.attribute.clone(),
                        value: text.clone(),
                        datatype: col.datatype.to_string(),
                    }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Table {
        name: name.to_owned(),
        columns,
        rows,
    })
}

impl StandardisedFiles {
    /// `livedata-bundle/1` header, then `<name> <length>\n<bytes>\n` per
    /// file: schema first, tables in name order.
    pub fn to_bundle(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(BUNDLE_MAGIC.as_bytes());
        out.push(b'\n');
        let parts = std::iter::once((&self.schema_name, &self.schema)).chain(self.tables.iter());
        for (name, bytes) in parts {
            out.extend_from_slice(format!("{name} {}\n", bytes.len()).as_bytes());
            out.extend_from_slice(bytes);
            out.push(b'\n');
        }
        out
    }

    pub fn from_bundle(bytes: &[u8]) -> Result<StandardisedFiles, FormatError> {
        let bad = |m: &str| FormatError::Structure(format!("bundle: {m}"));
        let mut rest = bytes
            .strip_prefix(BUNDLE_MAGIC.as_bytes())
            .and_then(|r| r.strip_prefix(b"\n"))
            .ok_or_else(|| bad("missing header"))?;
        let mut parts: Vec<(String, Vec<u8>)> = Vec::new();
        while !rest.is_empty() {
            let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("truncated part header"))?;
            let header = utf8(&rest[..nl])?;
            let (name, len) = header.rsplit_once(' ').ok_or_else(|| bad("malformed part header"))?;
            let len: usize = len.parse().map_err(|_| bad("malformed part length"))?;
            rest = &rest[nl + 1..];
            if rest.len() < len + 1 || rest[len] != b'\n' {
                return Err(bad("truncated part"));
            }
            parts.push((name.to_owned(), rest[..len].to_vec()));
            rest = &rest[len + 1..];
        }
        let mut parts = parts.into_iter();
        let (schema_name, schema) = parts.next().ok_or_else(|| bad("no schema part"))?;
        if !schema_name.ends_with(".schema.json") {
            return Err(bad("first part must be the schema descriptor"));
        }
        let mut tables = BTreeMap::new();
        for (name, data) in parts {
            if tables.insert(name.clone(), data).is_some() {
                return Err(bad(&format!("duplicate part `{name}`")));
            }
        }
        Ok(StandardisedFiles {
            schema_name,
            schema,
            tables,
        })
    }
}

pub fn serialize_standardised_bundle(dataset: &StandardisedDataset) -> Result<Vec<u8>, FormatError> {
    serialize_standardised(dataset).map(|f| f.to_bundle())
}

pub fn parse_standardised_bundle(bytes: &[u8]) -> Result<StandardisedDataset, FormatError> {
    parse_standardised(&StandardisedFiles::from_bundle(bytes)?)
}
