use super::TransformConfig;
use crate::model::SourceDataset;

/// Trims whitespace and control characters and collapses inner runs of them
/// to one space.
pub fn clean_cell(s: &str) -> String {
    s.split(|c: char| c.is_whitespace() || c.is_control())
        .filter(|part| !part.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Normalizes cells and headers, turns null markers into nulls, then drops
/// all-null rows and columns that are unnamed or all-null.
///
/// Columns are only dropped for being all-null while rows remain, so a source
/// whose rows were all noise keeps its header. `clean` is idempotent.
pub fn clean(raw: &SourceDataset, cfg: &TransformConfig) -> SourceDataset {
    let headers: Vec<String> = raw.headers.iter().map(|h| clean_cell(h)).collect();
    let rows: Vec<Vec<Option<String>>> = raw
        .rows
        .iter()
        .map(|row| {
            (0..headers.len())
                .map(|i| {
                    let cell = clean_cell(row.get(i)?.as_deref()?);
                    (!cfg.null_markers.contains(&cell) && !cell.is_empty()).then_some(cell)
                })
                .collect()
        })
        .filter(|row: &Vec<Option<String>>| row.iter().any(Option::is_some))
        .collect();
    let keep: Vec<usize> = (0..headers.len())
        .filter(|&i| !headers[i].is_empty())
        .filter(|&i| rows.is_empty() || rows.iter().any(|r| r[i].is_some()))
        .collect();
    SourceDataset {
        id: raw.id.clone(),
        headers: keep.iter().map(|&i| headers[i].clone()).collect(),
        rows: rows
            .into_iter()
            .map(|r| keep.iter().map(|&i| r[i].clone()).collect())
            .filter(|r: &Vec<Option<String>>| r.iter().any(Option::is_some))
            .collect(),
        provenance: raw.provenance.clone(),
        retrieved_at: raw.retrieved_at,
    }
}
