use std::collections::HashSet;

use super::csv::{read_records, write_record};
use super::{utf8, FormatError};
use crate::model::{Concept, DatasetRef, LanguageDataset, Lexicalization};

pub const LANGUAGE_HEADER: [&str; 4] = ["concept_id", "language_tag", "lemma", "gloss"];

/// One row per lexicalization, sorted by `(concept_id, language_tag)`.
pub fn serialize_language(dataset: &LanguageDataset) -> Result<Vec<u8>, FormatError> {
    dataset.validate().into_result()?;
    let dataset = dataset.clone().canonicalized();
    let mut out = String::new();
    write_record(&mut out, LANGUAGE_HEADER.map(Some));
    for c in &dataset.concepts {
        for l in &c.lexicalizations {
            write_record(
                &mut out,
                [
                    Some(c.concept_id.as_str()),
                    Some(l.language_tag.as_str()),
                    Some(l.lemma.as_str()),
                    Some(l.gloss.as_str()),
                ],
            );
        }
    }
    Ok(out.into_bytes())
}

/// The CSV does not carry the dataset ref, so the caller supplies it.
pub fn parse_language(bytes: &[u8], id: &DatasetRef) -> Result<LanguageDataset, FormatError> {
    let mut records = read_records(utf8(bytes)?, false)?.into_iter();
    let header = records.next().unwrap_or_default();
    if header.iter().map(|h| h.as_deref()).ne(LANGUAGE_HEADER.map(Some)) {
        return Err(FormatError::Structure(format!(
            "language header must be `{}`",
            LANGUAGE_HEADER.join(",")
        )));
    }
    let mut concepts: Vec<Concept> = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in records.enumerate() {
        let row = i + 1;
        let [Some(concept_id), Some(language_tag), Some(lemma), gloss] = <[Option<String>; 4]>::try_from(record)
            .map_err(|r| FormatError::Structure(format!("row {row}: {} fields, expected 4", r.len())))?
        else {
            return Err(FormatError::Structure(format!("row {row}: concept_id, language_tag and lemma are required")));
        };
        let gloss = gloss.filter(|g| !g.trim().is_empty()).ok_or_else(|| {
            FormatError::Structure(format!("row {row}: empty gloss for `{concept_id}`@{language_tag}"))
        })?;
        if !seen.insert((concept_id.clone(), language_tag.clone())) {
            return Err(FormatError::Structure(format!(
                "row {row}: duplicate lexicalization `{concept_id}`@{language_tag}"
            )));
        }
        let lex = Lexicalization { lemma, language_tag, gloss };
        match concepts.iter_mut().find(|c| c.concept_id == concept_id) {
            Some(c) => c.lexicalizations.push(lex),
            None => concepts.push(Concept {
                concept_id,
                lexicalizations: vec![lex],
            }),
        }
    }
    let dataset = LanguageDataset {
        id: id.clone(),
        concepts,
    }
    .canonicalized();
    dataset.validate().into_result()?;
    Ok(dataset)
}
