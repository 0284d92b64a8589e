use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{is_valid_language_tag, is_valid_slug, ContentKind, DatasetRef, MetadataRecord};

pub const DEFAULT_PAGE_SIZE: u32 = 20;
pub const MAX_PAGE_SIZE: u32 = 100;
/// Query tokens at least this long also match longer words they start
/// with, so `professor` finds `professori`.
pub const PREFIX_MATCH_MIN: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("query parameter `{field}`: {message}")]
pub struct QueryError {
    pub field: String,
    pub message: String,
}

fn bad(field: &str, message: impl Into<String>) -> QueryError {
    QueryError {
        field: field.to_owned(),
        message: message.into(),
    }
}

/// Filters and paging of a catalogue listing. All filters must hold; a
/// listed kind or category set matches a record carrying any of the kinds
/// and all of the categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchQuery {
    pub text: Option<String>,
    pub kinds: BTreeSet<ContentKind>,
    pub categories: BTreeSet<String>,
    pub language_tag: Option<String>,
    pub page: u32,
    pub page_size: u32,
}

impl Default for SearchQuery {
    fn default() -> Self {
        SearchQuery {
            text: None,
            kinds: BTreeSet::new(),
            categories: BTreeSet::new(),
            language_tag: None,
            page: 1,
            page_size: DEFAULT_PAGE_SIZE,
        }
    }
}

impl SearchQuery {
    /// Reads decoded query pairs. `kinds` and `categories` may repeat and
    /// take comma-separated lists; other parameters appear at most once.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<SearchQuery, QueryError> {
        let mut q = SearchQuery::default();
        let mut seen = BTreeSet::new();
        for (key, value) in pairs {
            let scalar = !matches!(key.as_str(), "kinds" | "categories");
            if scalar && !seen.insert(key.as_str()) {
                return Err(bad(key, "given more than once"));
            }
            let list = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
            match key.as_str() {
                "text" => q.text = Some(value.clone()).filter(|t| !t.trim().is_empty()),
                "kinds" => {
                    for k in list() {
                        let kind: ContentKind = k
                            .to_ascii_lowercase()
                            .parse()
                            .map_err(|_| bad(key, format!("unknown kind `{k}`")))?;
                        if !kind.is_core() {
                            return Err(bad(key, format!("{kind} datasets are never distributed")));
                        }
                        q.kinds.insert(kind);
                    }
                }
                "categories" => {
                    for c in list() {
                        if !is_valid_slug(c) {
                            return Err(bad(key, format!("`{c}` is not a category slug")));
                        }
                        q.categories.insert(c.to_owned());
                    }
                }
                "language_tag" => {
                    if !is_valid_language_tag(value) {
                        return Err(bad(key, format!("`{value}` is not a language tag")));
                    }
                    q.language_tag = Some(value.clone());
                }
                "page" => {
                    q.page = value
                        .parse()
                        .ok()
                        .filter(|p| *p >= 1)
                        .ok_or_else(|| bad(key, "must be a positive integer"))?;
                }
                "page_size" => {
                    q.page_size = value
                        .parse()
                        .ok()
                        .filter(|p| (1..=MAX_PAGE_SIZE).contains(p))
                        .ok_or_else(|| bad(key, format!("must be between 1 and {MAX_PAGE_SIZE}")))?;
                }
                _ => return Err(bad(key, "unknown parameter")),
            }
        }
        Ok(q)
    }

    /// The checks [`SearchQuery::from_pairs`] applies, for queries built in
    /// code.
    pub fn validate(&self) -> Result<(), QueryError> {
        if let Some(k) = self.kinds.iter().find(|k| !k.is_core()) {
            return Err(bad("kinds", format!("{k} datasets are never distributed")));
        }
        if let Some(c) = self.categories.iter().find(|c| !is_valid_slug(c)) {
            return Err(bad("categories", format!("`{c}` is not a category slug")));
        }
        if let Some(t) = self.language_tag.as_ref().filter(|t| !is_valid_language_tag(t)) {
            return Err(bad("language_tag", format!("`{t}` is not a language tag")));
        }
        if self.page < 1 {
            return Err(bad("page", "must be a positive integer"));
        }
        if !(1..=MAX_PAGE_SIZE).contains(&self.page_size) {
            return Err(bad("page_size", format!("must be between 1 and {MAX_PAGE_SIZE}")));
        }
        Ok(())
    }

    /// `?`-prefixed query string, or empty for the default query.
    pub fn to_query_string(&self) -> String {
        let mut s = form_urlencoded::Serializer::new(String::new());
        if let Some(t) = &self.text {
            s.append_pair("text", t);
        }
        if !self.kinds.is_empty() {
            let kinds: Vec<&str> = self.kinds.iter().map(|k| k.as_str()).collect();
            s.append_pair("kinds", &kinds.join(","));
        }
        if !self.categories.is_empty() {
            let cats: Vec<&str> = self.categories.iter().map(String::as_str).collect();
            s.append_pair("categories", &cats.join(","));
        }
        if let Some(t) = &self.language_tag {
            s.append_pair("language_tag", t);
        }
        if self.page != 1 {
            s.append_pair("page", &self.page.to_string());
        }
        if self.page_size != DEFAULT_PAGE_SIZE {
            s.append_pair("page_size", &self.page_size.to_string());
        }
        let s = s.finish();
        if s.is_empty() {
            s
        } else {
            format!("?{s}")
        }
    }
}

/// Lowercase alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn token_matches(query: &str, word: &str) -> bool {
    word == query || (query.chars().count() >= PREFIX_MATCH_MIN && word.starts_with(query))
}

/// Number of distinct query tokens found in the record's titles,
/// descriptions and categories.
pub fn match_count(record: &MetadataRecord, query_tokens: &BTreeSet<String>) -> usize {
    let words: BTreeSet<String> = record
        .title
        .values()
        .chain(record.description.values())
        .chain(record.categories.iter())
        .flat_map(|t| tokenize(t))
        .collect();
    query_tokens
        .iter()
        .filter(|q| words.iter().any(|w| token_matches(q, w)))
        .count()
}

fn has_language(record: &MetadataRecord, tag: &str) -> bool {
    let tag = tag.to_ascii_lowercase();
    record.title.keys().chain(record.description.keys()).any(|t| {
        let t = t.to_ascii_lowercase();
        t == tag || t.starts_with(&format!("{tag}-"))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    #[serde(rename = "ref")]
    pub dataset: DatasetRef,
    pub title: BTreeMap<String, String>,
    pub kinds: Vec<ContentKind>,
    pub categories: BTreeSet<String>,
    pub catalogue_url: String,
    /// Query tokens matched; zero without a text query.
    pub matches: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchPage {
    pub total: usize,
    pub page: u32,
    pub page_size: u32,
    pub results: Vec<SearchHit>,
}

/// Filters, ranks and pages `records`. `url` gives each record's
/// catalogue URL.
pub fn search<'a>(
    records: impl IntoIterator<Item = &'a MetadataRecord>,
    query: &SearchQuery,
    url: impl Fn(&DatasetRef) -> String,
) -> SearchPage {
    let tokens: BTreeSet<String> = query.text.as_deref().map(tokenize).unwrap_or_default().into_iter().collect();
    let mut hits: Vec<(usize, &MetadataRecord)> = records
        .into_iter()
        .filter(|r| query.kinds.is_empty() || query.kinds.contains(&r.dataset.kind))
        .filter(|r| query.categories.is_subset(&r.categories))
        .filter(|r| query.language_tag.as_deref().is_none_or(|t| has_language(r, t)))
        .map(|r| (match_count(r, &tokens), r))
        .filter(|(n, _)| tokens.is_empty() || *n > 0)
        .collect();
    hits.sort_by(|(na, a), (nb, b)| {
        nb.cmp(na)
            .then_with(|| a.dataset.local_id.cmp(&b.dataset.local_id))
            .then_with(|| b.dataset.version.cmp(&a.dataset.version))
            .then_with(|| a.dataset.cmp(&b.dataset))
    });
    let total = hits.len();
    let skip = (query.page as usize - 1).saturating_mul(query.page_size as usize);
    let results = hits
        .into_iter()
        .skip(skip)
        .take(query.page_size as usize)
        .map(|(matches, r)| SearchHit {
            dataset: r.dataset.clone(),
            title: r.title.clone(),
            kinds: vec![r.dataset.kind],
            categories: r.categories.clone(),
            catalogue_url: url(&r.dataset),
            matches,
        })
        .collect();
    SearchPage {
        total,
        page: query.page,
        page_size: query.page_size,
        results,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DownloadPolicy, MetadataLinks};
    use chrono::Utc;

    fn record(local: &str, version: u32, kind: ContentKind, title: &str, description: (&str, &str)) -> MetadataRecord {
        MetadataRecord {
            dataset: DatasetRef::new("unitn", local, version, kind).unwrap(),
            title: [("en".to_string(), title.to_string())].into(),
            description: [(description.0.to_string(), description.1.to_string())].into(),
            categories: ["education".to_string()].into(),
            license: "CC0-1.0".into(),
            issued_at: Utc::now(),
            publisher: "UniTN".into(),
            download_policy: DownloadPolicy::Automatic,
            links: MetadataLinks::default(),
            content_hash: "0".repeat(64),
        }
    }

    fn pairs(q: &str) -> Vec<(String, String)> {
        form_urlencoded::parse(q.as_bytes()).into_owned().collect()
    }

    fn run(records: &[MetadataRecord], q: &str) -> Vec<String> {
        let q = SearchQuery::from_pairs(&pairs(q)).unwrap();
        search(records, &q, |r| r.catalogue_path())
            .results
            .into_iter()
            .map(|h| format!("{}.v{}", h.dataset.local_id, h.dataset.version))
            .collect()
    }

    #[test]
    fn italian_description_matches_professor() {
        let r = [record("uni", 1, ContentKind::Standardised, "University", ("it", "dati dei professori"))];
        assert_eq!(run(&r, "text=professor"), ["uni.v1"]);
        assert_eq!(run(&r, "text=Dati"), ["uni.v1"]);
        assert!(run(&r, "text=pro").is_empty());
    }

    #[test]
    fn ranking_by_matches_then_id_then_version() {
        let r = [
            record("b", 1, ContentKind::Graph, "courses", ("en", "x")),
            record("a", 1, ContentKind::Graph, "courses", ("en", "x")),
            record("a", 2, ContentKind::Graph, "courses", ("en", "x")),
            record("c", 1, ContentKind::Graph, "courses of professors", ("en", "x")),
            record("d", 1, ContentKind::Graph, "rivers", ("en", "x")),
        ];
        assert_eq!(run(&r, "text=courses+professors"), ["c.v1", "a.v2", "a.v1", "b.v1"]);
        assert_eq!(run(&r, "text=courses&page=2&page_size=3"), ["c.v1"]);
    }

    #[test]
    fn filters_are_conjunctive() {
        let mut r = vec![
            record("l", 1, ContentKind::Language, "words", ("mn", "үг")),
            record("k", 1, ContentKind::Knowledge, "words", ("en", "x")),
        ];
        r[1].categories.insert("linguistics".into());
        assert_eq!(run(&r, "kinds=Language"), ["l.v1"]);
        assert_eq!(run(&r, "kinds=language,knowledge&categories=linguistics"), ["k.v1"]);
        assert_eq!(run(&r, "language_tag=mn"), ["l.v1"]);
        assert!(run(&r, "kinds=graph&text=words").is_empty());
    }

    #[test]
    fn malformed_parameters_name_the_field() {
        for (q, field) in [
            ("page=0", "page"),
            ("page_size=101", "page_size"),
            ("kinds=low_quality", "kinds"),
            ("kinds=fish", "kinds"),
            ("categories=Not%20Slug", "categories"),
            ("language_tag=english!", "language_tag"),
            ("sort=asc", "sort"),
            ("page=1&page=2", "page"),
        ] {
            assert_eq!(SearchQuery::from_pairs(&pairs(q)).unwrap_err().field, field, "{q}");
        }
    }

    #[test]
    fn query_string_round_trip() {
        let q = SearchQuery::from_pairs(&pairs("text=dati%20professori&kinds=graph,language&page_size=5")).unwrap();
        let s = q.to_query_string();
        assert_eq!(SearchQuery::from_pairs(&pairs(&s[1..])).unwrap(), q);
        assert_eq!(SearchQuery::default().to_query_string(), "");
    }
}
