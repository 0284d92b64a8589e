use std::fmt;

use serde::Serialize;

use super::{Dataset, KnowledgeDataset, LanguageDataset, StandardisedDataset};

/// A single violated invariant, identified by a stable rule code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.rule, self.message)
    }
}

/// First violated invariant of a value that was required to be valid.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ValidationError(pub Violation);

impl ValidationError {
    pub fn new(rule: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError(Violation {
            rule: rule.into(),
            message: message.into(),
        })
    }

    pub fn rule(&self) -> &str {
        &self.0.rule
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn push(&mut self, rule: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            rule: rule.to_owned(),
            message: message.into(),
        });
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn into_result(self) -> Result<(), ValidationError> {
        match self.violations.into_iter().next() {
            Some(v) => Err(ValidationError(v)),
            None => Ok(()),
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Referenced datasets used for cross-dataset checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct Context<'a> {
    pub languages: &'a [LanguageDataset],
    pub knowledge: Option<&'a KnowledgeDataset>,
    pub standardised: Option<&'a StandardisedDataset>,
}

impl<'a> Context<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_languages(mut self, languages: &'a [LanguageDataset]) -> Self {
        self.languages = languages;
        self
    }

    pub fn with_knowledge(mut self, knowledge: &'a KnowledgeDataset) -> Self {
        self.knowledge = Some(knowledge);
        self
    }

    pub fn with_standardised(mut self, standardised: &'a StandardisedDataset) -> Self {
        self.standardised = Some(standardised);
        self
    }
}

/// Checks every invariant of `dataset`. Cross-dataset invariants are only
/// checked when `context` is given.
pub fn validate(dataset: &Dataset, context: Option<&Context<'_>>) -> ValidationReport {
    match dataset {
        Dataset::Standardised(s) => s.validate(),
        Dataset::Language(l) => l.validate(),
        Dataset::Knowledge(k) => k.validate(context),
        Dataset::Graph(g) => g.validate(context),
    }
}
