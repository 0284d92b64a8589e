//! Graph datasets as Turtle instance data over the knowledge vocabulary.

use super::knowledge::{namespace, xsd_for};
use super::turtle::{Literal as TurtleLiteral, Term, TurtleDocument, RDF_TYPE, XSD};
use super::{utf8, FormatError, VOCAB};
use crate::model::{
    Composition, Context, ContentKind, DatasetRef, Entity, GraphDataset, KnowledgeDataset, Link, Literal,
    PropertyRange, Value,
};

fn vocab(term: &str) -> String {
    format!("{VOCAB}{term}")
}

fn literal_term(value: &Value) -> Term {
    let datatype = xsd_for(value.datatype());
    Term::Literal(TurtleLiteral::typed(value.lexical(), datatype))
}

pub fn serialize_graph(dataset: &GraphDataset) -> Result<Vec<u8>, FormatError> {
    dataset.validate(None).into_result()?;
    let dataset = dataset.clone().canonicalized();
    let ns = namespace(&dataset.composed_of.knowledge);
    let mut doc = TurtleDocument::new();
    doc.prefix("k", &ns).prefix("ld", VOCAB).prefix("xsd", XSD);

    let node = Term::iri(dataset.id.iri());
    let c = &dataset.composed_of;
    doc.insert(node.clone(), RDF_TYPE, Term::iri(vocab("GraphDataset")));
    doc.insert(node.clone(), vocab("standardised"), Term::iri(c.standardised.iri()));
    doc.insert(node.clone(), vocab("language"), Term::iri(c.language.iri()));
    doc.insert(node.clone(), vocab("knowledge"), Term::iri(c.knowledge.iri()));
    for t in &dataset.tables {
        doc.insert(node.clone(), vocab("table"), Term::iri(format!("{ns}{t}")));
    }
    for e in &dataset.entities {
        let subject = Term::iri(&e.iri);
        doc.insert(subject.clone(), RDF_TYPE, Term::iri(format!("{ns}{}", e.etype)));
        for l in &e.literals {
            doc.insert(subject.clone(), format!("{ns}{}", l.property), literal_term(&l.value));
        }
        for l in &e.links {
            doc.insert(subject.clone(), format!("{ns}{}", l.property), Term::iri(&l.target));
        }
    }
    Ok(doc.serialize().into_bytes())
}

fn dataset_node(doc: &TurtleDocument) -> Result<(DatasetRef, Composition, &Term), FormatError> {
    let class = vocab("GraphDataset");
    let nodes = doc.subjects_of_type(&class);
    let [node] = nodes.as_slice() else {
        return Err(FormatError::Structure(format!(
            "expected one ld:GraphDataset, found {}",
            nodes.len()
        )));
    };
    let as_ref = |term: Option<&Term>, kind: ContentKind, what: &str| {
        term.and_then(Term::as_iri)
            .and_then(|iri| DatasetRef::from_iri(iri, kind))
            .ok_or_else(|| FormatError::Structure(format!("graph {what} reference is missing or malformed")))
    };
    let one = |predicate: &str| {
        let objects = doc.objects(node, predicate);
        match objects.as_slice() {
            [] => Ok(None),
            [one] => Ok(Some(*one)),
            _ => Err(FormatError::Structure(format!("graph has several <{predicate}>"))),
        }
    };
    let id = as_ref(Some(node), ContentKind::Graph, "dataset")?;
    let composition = Composition {
        standardised: as_ref(one(&vocab("standardised"))?, ContentKind::Standardised, "standardised")?,
        language: as_ref(one(&vocab("language"))?, ContentKind::Language, "language")?,
        knowledge: as_ref(one(&vocab("knowledge"))?, ContentKind::Knowledge, "knowledge")?,
    };
    Ok((id, composition, node))
}

/// Reads only the dataset node: the graph ref and what it was composed of.
pub fn graph_composition(bytes: &[u8]) -> Result<(DatasetRef, Composition), FormatError> {
    let doc = TurtleDocument::parse(utf8(bytes)?)?;
    dataset_node(&doc).map(|(id, c, _)| (id, c))
}

/// Every predicate must be a property declared by `knowledge`, every type
/// one of its ETypes.
pub fn parse_graph(bytes: &[u8], knowledge: &KnowledgeDataset) -> Result<GraphDataset, FormatError> {
    let doc = TurtleDocument::parse(utf8(bytes)?)?;
    let (id, composed_of, node) = dataset_node(&doc)?;
    if !composed_of.knowledge.same_version(&knowledge.id) {
        return Err(FormatError::Structure(format!(
            "graph was composed with {} but {} was supplied",
            composed_of.knowledge, knowledge.id
        )));
    }
    let ns = namespace(&knowledge.id);
    let local = |iri: &str| iri.strip_prefix(ns.as_str()).map(str::to_owned);

    let mut tables = Vec::new();
    for t in &doc.triples {
        if &t.subject != node {
            continue;
        }
        match t.predicate.strip_prefix(VOCAB) {
            Some("table") => {
                let table = t
                    .object
                    .as_iri()
                    .and_then(local)
                    .filter(|e| knowledge.etype(e).is_some())
                    .ok_or_else(|| FormatError::Structure(format!("table {:?} is not a knowledge etype", t.object)))?;
                tables.push(table);
            }
            Some("standardised" | "language" | "knowledge") => {}
            _ if t.predicate == RDF_TYPE => {}
            _ => return Err(FormatError::UnknownTerm(t.predicate.clone())),
        }
    }

    let mut entities = Vec::new();
    for subject in doc.subjects() {
        if subject == node {
            continue;
        }
        let Some(iri) = subject.as_iri() else {
            return Err(FormatError::Structure(format!("entity subject {subject:?} is not an IRI")));
        };
        let mut etype = None;
        let mut literals = Vec::new();
        let mut links = Vec::new();
        for t in doc.triples.iter().filter(|t| &t.subject == subject) {
            if t.predicate == RDF_TYPE {
                let e = t
                    .object
                    .as_iri()
                    .and_then(local)
                    .filter(|e| knowledge.etype(e).is_some())
                    .ok_or_else(|| FormatError::UnknownTerm(t.object.as_iri().unwrap_or("literal").to_owned()))?;
                if etype.replace(e).is_some() {
                    return Err(FormatError::Structure(format!("<{iri}> has several types")));
                }
                continue;
            }
            let (prop_id, property) = local(&t.predicate)
                .and_then(|p| knowledge.property(&p).map(|(_, prop)| (p, prop)))
                .ok_or_else(|| FormatError::UndeclaredPredicate(t.predicate.clone()))?;
            match (&property.range, &t.object) {
                (PropertyRange::Data(dt), Term::Literal(l)) => {
                    let value = (l.datatype == xsd_for(*dt) && l.language.is_none())
                        .then(|| Value::parse_lexical(*dt, &l.lexical))
                        .flatten()
                        .ok_or_else(|| {
                            FormatError::Structure(format!("<{iri}> {prop_id}: `{}` is not a valid {dt}", l.lexical))
                        })?;
                    literals.push(Literal { property: prop_id, value });
                }
                (PropertyRange::Object(_), Term::Iri(target)) => links.push(Link {
                    property: prop_id,
                    target: target.clone(),
                }),
                _ => {
                    return Err(FormatError::Structure(format!(
                        "<{iri}> {prop_id}: object does not match the property range"
                    )))
                }
            }
        }
        let etype = etype.ok_or_else(|| FormatError::Structure(format!("<{iri}> has no type")))?;
        entities.push(Entity {
            iri: iri.to_owned(),
            etype,
            literals,
            links,
        });
    }

    let dataset = GraphDataset {
        id,
        composed_of,
        tables,
        entities,
    }
    .canonicalized();
    dataset
        .validate(Some(&Context::new().with_knowledge(knowledge)))
        .into_result()?;
    Ok(dataset)
}
