use std::collections::{HashMap, HashSet};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};

use super::{sibling_ref, PipelineError};
use crate::formats::csv::write_record;
use crate::formats::sha256_hex;
use crate::model::{
    Cell, Column, Composition, ContentKind, Context, EType, Entity, GraphDataset, KnowledgeDataset, LanguageDataset,
    Link, Literal, NodeDescriptor, PropertyRange, Role, StandardisedDataset, Table, Value,
};

/// Characters kept verbatim in a key path segment (RFC 3986 unreserved).
const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

/// `<base_url>/resource/<local_id>/<table>/<segment>`
pub fn entity_iri(node: &NodeDescriptor, s_local: &str, table: &str, segment: &str) -> String {
    format!(
        "{}/resource/{s_local}/{table}/{}",
        node.base_url,
        utf8_percent_encode(segment, SEGMENT)
    )
}

/// First 16 hex digits of the SHA-256 of the row's canonical CSV line.
pub fn row_hash(row: &[Cell]) -> String {
    let lexical: Vec<Option<String>> = row.iter().map(|c| c.as_ref().map(Value::lexical)).collect();
    let mut line = String::new();
    write_record(&mut line, lexical.iter().map(Option::as_deref));
    sha256_hex(line.as_bytes())[..16].to_owned()
}

fn prop_id(table: &str, attribute: &str) -> String {
    format!("{table}.{attribute}")
}

/// Checks that the table EType declares exactly the table's columns, in
/// order, with matching datatypes and roles.
fn check_table(t: &Table, root: &EType, k: &KnowledgeDataset, s: &StandardisedDataset) -> Result<(), PipelineError> {
    let fail = |m: String| Err(PipelineError::Compose(format!("table `{}`: {m}", t.name)));
    if root.properties.len() != t.columns.len() {
        return fail(format!(
            "{} columns but etype declares {} properties",
            t.columns.len(),
            root.properties.len()
        ));
    }
    for (c, p) in t.columns.iter().zip(&root.properties) {
        let id = prop_id(&t.name, &c.attribute);
        if p.prop_id != id {
            return fail(format!("column `{}` does not match property `{}`", c.attribute, p.prop_id));
        }
        let is_key = root.key.as_deref() == Some(id.as_str());
        let ok = match (&c.role, &p.range) {
            (Role::PrimaryKey, PropertyRange::Data(dt)) => is_key && *dt == c.datatype,
            (Role::Plain, PropertyRange::Data(dt)) => !is_key && *dt == c.datatype,
            (Role::ForeignKey(target), PropertyRange::Object(range)) => {
                target == range && k.etype(range).is_some_and(|e| e.parent.is_none()) && s.table(target).is_some()
            }
            _ => false,
        };
        if !ok {
            return fail(format!("column `{}` does not agree with property `{id}`", c.attribute));
        }
    }
    Ok(())
}

/// Most specific EType for a row, plus the discriminator properties consumed.
fn type_row<'k>(k: &'k KnowledgeDataset, root: &'k EType, t: &Table, row: &[Cell]) -> (&'k EType, HashSet<String>) {
    let mut current = root;
    let mut consumed = HashSet::new();
    'descend: loop {
        for child in k.children(&current.etype_id) {
            let Some(d) = &child.discriminator else { continue };
            let Some(attribute) = d.property.strip_prefix(&format!("{}.", t.name)) else {
                continue;
            };
            let matches = t
                .column_index(attribute)
                .and_then(|i| row[i].as_ref())
                .is_some_and(|v| v.lexical() == d.value);
            if matches {
                consumed.insert(d.property.clone());
                current = child;
                continue 'descend;
            }
        }
        return (current, consumed);
    }
}

/// Merges S, L and K into a graph: one entity per row, typed by the most
/// specific EType, with foreign keys as links.
pub fn compose_graph(
    s: &StandardisedDataset,
    l: &LanguageDataset,
    k: &KnowledgeDataset,
    node: &NodeDescriptor,
) -> Result<GraphDataset, PipelineError> {
    s.validate().into_result()?;
    let languages = std::slice::from_ref(l);
    k.validate(Some(&Context::new().with_languages(languages))).into_result()?;
    if !k.language_refs.iter().any(|r| r.same_version(&l.id)) {
        return Err(PipelineError::Compose(format!("{} does not use {}", k.id, l.id)));
    }
    let s = s.clone().canonicalized();
    let s_local = s.id.local_id.as_str();

    let mut key_iris: HashMap<(&str, &Value), String> = HashMap::new();
    for t in &s.tables {
        let root = k
            .etype(&t.name)
            .filter(|e| e.parent.is_none())
            .ok_or_else(|| PipelineError::Compose(format!("no table etype `{}` in {}", t.name, k.id)))?;
        check_table(t, root, k, &s)?;
        if let Some(pk) = t.primary_key_index() {
            for row in &t.rows {
                if let Some(v) = &row[pk] {
                    key_iris.insert((t.name.as_str(), v), entity_iri(node, s_local, &t.name, &v.lexical()));
                }
            }
        }
    }

    let mut entities = Vec::new();
    for t in &s.tables {
        let root = k.etype(&t.name).expect("checked above");
        let pk = t.primary_key_index();
        let mut hash_uses: HashMap<String, usize> = HashMap::new();
        for row in &t.rows {
            let iri = match pk.and_then(|i| row[i].as_ref()) {
                Some(v) => key_iris[&(t.name.as_str(), v)].clone(),
                None => {
                    let hash = row_hash(row);
                    let n = hash_uses.entry(hash.clone()).or_insert(0);
                    *n += 1;
                    let segment = if *n == 1 { hash } else { format!("{hash}-{n}") };
                    entity_iri(node, s_local, &t.name, &segment)
                }
            };
            let (etype, consumed) = type_row(k, root, t, row);
            let mut literals = Vec::new();
            let mut links = Vec::new();
            for (c, cell) in t.columns.iter().zip(row) {
                let Some(value) = cell else { continue };
                let property = prop_id(&t.name, &c.attribute);
                match &c.role {
                    Role::ForeignKey(target) => {
                        let target_iri = key_iris.get(&(target.as_str(), value)).ok_or_else(|| {
                            PipelineError::Compose(format!("{property} `{value}` has no row in `{target}`"))
                        })?;
                        links.push(Link {
                            property,
                            target: target_iri.clone(),
                        });
                    }
                    _ if consumed.contains(&property) => {}
                    _ => literals.push(Literal {
                        property,
                        value: value.clone(),
                    }),
                }
            }
            entities.push(Entity {
                iri,
                etype: etype.etype_id.clone(),
                literals,
                links,
            });
        }
    }

    let mut g_id = sibling_ref(&s.id, ContentKind::Graph);
    g_id.node_id = node.node_id.clone();
    let graph = GraphDataset {
        id: g_id,
        composed_of: Composition {
            standardised: s.id.clone(),
            language: l.id.clone(),
            knowledge: k.id.clone(),
        },
        tables: s.tables.iter().map(|t| t.name.clone()).collect(),
        entities,
    }
    .canonicalized();
    let context = Context::new().with_languages(languages).with_knowledge(k).with_standardised(&s);
    graph.validate(Some(&context)).into_result()?;
    Ok(graph)
}

/// Rebuilds the standardised dataset a graph was composed from.
pub fn decompose_graph(
    g: &GraphDataset,
    l: &LanguageDataset,
    k: &KnowledgeDataset,
) -> Result<StandardisedDataset, PipelineError> {
    let fail = |m: String| PipelineError::Decompose(m);
    for e in &g.entities {
        if k.etype(&e.etype).is_none() {
            return Err(fail(format!("<{}> is typed by `{}`, absent from {}", e.iri, e.etype, k.id)));
        }
    }
    let languages = std::slice::from_ref(l);
    g.validate(Some(&Context::new().with_languages(languages).with_knowledge(k)))
        .into_result()?;
    let by_iri: HashMap<&str, &Entity> = g.entities.iter().map(|e| (e.iri.as_str(), e)).collect();

    let mut tables = Vec::new();
    for name in &g.tables {
        let root = k.etype(name).ok_or_else(|| fail(format!("table `{name}` is not in {}", k.id)))?;
        let mut columns = Vec::new();
        for p in &root.properties {
            let (datatype, role) = match &p.range {
                PropertyRange::Data(dt) if root.key.as_deref() == Some(p.prop_id.as_str()) => (*dt, Role::PrimaryKey),
                PropertyRange::Data(dt) => (*dt, Role::Plain),
                PropertyRange::Object(target) => {
                    let key = k
                        .etype(target)
                        .and_then(|t| t.key.as_deref())
                        .and_then(|key| k.property(key))
                        .ok_or_else(|| fail(format!("`{}` targets `{target}` which has no key", p.prop_id)))?;
                    match key.1.range {
                        PropertyRange::Data(dt) => (dt, Role::ForeignKey(target.clone())),
                        PropertyRange::Object(_) => return Err(fail(format!("key of `{target}` is a link"))),
                    }
                }
            };
            columns.push(Column {
                attribute: p.attribute().to_owned(),
                datatype,
                role,
            });
        }
        let index: HashMap<&str, usize> = root.properties.iter().enumerate().map(|(i, p)| (p.prop_id.as_str(), i)).collect();
        let column_of = |e: &Entity, property: &str| {
            index
                .get(property)
                .copied()
                .ok_or_else(|| fail(format!("<{}>: `{property}` is not a column of `{name}`", e.iri)))
        };

        let mut rows = Vec::new();
        for e in g.entities.iter().filter(|e| k.root_of(&e.etype).is_some_and(|r| &r.etype_id == name)) {
            let mut row: Vec<Cell> = vec![None; columns.len()];
            let set = |i: usize, v: Value, row: &mut Vec<Cell>| {
                if row[i].replace(v).is_some() {
                    return Err(fail(format!("<{}> has two values for `{}`", e.iri, root.properties[i].prop_id)));
                }
                Ok(())
            };
            for ancestor in k.lineage(&e.etype) {
                if let Some(d) = &ancestor.discriminator {
                    let i = column_of(e, &d.property)?;
                    let value = Value::parse_lexical(columns[i].datatype, &d.value)
                        .ok_or_else(|| fail(format!("discriminator value `{}` is not a {}", d.value, columns[i].datatype)))?;
                    set(i, value, &mut row)?;
                }
            }
            for lit in &e.literals {
                let i = column_of(e, &lit.property)?;
                set(i, lit.value.clone(), &mut row)?;
            }
            for link in &e.links {
                let i = column_of(e, &link.property)?;
                let Role::ForeignKey(target) = &columns[i].role else {
                    return Err(fail(format!("`{}` is not a foreign key", link.property)));
                };
                let target_entity = by_iri
                    .get(link.target.as_str())
                    .ok_or_else(|| fail(format!("<{}> links to missing <{}>", e.iri, link.target)))?;
                let key = k.etype(target).and_then(|t| t.key.as_deref()).unwrap_or_default();
                let value = target_entity
                    .literals
                    .iter()
                    .find(|l| l.property == key)
                    .map(|l| l.value.clone())
                    .ok_or_else(|| fail(format!("<{}> has no `{key}` literal", link.target)))?;
                set(i, value, &mut row)?;
            }
            rows.push(row);
        }
        tables.push(Table {
            name: name.clone(),
            columns,
            rows,
        });
    }
    let dataset = StandardisedDataset {
        id: g.composed_of.standardised.clone(),
        tables,
    }
    .canonicalized();
    dataset.validate().into_result()?;
    Ok(dataset)
}
