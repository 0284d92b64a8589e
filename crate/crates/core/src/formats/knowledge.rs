//! Knowledge datasets as an OWL vocabulary in Turtle.
//!
//! Classes and properties live in the namespace `<dataset iri>#`. Labels are
//! taken from the referenced language datasets on output and ignored on
//! input, since the concept annotation is the authoritative link.

use std::collections::BTreeMap;

use super::turtle::{Literal, Term, TurtleDocument, OWL, RDFS, RDF_TYPE, XSD};
use super::{utf8, FormatError};
use crate::model::{
    ContentKind, Datatype, DatasetRef, Discriminator, EType, KnowledgeDataset, LanguageDataset, Property,
    PropertyRange,
};

pub const VOCAB: &str = "https://w3id.org/livedata/vocab#";

pub(crate) fn xsd_for(datatype: Datatype) -> String {
    let local = match datatype {
        Datatype::String | Datatype::Identifier => "string",
        Datatype::Integer => "integer",
        Datatype::Decimal => "decimal",
        Datatype::Boolean => "boolean",
        Datatype::Date => "date",
    };
    format!("{XSD}{local}")
}

pub(crate) fn namespace(knowledge: &DatasetRef) -> String {
    format!("{}#", knowledge.iri())
}

fn vocab(term: &str) -> String {
    format!("{VOCAB}{term}")
}

fn string(s: &str) -> Term {
    Term::Literal(Literal::string(s))
}

pub fn serialize_knowledge(dataset: &KnowledgeDataset, languages: &[LanguageDataset]) -> Result<Vec<u8>, FormatError> {
    dataset.validate(None).into_result()?;
    let dataset = dataset.clone().canonicalized();
    let ns = namespace(&dataset.id);
    let mut doc = TurtleDocument::new();
    doc.prefix("k", &ns)
        .prefix("ld", VOCAB)
        .prefix("owl", OWL)
        .prefix("rdfs", RDFS)
        .prefix("xsd", XSD);

    let ontology = Term::iri(dataset.id.iri());
    doc.insert(ontology.clone(), RDF_TYPE, Term::iri(format!("{OWL}Ontology")));
    for l in &dataset.language_refs {
        doc.insert(ontology.clone(), vocab("usesLanguage"), Term::iri(l.iri()));
    }

    let referenced: Vec<&LanguageDataset> = languages
        .iter()
        .filter(|l| dataset.language_refs.iter().any(|r| r.same_version(&l.id)))
        .collect();
    let labels = |doc: &mut TurtleDocument, subject: &Term, concept: &str| {
        doc.insert(subject.clone(), vocab("concept"), string(concept));
        for c in referenced.iter().filter_map(|l| l.concept(concept)) {
            for lex in &c.lexicalizations {
                doc.insert(
                    subject.clone(),
                    format!("{RDFS}label"),
                    Term::Literal(Literal::lang(&lex.lemma, &lex.language_tag)),
                );
            }
        }
    };

    for e in &dataset.etypes {
        let class = Term::iri(format!("{ns}{}", e.etype_id));
        doc.insert(class.clone(), RDF_TYPE, Term::iri(format!("{OWL}Class")));
        labels(&mut doc, &class, &e.concept);
        if let Some(parent) = &e.parent {
            doc.insert(class.clone(), format!("{RDFS}subClassOf"), Term::iri(format!("{ns}{parent}")));
        }
        if let Some(key) = &e.key {
            doc.insert(class.clone(), vocab("keyProperty"), Term::iri(format!("{ns}{key}")));
        }
        if let Some(d) = &e.discriminator {
            doc.insert(class.clone(), vocab("discriminator"), Term::iri(format!("{ns}{}", d.property)));
            doc.insert(class.clone(), vocab("discriminatorValue"), string(&d.value));
        }
        for (position, p) in e.properties.iter().enumerate() {
            let prop = Term::iri(format!("{ns}{}", p.prop_id));
            labels(&mut doc, &prop, &p.concept);
            doc.insert(prop.clone(), format!("{RDFS}domain"), class.clone());
            doc.insert(
                prop.clone(),
                vocab("position"),
                Term::Literal(Literal::typed(position.to_string(), format!("{XSD}integer"))),
            );
            match &p.range {
                PropertyRange::Data(dt) => {
                    doc.insert(prop.clone(), RDF_TYPE, Term::iri(format!("{OWL}DatatypeProperty")));
                    doc.insert(prop.clone(), format!("{RDFS}range"), Term::iri(xsd_for(*dt)));
                    if *dt == Datatype::Identifier {
                        doc.insert(
                            prop.clone(),
                            vocab("identifier"),
                            Term::Literal(Literal::typed("true", format!("{XSD}boolean"))),
                        );
                    }
                }
                PropertyRange::Object(target) => {
                    doc.insert(prop.clone(), RDF_TYPE, Term::iri(format!("{OWL}ObjectProperty")));
                    doc.insert(prop.clone(), format!("{RDFS}range"), Term::iri(format!("{ns}{target}")));
                }
            }
        }
    }
    Ok(doc.serialize().into_bytes())
}

const PREDICATES: [&str; 12] = [
    RDF_TYPE,
    "http://www.w3.org/2000/01/rdf-schema#label",
    "http://www.w3.org/2000/01/rdf-schema#subClassOf",
    "http://www.w3.org/2000/01/rdf-schema#domain",
    "http://www.w3.org/2000/01/rdf-schema#range",
    "https://w3id.org/livedata/vocab#concept",
    "https://w3id.org/livedata/vocab#keyProperty",
    "https://w3id.org/livedata/vocab#discriminator",
    "https://w3id.org/livedata/vocab#discriminatorValue",
    "https://w3id.org/livedata/vocab#position",
    "https://w3id.org/livedata/vocab#identifier",
    "https://w3id.org/livedata/vocab#usesLanguage",
];

struct Reader<'a> {
    doc: &'a TurtleDocument,
    ns: String,
}

impl Reader<'_> {
    fn one<'t>(&'t self, subject: &'t Term, predicate: &str) -> Result<Option<&'t Term>, FormatError> {
        let objects = self.doc.objects(subject, predicate);
        let first = objects.first().copied();
        if objects.len() > 1 {
            return Err(FormatError::Structure(format!("{subject:?} has more than one <{predicate}>")));
        }
        Ok(first)
    }

    fn local(&self, term: &Term) -> Result<String, FormatError> {
        term.as_iri()
            .and_then(|iri| iri.strip_prefix(self.ns.as_str()))
            .map(str::to_owned)
            .ok_or_else(|| FormatError::Structure(format!("{term:?} is outside the namespace <{}>", self.ns)))
    }

    fn local_of(&self, subject: &Term, predicate: &str) -> Result<Option<String>, FormatError> {
        self.one(subject, predicate)?.map(|t| self.local(t)).transpose()
    }

    fn text(&self, subject: &Term, predicate: &str) -> Result<Option<String>, FormatError> {
        match self.one(subject, predicate)? {
            None => Ok(None),
            Some(Term::Literal(l)) if l.language.is_none() => Ok(Some(l.lexical.clone())),
            Some(other) => Err(FormatError::Structure(format!("<{predicate}> needs a plain literal, got {other:?}"))),
        }
    }

    fn concept(&self, subject: &Term) -> Result<String, FormatError> {
        self.text(subject, &vocab("concept"))?.ok_or_else(|| {
            FormatError::Structure(format!("{} has no concept annotation", subject.as_iri().unwrap_or("?")))
        })
    }
}

pub fn parse_knowledge(bytes: &[u8]) -> Result<KnowledgeDataset, FormatError> {
    let doc = TurtleDocument::parse(utf8(bytes)?)?;
    for t in &doc.triples {
        if !PREDICATES.contains(&t.predicate.as_str()) {
            return Err(FormatError::UnknownTerm(t.predicate.clone()));
        }
        if let Some(iri) = t.object.as_iri() {
            if iri.starts_with(VOCAB) || (t.predicate == RDF_TYPE && !iri.starts_with(OWL)) {
                return Err(FormatError::UnknownTerm(iri.to_owned()));
            }
        }
    }

    let ontology_class = format!("{OWL}Ontology");
    let ontologies = doc.subjects_of_type(&ontology_class);
    let [ontology] = ontologies.as_slice() else {
        return Err(FormatError::Structure(format!(
            "expected one owl:Ontology, found {}",
            ontologies.len()
        )));
    };
    let id = ontology
        .as_iri()
        .and_then(|iri| DatasetRef::from_iri(iri, ContentKind::Knowledge))
        .ok_or_else(|| FormatError::Structure(format!("{ontology:?} is not a dataset IRI")))?;
    let mut language_refs = Vec::new();
    for l in doc.objects(ontology, &vocab("usesLanguage")) {
        let r = l
            .as_iri()
            .and_then(|iri| DatasetRef::from_iri(iri, ContentKind::Language))
            .ok_or_else(|| FormatError::Structure(format!("{l:?} is not a dataset IRI")))?;
        language_refs.push(r);
    }

    let reader = Reader { doc: &doc, ns: namespace(&id) };
    let mut etypes: BTreeMap<String, EType> = BTreeMap::new();
    for class in doc.subjects_of_type(&format!("{OWL}Class")) {
        let etype_id = reader.local(class)?;
        let discriminator = match (
            reader.local_of(class, &vocab("discriminator"))?,
            reader.text(class, &vocab("discriminatorValue"))?,
        ) {
            (Some(property), Some(value)) => Some(Discriminator { property, value }),
            (None, None) => None,
            _ => {
                return Err(FormatError::Structure(format!(
                    "`{etype_id}` needs both discriminator and discriminatorValue"
                )))
            }
        };
        let etype = EType {
            concept: reader.concept(class)?,
            parent: reader.local_of(class, &format!("{RDFS}subClassOf"))?,
            key: reader.local_of(class, &vocab("keyProperty"))?,
            discriminator,
            properties: Vec::new(),
            etype_id: etype_id.clone(),
        };
        etypes.insert(etype_id, etype);
    }

    let mut positioned: BTreeMap<String, Vec<(u64, Property)>> = BTreeMap::new();
    for kind in ["DatatypeProperty", "ObjectProperty"] {
        for prop in doc.subjects_of_type(&format!("{OWL}{kind}")) {
            let prop_id = reader.local(prop)?;
            let domain = reader
                .local_of(prop, &format!("{RDFS}domain"))?
                .ok_or_else(|| FormatError::Structure(format!("property `{prop_id}` has no domain")))?;
            let range_term = reader
                .one(prop, &format!("{RDFS}range"))?
                .ok_or_else(|| FormatError::Structure(format!("property `{prop_id}` has no range")))?;
            let identifier = match reader.one(prop, &vocab("identifier"))? {
                None => false,
                Some(Term::Literal(l)) if l.lexical == "true" => true,
                Some(other) => return Err(FormatError::Structure(format!("bad identifier flag {other:?}"))),
            };
            let range = if kind == "DatatypeProperty" {
                let iri = range_term.as_iri().unwrap_or_default();
                let dt = Datatype::ALL
                    .into_iter()
                    .filter(|d| *d != Datatype::Identifier)
                    .find(|d| xsd_for(*d) == iri)
                    .ok_or_else(|| FormatError::UnknownTerm(iri.to_owned()))?;
                PropertyRange::Data(if identifier && dt == Datatype::String { Datatype::Identifier } else { dt })
            } else {
                PropertyRange::Object(reader.local(range_term)?)
            };
            let position = match reader.one(prop, &vocab("position"))? {
                Some(Term::Literal(l)) => l
                    .lexical
                    .parse()
                    .map_err(|_| FormatError::Structure(format!("bad position for `{prop_id}`")))?,
                _ => return Err(FormatError::Structure(format!("property `{prop_id}` has no position"))),
            };
            let property = Property {
                concept: reader.concept(prop)?,
                prop_id,
                range,
            };
            positioned.entry(domain).or_default().push((position, property));
        }
    }
    for (domain, mut props) in positioned {
        let etype = etypes
            .get_mut(&domain)
            .ok_or_else(|| FormatError::Structure(format!("property domain `{domain}` is not a class")))?;
        props.sort_by_key(|(pos, _)| *pos);
        etype.properties = props.into_iter().map(|(_, p)| p).collect();
    }

    let dataset = KnowledgeDataset {
        id,
        language_refs,
        etypes: etypes.into_values().collect(),
    }
    .canonicalized();
    dataset.validate(None).into_result()?;
    Ok(dataset)
}
