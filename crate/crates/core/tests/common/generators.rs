//! Seeded random (raw sources, config) fixtures and the round-trip laws
//! every fixture must satisfy.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Range, RangeInclusive};

use chrono::{DateTime, NaiveDate, Utc};
use livedata::formats::{
    parse_knowledge, parse_graph, parse_language, parse_metadata, parse_standardised_bundle, serialize_graph,
    serialize_knowledge, serialize_language, serialize_metadata, serialize_standardised_bundle,
};
use livedata::model::{
    ContentKind, Context, Dataset, DatasetRef, Datatype, DescriptiveFields, DownloadPolicy, Lexicalization,
    NodeDescriptor, SourceDataset,
};
use livedata::pipeline::{
    clean, decompose_graph, generate_metadata_at, run, ChildSpec, ColumnMapping, OutputSpec, PipelineOutput, RoleSpec,
    Specialization, TableMapping, TransformConfig,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub seed: u64,
    pub node: NodeDescriptor,
    pub sources: Vec<SourceDataset>,
    pub config: TransformConfig,
}

pub fn node() -> NodeDescriptor {
    NodeDescriptor {
        node_id: "gen".parse().unwrap(),
        name: "Generated".into(),
        domain_description: BTreeMap::new(),
        base_url: "http://gen.livedata.example".into(),
        publisher: "Generator".into(),
    }
}

const TABLES: [&str; 7] = ["professor", "course", "room", "student", "department", "project", "thesis"];
const HEADERS: [&str; 9] = [
    "Full Name",
    "Title",
    "Credits",
    "Start Date",
    "Weight",
    "Active",
    "Note",
    "Room Code",
    "Score",
];
const WORDS: [&str; 12] = [
    "dati", "professori", "Rossi", "Дорж", "хичээл", "a,b", "say \"hi\"", "naïve", "日本", "x y", "tab\there", "ok",
];
const DATATYPES: [Datatype; 6] = [
    Datatype::String,
    Datatype::Integer,
    Datatype::Decimal,
    Datatype::Boolean,
    Datatype::Date,
    Datatype::Identifier,
];

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn pad(&mut self, s: String) -> String {
        match self.rng.random_range(0..6) {
            0 => format!("  {s}"),
            1 => format!("{s} \t"),
            _ => s,
        }
    }

    fn null(&mut self) -> String {
        ["", "NA", "N/A", "-", "null", "   "].choose(&mut self.rng).unwrap().to_string()
    }

    fn date(&mut self) -> String {
        let d = NaiveDate::from_ymd_opt(self.rng.random_range(1990..2030), self.rng.random_range(1..13), self.rng.random_range(1..29))
            .unwrap();
        match self.rng.random_range(0..3) {
            0 => d.format("%Y-%m-%d").to_string(),
            1 => d.format("%d/%m/%Y").to_string(),
            _ => d.format("%Y/%m/%d").to_string(),
        }
    }

    fn integer(&mut self, n: i64) -> String {
        match self.rng.random_range(0..4) {
            0 if n >= 0 => format!("+{n}"),
            1 if n >= 0 => format!("00{n}"),
            _ => n.to_string(),
        }
    }

    fn cell(&mut self, dt: Datatype) -> String {
        let s = match dt {
            Datatype::String => {
                let n = self.rng.random_range(1..4);
                (0..n).map(|_| *WORDS.choose(&mut self.rng).unwrap()).collect::<Vec<_>>().join(" ")
            }
            Datatype::Integer => {
                let n = self.rng.random_range(-500..5000);
                self.integer(n)
            }
            Datatype::Decimal => format!(
                "{}{}.{}",
                if self.rng.random_bool(0.3) { "-" } else { "" },
                self.rng.random_range(0..1000),
                ["5", "50", "25", "0", "125"].choose(&mut self.rng).unwrap()
            ),
            Datatype::Boolean => ["yes", "no", "1", "0", "TRUE", "False"].choose(&mut self.rng).unwrap().to_string(),
            Datatype::Date => self.date(),
            Datatype::Identifier => format!("id-{}", self.rng.random_range(0..50)),
        };
        self.pad(s)
    }

    fn key(&mut self, dt: Datatype, j: usize) -> (String, String) {
        match dt {
            Datatype::Integer => {
                let v = j as i64 * 7 + 3;
                (v.to_string(), self.integer(v))
            }
            _ => {
                let v = ["k{}", "k/{}", "k#{}", "ü{}", "k%{}", "K {}"].choose(&mut self.rng).unwrap().replace("{}", &j.to_string());
                (v.clone(), v)
            }
        }
    }
}

struct TablePlan {
    name: String,
    key: Option<Datatype>,
    /// Raw key values, in a form `coerce` reads back to the key.
    keys: Vec<String>,
}

/// Size bounds for generated fixtures.
#[derive(Debug, Clone)]
pub struct Shape {
    pub tables: RangeInclusive<usize>,
    pub rows: Range<usize>,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { tables: 1..=3, rows: 0..8 }
    }
}

pub fn fixture(seed: u64) -> Fixture {
    fixture_with(seed, &Shape::default())
}

pub fn fixture_with(seed: u64, shape: &Shape) -> Fixture {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let node = node();
    let n_tables = g.rng.random_range(shape.tables.clone());
    let mut names: Vec<&str> = TABLES.to_vec();
    names.shuffle(&mut g.rng);
    let mut plans: Vec<TablePlan> = Vec::new();
    let mut mappings = Vec::new();
    let mut sources = Vec::new();
    let mut specializations = Vec::new();
    let mut lexicon: BTreeMap<String, Vec<Lexicalization>> = BTreeMap::new();
    let mut concepts: BTreeSet<String> = BTreeSet::new();

    for &name in names.iter().take(n_tables) {
        let key = g.rng.random_bool(0.75).then(|| {
            if g.rng.random_bool(0.8) {
                Datatype::Identifier
            } else {
                Datatype::Integer
            }
        });
        let n_rows = g.rng.random_range(shape.rows.clone());
        let keys: Vec<(String, String)> = match key {
            Some(dt) => (0..n_rows).map(|j| g.key(dt, j)).collect(),
            None => Vec::new(),
        };

        // (header, datatype, role, target, raw cell generator index)
        let mut columns: Vec<ColumnMapping> = Vec::new();
        enum Source {
            Key,
            Plain(Datatype),
            Foreign(usize),
            Discriminator(Vec<&'static str>),
        }
        let mut kinds: Vec<Source> = Vec::new();
        if let Some(dt) = key {
            columns.push(ColumnMapping {
                header: "ID".into(),
                attribute: Some("id".into()),
                datatype: dt,
                role: RoleSpec::PrimaryKey,
                target: None,
            });
            kinds.push(Source::Key);
        }
        let mut headers: Vec<&str> = HEADERS.to_vec();
        headers.shuffle(&mut g.rng);
        for &h in headers.iter().take(g.rng.random_range(1..=4)) {
            let dt = *DATATYPES.choose(&mut g.rng).unwrap();
            columns.push(ColumnMapping {
                header: h.into(),
                attribute: None,
                datatype: dt,
                role: RoleSpec::Plain,
                target: None,
            });
            kinds.push(Source::Plain(dt));
        }
        let targets: Vec<usize> = (0..plans.len()).filter(|&i| plans[i].key.is_some()).collect();
        if let Some(&t) = targets.choose(&mut g.rng) {
            if g.rng.random_bool(0.7) {
                let target = &plans[t];
                columns.push(ColumnMapping {
                    header: format!("{} Ref", target.name),
                    attribute: None,
                    datatype: target.key.unwrap(),
                    role: RoleSpec::ForeignKey,
                    target: Some(target.name.clone()),
                });
                kinds.push(Source::Foreign(t));
            }
        }
        if g.rng.random_bool(0.4) {
            let values: Vec<&'static str> = ["alpha", "beta", "gamma"][..g.rng.random_range(1..=3)].to_vec();
            columns.push(ColumnMapping {
                header: "Kind".into(),
                attribute: None,
                datatype: Datatype::String,
                role: RoleSpec::Plain,
                target: None,
            });
            let mut spec_values = BTreeMap::new();
            for v in ["alpha", "beta", "gamma"] {
                let child = format!("{v}_{name}");
                spec_values.insert(
                    v.to_string(),
                    ChildSpec {
                        etype: child.clone(),
                        concept: child.clone(),
                    },
                );
                lexicon.insert(
                    child.clone(),
                    vec![Lexicalization {
                        lemma: format!("{v} {name}"),
                        language_tag: "en".into(),
                        gloss: format!("a {name} of the {v} kind"),
                    }],
                );
            }
            specializations.push(Specialization {
                table: name.into(),
                attribute: "kind".into(),
                values: spec_values,
            });
            kinds.push(Source::Discriminator(values));
        }

        let mut rows: Vec<Vec<Option<String>>> = Vec::new();
        for j in 0..n_rows {
            let mut row = Vec::new();
            for k in &kinds {
                let cell = match k {
                    Source::Key => g.pad(keys[j].1.clone()),
                    Source::Plain(dt) => {
                        if g.rng.random_bool(0.15) {
                            g.null()
                        } else {
                            g.cell(*dt)
                        }
                    }
                    Source::Foreign(t) => {
                        let pool = &plans[*t].keys;
                        if pool.is_empty() || g.rng.random_bool(0.2) {
                            g.null()
                        } else {
                            pool.choose(&mut g.rng).unwrap().clone()
                        }
                    }
                    Source::Discriminator(values) => {
                        if g.rng.random_bool(0.1) {
                            g.null()
                        } else {
                            values.choose(&mut g.rng).unwrap().to_string()
                        }
                    }
                };
                row.push(Some(cell));
            }
            rows.push(row);
            if key.is_none() && g.rng.random_bool(0.2) {
                rows.push(rows.last().unwrap().clone());
            }
            if g.rng.random_bool(0.1) {
                rows.push(vec![Some(String::new()); kinds.len()]);
            }
        }

        for c in &columns {
            concepts.insert(c.attribute());
        }
        concepts.insert(name.to_string());
        let source_local = format!("{name}-raw");
        sources.push(SourceDataset {
            id: DatasetRef::new("gen", &source_local, 1, ContentKind::LowQuality).unwrap(),
            headers: columns
                .iter()
                .map(|c| if g.rng.random_bool(0.3) { format!(" {} ", c.header) } else { c.header.clone() })
                .collect(),
            rows,
            provenance: format!("seed {seed}"),
            retrieved_at: DateTime::<Utc>::from_timestamp(1_700_000_000, 0).unwrap(),
        });
        mappings.push(TableMapping {
            source: source_local.parse().unwrap(),
            source_version: None,
            table: name.into(),
            columns,
        });
        plans.push(TablePlan {
            name: name.into(),
            key,
            keys: keys.into_iter().map(|k| k.0).collect(),
        });
    }
    for c in concepts {
        if g.rng.random_bool(0.5) {
            let mut lexs = vec![Lexicalization {
                lemma: c.replace('_', " "),
                language_tag: "en".into(),
                gloss: format!("the {c} of a record"),
            }];
            if g.rng.random_bool(0.5) {
                lexs.push(Lexicalization {
                    lemma: format!("{c} (it)"),
                    language_tag: "it".into(),
                    gloss: format!("il campo {c}"),
                });
            }
            lexicon.entry(c).or_insert(lexs);
        }
    }
    let config = TransformConfig {
        output: OutputSpec {
            local_id: format!("gen{seed}").parse().unwrap(),
            version: 1,
        },
        default_language_tag: "en".into(),
        null_markers: ["", "NA", "N/A", "-", "null"].into_iter().map(String::from).collect(),
        tables: mappings,
        lexicon,
        specializations,
    };
    config.validate().unwrap();
    Fixture {
        seed,
        node,
        sources,
        config,
    }
}

fn fields() -> DescriptiveFields {
    DescriptiveFields {
        title: [("en".to_string(), "Generated".to_string())].into(),
        description: [("en".to_string(), "generated fixture".to_string())].into(),
        categories: ["test".to_string()].into(),
        license: "CC0-1.0".into(),
    }
}

/// Clean idempotence, serialize/parse equality for the five formats, and
/// compose/decompose equality. Returns the pipeline output.
pub fn round_trip(f: &Fixture) -> Result<PipelineOutput, String> {
    let ctx = |what: &str| format!("seed {} {what}", f.seed);
    for s in &f.sources {
        let once = clean(s, &f.config);
        if clean(&once, &f.config) != once {
            return Err(ctx(&format!("clean is not idempotent on {}", s.id)));
        }
    }
    let out = run(&f.sources, &f.config, &f.node).map_err(|e| ctx(&format!("pipeline: {e}")))?;
    let err = |what: &str, e: &dyn std::fmt::Display| ctx(&format!("{what}: {e}"));

    let bytes = serialize_standardised_bundle(&out.standardised).map_err(|e| err("serialize S", &e))?;
    if parse_standardised_bundle(&bytes).map_err(|e| err("parse S", &e))? != out.standardised {
        return Err(ctx("S round trip"));
    }
    let bytes = serialize_language(&out.language).map_err(|e| err("serialize L", &e))?;
    if parse_language(&bytes, &out.language.id).map_err(|e| err("parse L", &e))? != out.language {
        return Err(ctx("L round trip"));
    }
    let languages = std::slice::from_ref(&out.language);
    let bytes = serialize_knowledge(&out.knowledge, languages).map_err(|e| err("serialize K", &e))?;
    if parse_knowledge(&bytes).map_err(|e| err("parse K", &e))? != out.knowledge {
        return Err(ctx("K round trip"));
    }
    let bytes = serialize_graph(&out.graph).map_err(|e| err("serialize G", &e))?;
    if parse_graph(&bytes, &out.knowledge).map_err(|e| err("parse G", &e))? != out.graph {
        return Err(ctx("G round trip"));
    }
    let issued = DateTime::<Utc>::from_timestamp(1_700_000_000, 0).unwrap();
    let full = Context::new().with_languages(languages).with_knowledge(&out.knowledge);
    for d in [
        Dataset::from(out.standardised.clone()),
        out.language.clone().into(),
        out.knowledge.clone().into(),
        out.graph.clone().into(),
    ] {
        let m = generate_metadata_at(&d, &full, &f.node, DownloadPolicy::Automatic, &fields(), &[], issued)
            .map_err(|e| err("metadata", &e))?;
        let bytes = serialize_metadata(&m).map_err(|e| err("serialize metadata", &e))?;
        if parse_metadata(&bytes).map_err(|e| err("parse metadata", &e))? != m {
            return Err(ctx("metadata round trip"));
        }
    }
    let back = decompose_graph(&out.graph, &out.language, &out.knowledge).map_err(|e| err("decompose", &e))?;
    if back.canonicalized() != out.standardised.clone().canonicalized() {
        return Err(ctx("compose/decompose"));
    }
    Ok(out)
}
