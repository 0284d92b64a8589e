//! One node: repository, pipeline, catalogue and federation wired together.
//! The administrator services (collection, transformation, distribution and
//! search) map onto the methods here.

use std::path::PathBuf;
use std::sync::Arc;

use crate::catalogue::Catalogue;
use crate::federation::{Clock, Federation, FederationError, HttpTransport, SystemClock, Transport};
use crate::formats::{canonical_bytes, graph_composition, parse_graph, parse_knowledge, parse_language, parse_source};
use crate::formats::{parse_standardised_bundle, FormatError};
use crate::model::{
    ContentKind, Context, Dataset, DatasetRef, DescriptiveFields, DownloadPolicy, GraphDataset, KnowledgeDataset,
    LanguageDataset, LocalId, MetadataRecord, NodeDescriptor, NodeId, SourceDataset, StandardisedDataset,
    ValidationError,
};
use crate::pipeline::{compose_graph, generate_metadata, run, sibling_ref, PipelineError, PipelineOutput, TransformConfig};
use crate::repository::{Partition, RepoError, Repository, RepositoryEntry, SrepSection};

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Federation(#[from] FederationError),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Usage(String),
}

impl NodeError {
    /// Filesystem, storage and network failures, as opposed to rejected
    /// input.
    pub fn is_io(&self) -> bool {
        fn storage(e: &RepoError) -> bool {
            matches!(e, RepoError::Io { .. } | RepoError::Json { .. } | RepoError::Corruption { .. })
        }
        match self {
            NodeError::Repo(e) | NodeError::Federation(FederationError::Repo(e)) => storage(e),
            NodeError::Federation(f) => f.is_transient() || matches!(f, FederationError::Integrity { .. }),
            _ => false,
        }
    }

    /// Short machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            NodeError::Repo(r) => match r {
                RepoError::NotInitialized(_) => "not_initialized",
                RepoError::AlreadyInitialized(_) => "already_initialized",
                RepoError::NotFound { .. } => "not_found",
                RepoError::VersionConflict { .. } => "version_conflict",
                RepoError::SectionMismatch { .. } => "section_mismatch",
                RepoError::HashMismatch { .. } => "hash_mismatch",
                RepoError::Corruption { .. } => "corruption",
                RepoError::Io { .. } => "io",
                RepoError::Invalid(_) => "invalid",
                _ => "repository",
            },
            NodeError::Pipeline(_) => "pipeline",
            NodeError::Format(_) => "format",
            NodeError::Federation(f) => match f {
                FederationError::UnknownPeer(_) => "unknown_peer",
                FederationError::Unreachable(_) => "unreachable",
                FederationError::Integrity { .. } => "integrity",
                FederationError::Policy { .. } => "policy",
                FederationError::Coverage { .. } => "coverage",
                FederationError::RemoteNotFound(_) => "not_found",
                _ => "federation",
            },
            NodeError::Invalid(_) => "invalid",
            NodeError::NotFound(_) => "not_found",
            NodeError::Usage(_) => "usage",
        }
    }
}

/// A parsed dataset with the datasets its canonical form depends on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loaded {
    pub entry: RepositoryEntry,
    pub dataset: Dataset,
    pub languages: Vec<LanguageDataset>,
    pub knowledge: Option<KnowledgeDataset>,
}

impl Loaded {
    pub fn context(&self) -> Context<'_> {
        let ctx = Context::new().with_languages(&self.languages);
        match &self.knowledge {
            Some(k) => ctx.with_knowledge(k),
            None => ctx,
        }
    }
}

/// The four pipeline outputs and their CREP entries, in S, L, K, G order.
#[derive(Debug, Clone)]
pub struct Transformed {
    pub output: PipelineOutput,
    pub entries: Vec<RepositoryEntry>,
}

#[derive(Debug, Clone)]
pub struct Composed {
    pub graph: GraphDataset,
    pub entry: RepositoryEntry,
}

pub struct Node {
    repo: Arc<Repository>,
    federation: Federation,
}

impl std::fmt::Debug for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Node").field("repo", &self.repo).finish_non_exhaustive()
    }
}

impl Node {
    pub fn init(root: impl Into<PathBuf>, descriptor: NodeDescriptor) -> Result<Node, NodeError> {
        Ok(Node::from_repository(Repository::init(root, descriptor)?))
    }

    /// Opens a repository with an HTTP transport and the system clock.
    pub fn open(root: impl Into<PathBuf>) -> Result<Node, NodeError> {
        Ok(Node::from_repository(Repository::open(root)?))
    }

    pub fn from_repository(repo: Repository) -> Node {
        Node::with_transport(repo, Arc::new(HttpTransport::default()), Arc::new(SystemClock))
    }

    pub fn with_transport(repo: Repository, transport: Arc<dyn Transport>, clock: Arc<dyn Clock>) -> Node {
        let repo = Arc::new(repo);
        let federation = Federation::new(repo.clone(), transport, clock);
        Node { repo, federation }
    }

    pub fn repository(&self) -> &Arc<Repository> {
        &self.repo
    }

    pub fn federation(&self) -> &Federation {
        &self.federation
    }

    pub fn descriptor(&self) -> &NodeDescriptor {
        self.repo.node()
    }

    pub fn catalogue(&self) -> Catalogue {
        Catalogue::new(self.repo.clone())
    }

    /// Stores a source file. Without a version, the next free one is used.
    pub fn collect(
        &self,
        bytes: &[u8],
        local_id: &LocalId,
        version: Option<u32>,
        section: SrepSection,
        provenance: &str,
    ) -> Result<RepositoryEntry, NodeError> {
        let kind = match section {
            SrepSection::LowQuality => ContentKind::LowQuality,
            SrepSection::ExternalLanguage => ContentKind::ExternalLanguage,
            SrepSection::ExternalReference => ContentKind::ExternalReference,
        };
        let version = match version {
            Some(v) => v,
            None => self.repo.latest_source(local_id.as_str())?.map_or(1, |e| e.dataset.version + 1),
        };
        let dataset = DatasetRef {
            node_id: self.descriptor().node_id.clone(),
            local_id: local_id.clone(),
            version,
            kind,
        };
        Ok(self.repo.ingest_source(bytes, &dataset, section, provenance)?)
    }

    /// Reads a low-quality source from SREP, the latest version by default.
    pub fn load_source(&self, local_id: &LocalId, version: Option<u32>) -> Result<SourceDataset, NodeError> {
        let entry = match version {
            Some(v) => {
                let r = DatasetRef {
                    node_id: self.descriptor().node_id.clone(),
                    local_id: local_id.clone(),
                    version: v,
                    kind: ContentKind::LowQuality,
                };
                self.repo.entry(&r, Partition::Srep)?
            }
            None => self
                .repo
                .latest_source(local_id.as_str())?
                .ok_or_else(|| NodeError::NotFound(format!("no source `{local_id}` in SREP")))?,
        };
        if entry.dataset.kind != ContentKind::LowQuality {
            return Err(NodeError::Usage(format!("{} is not a low-quality source", entry.dataset)));
        }
        let bytes = self.repo.get_bytes(&entry.dataset, Partition::Srep)?;
        let provenance = entry.provenance.clone().unwrap_or_default();
        Ok(parse_source(&bytes, &entry.dataset, &provenance, entry.stored_at)?)
    }

    /// Runs the pipeline on the configured sources and stores S, L, K and G
    /// in CREP.
    pub fn transform(&self, cfg: &TransformConfig) -> Result<Transformed, NodeError> {
        cfg.validate()?;
        let sources = cfg
            .tables
            .iter()
            .map(|t| self.load_source(&t.source, t.source_version))
            .collect::<Result<Vec<_>, _>>()?;
        let output = run(&sources, cfg, self.descriptor())?;
        let source_refs: Vec<DatasetRef> = sources.iter().map(|s| s.id.clone()).collect();
        let languages = std::slice::from_ref(&output.language);
        let s: Dataset = output.standardised.clone().into();
        let l: Dataset = output.language.clone().into();
        let k: Dataset = output.knowledge.clone().into();
        let g: Dataset = output.graph.clone().into();
        let plain = Context::new();
        let with_l = Context::new().with_languages(languages);
        let with_kl = with_l.with_knowledge(&output.knowledge);
        let steps: [(&Dataset, &Context<'_>, Vec<DatasetRef>); 4] = [
            (&s, &plain, source_refs),
            (&l, &plain, vec![s.id().clone()]),
            (&k, &with_l, vec![s.id().clone(), l.id().clone()]),
            (&g, &with_kl, Vec::new()),
        ];
        let mut entries = Vec::new();
        for (dataset, ctx, derived_from) in steps {
            let bytes = canonical_bytes(dataset, ctx)?;
            entries.push(self.repo.store_core(dataset, &bytes, ctx, &derived_from)?);
        }
        Ok(Transformed { output, entries })
    }

    /// Looks a dataset up by node, local id and version: CREP first, then
    /// SREP (fetched content). Without a version, the latest one is used.
    pub fn find(&self, node: Option<&NodeId>, local_id: &LocalId, version: Option<u32>) -> Result<RepositoryEntry, NodeError> {
        let node = node.unwrap_or(&self.descriptor().node_id);
        for partition in [Partition::Crep, Partition::Srep] {
            let found = self
                .repo
                .list(partition, &Default::default())?
                .into_iter()
                .filter(|e| &e.dataset.node_id == node && &e.dataset.local_id == local_id)
                .filter(|e| version.is_none_or(|v| e.dataset.version == v))
                .max_by_key(|e| e.dataset.version);
            if let Some(e) = found {
                return Ok(e);
            }
        }
        let v = version.map_or("latest".to_string(), |v| v.to_string());
        Err(NodeError::NotFound(format!("no dataset {node}/{local_id}/{v} in CREP or SREP")))
    }

    fn entry_for(&self, dataset: &DatasetRef) -> Result<RepositoryEntry, NodeError> {
        for partition in [Partition::Crep, Partition::Srep] {
            match self.repo.entry(dataset, partition) {
                Ok(e) => return Ok(e),
                Err(RepoError::NotFound { .. }) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(NodeError::NotFound(format!(
            "{dataset} is neither stored here nor fetched (try `fetch` first)"
        )))
    }

    /// Parses a stored stratified dataset together with the language and
    /// knowledge datasets it depends on.
    pub fn load(&self, dataset: &DatasetRef) -> Result<Loaded, NodeError> {
        let entry = self.entry_for(dataset)?;
        let bytes = self.repo.get_bytes(&entry.dataset, entry.partition)?;
        let id = &entry.dataset;
        let (dataset, languages, knowledge) = match id.kind {
            ContentKind::Standardised => (parse_standardised_bundle(&bytes)?.into(), Vec::new(), None),
            ContentKind::Language => (parse_language(&bytes, id)?.into(), Vec::new(), None),
            ContentKind::Knowledge => {
                let k = parse_knowledge(&bytes)?;
                let languages = self.load_languages(&k)?;
                (k.into(), languages, None)
            }
            ContentKind::Graph => {
                let (_, composition) = graph_composition(&bytes)?;
                let k = self.load(&composition.knowledge)?;
                let Dataset::Knowledge(knowledge) = k.dataset else {
                    return Err(NodeError::Usage(format!("{} is not a knowledge dataset", composition.knowledge)));
                };
                let g = parse_graph(&bytes, &knowledge)?;
                (g.into(), k.languages, Some(knowledge))
            }
            other => {
                return Err(NodeError::Usage(format!("{id} is raw {other} content, not a stratified dataset")));
            }
        };
        Ok(Loaded {
            entry,
            dataset,
            languages,
            knowledge,
        })
    }

    fn load_languages(&self, k: &KnowledgeDataset) -> Result<Vec<LanguageDataset>, NodeError> {
        k.language_refs
            .iter()
            .map(|r| match self.load(r)?.dataset {
                Dataset::Language(l) => Ok(l),
                _ => Err(NodeError::Usage(format!("{r} is not a language dataset"))),
            })
            .collect()
    }

    /// Builds the metadata record of a CREP dataset.
    pub fn metadata_for(
        &self,
        dataset: &DatasetRef,
        fields: &DescriptiveFields,
        policy: DownloadPolicy,
    ) -> Result<MetadataRecord, NodeError> {
        let entry = self.repo.entry(dataset, Partition::Crep)?;
        let loaded = self.load(&entry.dataset)?;
        let record = generate_metadata(
            &loaded.dataset,
            &loaded.context(),
            self.descriptor(),
            policy,
            fields,
            &entry.derived_from,
        )?;
        let peers = self.federation.registry()?;
        for r in record.links.all() {
            if r.node_id != self.descriptor().node_id && peers.get(&r.node_id).is_none() {
                return Err(FederationError::UnknownPeer(r.node_id.clone()).into());
            }
        }
        Ok(record)
    }

    /// Copies a CREP dataset into DREP with freshly generated metadata.
    pub fn distribute(
        &self,
        dataset: &DatasetRef,
        fields: &DescriptiveFields,
        policy: DownloadPolicy,
    ) -> Result<RepositoryEntry, NodeError> {
        let record = self.metadata_for(dataset, fields, policy)?;
        Ok(self.repo.promote_to_distribution(&record.dataset, &record)?)
    }

    /// Composes a graph from a local standardised dataset and a knowledge
    /// and language dataset fetched from a peer, and stores it in CREP.
    /// Without `output`, the graph is named `<base>-<peer>-graph`.
    pub fn cross_node_compose(
        &self,
        standardised: &DatasetRef,
        knowledge: &DatasetRef,
        language: &DatasetRef,
        output: Option<&LocalId>,
    ) -> Result<Composed, NodeError> {
        let own = &self.descriptor().node_id;
        let s = match self.load(&standardised.with_kind(ContentKind::Standardised))?.dataset {
            Dataset::Standardised(s) if &s.id.node_id == own => s,
            _ => return Err(NodeError::Usage(format!("{standardised} is not a local standardised dataset"))),
        };
        let loaded_k = self.load(&knowledge.with_kind(ContentKind::Knowledge))?;
        let Dataset::Knowledge(k) = &loaded_k.dataset else {
            return Err(NodeError::Usage(format!("{knowledge} is not a knowledge dataset")));
        };
        let l = match self.load(&language.with_kind(ContentKind::Language))?.dataset {
            Dataset::Language(l) => l,
            _ => return Err(NodeError::Usage(format!("{language} is not a language dataset"))),
        };
        let peers = self.federation.registry()?;
        for r in [&k.id, &l.id] {
            if &r.node_id != own && peers.get(&r.node_id).is_none() {
                return Err(FederationError::UnknownPeer(r.node_id.clone()).into());
            }
        }
        check_coverage(&s, k)?;
        let mut g = compose_graph(&s, &l, k, self.descriptor())?;
        g.id = match output {
            Some(local) => DatasetRef {
                local_id: local.clone(),
                ..g.id
            },
            None => {
                let base = sibling_ref(&s.id, ContentKind::Graph);
                let local = base.local_id.as_str().strip_suffix("-graph").unwrap_or(base.local_id.as_str());
                DatasetRef {
                    local_id: format!("{local}-{}-graph", k.id.node_id).parse()?,
                    ..base
                }
            }
        };
        let languages = std::slice::from_ref(&l);
        let ctx = Context::new()
            .with_languages(languages)
            .with_knowledge(k)
            .with_standardised(&s);
        let dataset: Dataset = g.clone().into();
        let bytes = canonical_bytes(&dataset, &ctx)?;
        let entry = self.repo.store_core(&dataset, &bytes, &ctx, &[])?;
        Ok(Composed { graph: g, entry })
    }
}

/// Every table of `s` needs a root etype of the same name in `k`.
pub fn check_coverage(s: &StandardisedDataset, k: &KnowledgeDataset) -> Result<(), FederationError> {
    let missing: Vec<String> = s
        .tables
        .iter()
        .filter(|t| k.etype(&t.name).is_none_or(|e| e.parent.is_some()))
        .map(|t| t.name.clone())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(FederationError::Coverage {
            knowledge: k.id.clone(),
            tables: missing,
        })
    }
}
