//! Peer registry and pull-based access to other nodes' catalogues.
//!
//! Every remote call goes through the peer's public catalogue API; there is
//! no separate federation protocol. Remote metadata is cached for the
//! registry's TTL, and fetched bytes are only kept when they hash to the
//! content hash the peer advertises.

mod registry;
mod transport;

pub use registry::{PeerRegistry, DEFAULT_TTL_SECONDS, PEERS_FILE};
pub use transport::{
    Clock, HttpTransport, InProcessTransport, ManualClock, SystemClock, Transport, TransportError, TransportResponse,
};

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, TimeDelta, Utc};
use serde::Deserialize;

use crate::catalogue::{DatasetDetail, NodeSummary, SearchPage, SearchQuery};
use crate::formats::sha256_hex;
use crate::model::{DatasetRef, LocalId, MetadataRecord, NodeDescriptor, NodeId, ValidationError};
use crate::pipeline::PipelineError;
use crate::repository::{lock_file, Partition, RepoError, Repository, RepositoryEntry, SrepSection};

#[derive(Debug, thiserror::Error)]
pub enum FederationError {
    #[error("node `{0}` is not a registered peer")]
    UnknownPeer(NodeId),
    #[error("`{0}` is this node's own id")]
    OwnNode(NodeId),
    #[error("peer `{0}` is already registered with a different descriptor; remove it first")]
    PeerConflict(NodeId),
    #[error(transparent)]
    Unreachable(#[from] TransportError),
    #[error("{0} is not published by its node")]
    RemoteNotFound(DatasetRef),
    #[error("peer answered {status} ({code}): {message}")]
    Remote { status: u16, code: String, message: String },
    #[error("download refused: {message}")]
    Policy { message: String },
    #[error("{dataset}: received bytes hash to {actual}, peer advertises {expected}; bytes discarded")]
    Integrity {
        dataset: DatasetRef,
        expected: String,
        actual: String,
    },
    #[error("peer sent an unusable response: {0}")]
    BadResponse(String),
    #[error("knowledge dataset {knowledge} has no etype for tables: {}", tables.join(", "))]
    Coverage { knowledge: DatasetRef, tables: Vec<String> },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Repo(#[from] RepoError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl FederationError {
    /// Failures caused by the network rather than by content or usage.
    pub fn is_transient(&self) -> bool {
        matches!(self, FederationError::Unreachable(_))
            || matches!(self, FederationError::Remote { status, .. } if *status >= 500)
    }
}

/// A verified remote dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedDataset {
    pub metadata: MetadataRecord,
    pub bytes: Vec<u8>,
    pub url: String,
}

#[derive(Deserialize)]
struct ErrorBody {
    error: ErrorDetail,
}

#[derive(Deserialize)]
struct ErrorDetail {
    code: String,
    message: String,
}

fn remote_error(resp: &TransportResponse) -> FederationError {
    match serde_json::from_slice::<ErrorBody>(&resp.body) {
        Ok(b) => FederationError::Remote {
            status: resp.status,
            code: b.error.code,
            message: b.error.message,
        },
        Err(_) => FederationError::Remote {
            status: resp.status,
            code: "unknown".into(),
            message: String::from_utf8_lossy(&resp.body).chars().take(200).collect(),
        },
    }
}

fn decode<T: serde::de::DeserializeOwned>(resp: &TransportResponse) -> Result<T, FederationError> {
    serde_json::from_slice(&resp.body).map_err(|e| FederationError::BadResponse(e.to_string()))
}

type CacheKey = (NodeId, LocalId, u32);

pub struct Federation {
    repo: Arc<Repository>,
    transport: Arc<dyn Transport>,
    clock: Arc<dyn Clock>,
    cache: RwLock<HashMap<CacheKey, (MetadataRecord, DateTime<Utc>)>>,
    registry_writes: Mutex<()>,
}

impl Federation {
    pub fn new(repo: Arc<Repository>, transport: Arc<dyn Transport>, clock: Arc<dyn Clock>) -> Federation {
        Federation {
            repo,
            transport,
            clock,
            cache: RwLock::new(HashMap::new()),
            registry_writes: Mutex::new(()),
        }
    }

    fn own(&self) -> &NodeId {
        &self.repo.node().node_id
    }

    pub fn registry(&self) -> Result<PeerRegistry, FederationError> {
        Ok(PeerRegistry::load(self.repo.root())?)
    }

    fn update_registry<T>(
        &self,
        f: impl FnOnce(&mut PeerRegistry) -> Result<T, FederationError>,
    ) -> Result<T, FederationError> {
        let _guard = self.registry_writes.lock().expect("registry lock");
        let _file = lock_file(&self.repo.root().join(".peers.lock"))?;
        let mut registry = self.registry()?;
        let out = f(&mut registry)?;
        registry.save(self.repo.root())?;
        Ok(out)
    }

    /// Returns `false` when the identical peer was already registered.
    pub fn add_peer(&self, peer: NodeDescriptor) -> Result<bool, FederationError> {
        let own = self.own().clone();
        self.update_registry(|r| r.add(&own, peer))
    }

    pub fn remove_peer(&self, node_id: &NodeId) -> Result<NodeDescriptor, FederationError> {
        let removed = self.update_registry(|r| r.remove(node_id))?;
        self.cache
            .write()
            .expect("cache lock")
            .retain(|(n, _, _), _| n != node_id);
        Ok(removed)
    }

    pub fn set_ttl(&self, seconds: u64) -> Result<(), FederationError> {
        self.update_registry(|r| {
            r.ttl_seconds = seconds;
            Ok(())
        })
    }

    pub fn peer(&self, node_id: &NodeId) -> Result<NodeDescriptor, FederationError> {
        self.registry()?
            .get(node_id)
            .cloned()
            .ok_or_else(|| FederationError::UnknownPeer(node_id.clone()))
    }

    fn get(&self, url: &str) -> Result<TransportResponse, FederationError> {
        Ok(self.transport.get(url)?)
    }

    /// Metadata of any dataset on this node or a registered peer. The kind of
    /// `dataset` is not compared; the returned record carries the real one.
    pub fn resolve_link(&self, dataset: &DatasetRef) -> Result<MetadataRecord, FederationError> {
        if dataset.node_id == *self.own() {
            let entry = self.repo.entry(dataset, Partition::Drep)?;
            return entry
                .metadata
                .ok_or_else(|| RepoError::NotFound {
                    dataset: dataset.clone(),
                    partition: Partition::Drep,
                })
                .map_err(Into::into);
        }
        let registry = self.registry()?;
        let peer = registry
            .get(&dataset.node_id)
            .ok_or_else(|| FederationError::UnknownPeer(dataset.node_id.clone()))?;
        let key = (dataset.node_id.clone(), dataset.local_id.clone(), dataset.version);
        let now = self.clock.now();
        let ttl = TimeDelta::seconds(i64::try_from(registry.ttl_seconds).unwrap_or(i64::MAX));
        if let Some((record, at)) = self.cache.read().expect("cache lock").get(&key) {
            if now - *at < ttl {
                return Ok(record.clone());
            }
        }
        let resp = self.get(&peer.catalogue_url(dataset))?;
        match resp.status {
            200 => {}
            404 => return Err(FederationError::RemoteNotFound(dataset.clone())),
            _ => return Err(remote_error(&resp)),
        }
        let detail: DatasetDetail = decode(&resp)?;
        let record = detail.metadata;
        record.validate().into_result()?;
        if !record.dataset.same_version(dataset) {
            return Err(FederationError::BadResponse(format!(
                "asked for {dataset}, got a record for {}",
                record.dataset
            )));
        }
        self.cache
            .write()
            .expect("cache lock")
            .insert(key, (record.clone(), now));
        Ok(record)
    }

    /// Downloads a remote dataset and checks it against the advertised
    /// content hash. Request-policy datasets need a token from the owner.
    pub fn fetch_remote_dataset(
        &self,
        dataset: &DatasetRef,
        token: Option<&str>,
    ) -> Result<FetchedDataset, FederationError> {
        let metadata = self.resolve_link(dataset)?;
        let peer = self.peer(&dataset.node_id)?;
        let url = format!("{}/download", peer.catalogue_url(&metadata.dataset));
        let request_url = match token {
            Some(t) => format!(
                "{url}?token={}",
                percent_encoding::utf8_percent_encode(t, percent_encoding::NON_ALPHANUMERIC)
            ),
            None => url.clone(),
        };
        let resp = self.get(&request_url)?;
        match resp.status {
            200 => {}
            403 => {
                let message = match remote_error(&resp) {
                    FederationError::Remote { message, .. } => message,
                    other => other.to_string(),
                };
                return Err(FederationError::Policy { message });
            }
            404 => return Err(FederationError::RemoteNotFound(dataset.clone())),
            _ => return Err(remote_error(&resp)),
        }
        let actual = sha256_hex(&resp.body);
        if actual != metadata.content_hash {
            return Err(FederationError::Integrity {
                dataset: metadata.dataset.clone(),
                expected: metadata.content_hash.clone(),
                actual,
            });
        }
        Ok(FetchedDataset {
            metadata,
            bytes: resp.body,
            url,
        })
    }

    /// Fetches a remote dataset into the source partition. Fetching a
    /// version that is already stored with the same hash is a no-op.
    pub fn fetch_into_srep(&self, dataset: &DatasetRef, token: Option<&str>) -> Result<RepositoryEntry, FederationError> {
        if dataset.node_id == *self.own() {
            return Err(FederationError::OwnNode(dataset.node_id.clone()));
        }
        let fetched = self.fetch_remote_dataset(dataset, token)?;
        let id = &fetched.metadata.dataset;
        if let Ok(existing) = self.repo.entry(id, Partition::Srep) {
            if existing.content_hash == fetched.metadata.content_hash {
                return Ok(existing);
            }
        }
        let section = SrepSection::for_fetched(id.kind);
        Ok(self.repo.ingest_source(&fetched.bytes, id, section, &fetched.url)?)
    }

    /// Landing data of a peer.
    pub fn remote_node(&self, node_id: &NodeId) -> Result<NodeSummary, FederationError> {
        let peer = self.peer(node_id)?;
        let resp = self.get(&format!("{}/api/v1/node", peer.base_url))?;
        if resp.status != 200 {
            return Err(remote_error(&resp));
        }
        decode(&resp)
    }

    /// Runs a search on one peer's catalogue.
    pub fn remote_search(&self, node_id: &NodeId, query: &SearchQuery) -> Result<SearchPage, FederationError> {
        let peer = self.peer(node_id)?;
        let resp = self.get(&format!("{}/api/v1/datasets{}", peer.base_url, query.to_query_string()))?;
        if resp.status != 200 {
            return Err(remote_error(&resp));
        }
        decode(&resp)
    }
}
