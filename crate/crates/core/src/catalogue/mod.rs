//! Read-mostly HTTP catalogue over the distribution partition.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET | `/api/v1/node` | node descriptor and per-kind counts |
//! | GET | `/api/v1/datasets` | search and filters |
//! | GET | `/api/v1/datasets/{node}/{local_id}/{version}` | metadata and resolved links |
//! | GET | `/api/v1/datasets/{node}/{local_id}/{version}/download` | bytes, `?token=` for request policy |
//! | POST | `/api/v1/datasets/{node}/{local_id}/{version}/requests` | ask for access |
//! | GET | `/api/v1/requests/{id}` | request status |
//! | GET | `/api/v1/requests` | all requests (admin) |
//! | POST | `/api/v1/requests/{id}/approve`, `.../deny` | decide (admin) |
//!
//! Admin calls carry the `X-Admin-Token` header. Errors are
//! `{"error": {"code": ..., "message": ...}}`.

mod http;
mod requests;
mod search;

pub use http::{router, serve, ApiRequest, ApiResponse, MAX_BODY_BYTES};
pub use requests::{AccessRequest, RequestError, RequestStatus, RequestStore, REQUESTS_FILE};
pub use search::{
    match_count, search, tokenize, QueryError, SearchHit, SearchPage, SearchQuery, DEFAULT_PAGE_SIZE, MAX_PAGE_SIZE,
    PREFIX_MATCH_MIN,
};

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::federation::{PeerRegistry, PEERS_FILE};
use crate::model::{ContentKind, DatasetRef, DownloadPolicy, MetadataRecord, NodeDescriptor};
use crate::repository::{ListFilter, Partition, RepoError, Repository, RepositoryEntry};

pub const ADMIN_TOKEN_HEADER: &str = "x-admin-token";
pub const CONTENT_HASH_HEADER: &str = "x-content-sha256";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSummary {
    #[serde(flatten)]
    pub node: NodeDescriptor,
    /// Distributed datasets per core kind, zeros included.
    pub counts: BTreeMap<ContentKind, usize>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedLink {
    #[serde(rename = "ref")]
    pub dataset: DatasetRef,
    /// Absent when the target is neither distributed here nor on a
    /// registered peer.
    pub catalogue_url: Option<String>,
    pub remote: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedLinks {
    pub composed_of: Vec<ResolvedLink>,
    pub uses_language: Vec<ResolvedLink>,
    pub derived_from: Vec<ResolvedLink>,
}

impl ResolvedLinks {
    pub fn all(&self) -> impl Iterator<Item = &ResolvedLink> {
        self.composed_of
            .iter()
            .chain(&self.uses_language)
            .chain(&self.derived_from)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetDetail {
    pub metadata: MetadataRecord,
    pub catalogue_url: String,
    pub download_url: String,
    pub links: ResolvedLinks,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Download {
    pub entry: RepositoryEntry,
    pub bytes: Vec<u8>,
}

impl Download {
    pub fn content_type(&self) -> &'static str {
        content_type(self.entry.dataset.kind)
    }
}

pub fn content_type(kind: ContentKind) -> &'static str {
    match kind {
        ContentKind::Standardised => "application/vnd.livedata.bundle",
        ContentKind::Knowledge | ContentKind::Graph | ContentKind::ExternalReference => "text/turtle; charset=utf-8",
        _ => "text/csv; charset=utf-8",
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogueError {
    #[error("{0} is not distributed by this node")]
    NotFound(String),
    #[error(transparent)]
    BadQuery(#[from] QueryError),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{message}")]
    Forbidden {
        code: &'static str,
        message: String,
        request_endpoint: Option<String>,
    },
    #[error("{0}")]
    MethodNotAllowed(String),
    #[error(transparent)]
    Repo(#[from] RepoError),
}

impl CatalogueError {
    pub fn status(&self) -> u16 {
        match self {
            CatalogueError::NotFound(_) => 404,
            CatalogueError::BadQuery(_) | CatalogueError::BadRequest(_) => 400,
            CatalogueError::Conflict(_) => 409,
            CatalogueError::Forbidden { .. } => 403,
            CatalogueError::MethodNotAllowed(_) => 405,
            CatalogueError::Repo(_) => 500,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CatalogueError::NotFound(_) => "not_found",
            CatalogueError::BadQuery(_) => "bad_query",
            CatalogueError::BadRequest(_) => "bad_request",
            CatalogueError::Conflict(_) => "conflict",
            CatalogueError::Forbidden { code, .. } => code,
            CatalogueError::MethodNotAllowed(_) => "method_not_allowed",
            CatalogueError::Repo(RepoError::Corruption { .. }) => "corruption",
            CatalogueError::Repo(_) => "internal",
        }
    }

    fn into_response(self) -> ApiResponse {
        let (field, endpoint) = match &self {
            CatalogueError::BadQuery(q) => (Some(q.field.clone()), None),
            CatalogueError::Forbidden { request_endpoint, .. } => (None, request_endpoint.clone()),
            _ => (None, None),
        };
        let mut body = serde_json::json!({"code": self.code(), "message": self.to_string()});
        if let Some(f) = field {
            body["field"] = f.into();
        }
        if let Some(e) = endpoint {
            body["request_endpoint"] = e.into();
        }
        ApiResponse::json(self.status(), &serde_json::json!({ "error": body }))
    }
}

impl From<RequestError> for CatalogueError {
    fn from(e: RequestError) -> Self {
        match e {
            RequestError::NotFound(id) => CatalogueError::NotFound(format!("access request `{id}`")),
            RequestError::AlreadyDecided { .. } => CatalogueError::Conflict(e.to_string()),
            RequestError::InvalidToken => CatalogueError::Forbidden {
                code: "invalid_token",
                message: e.to_string(),
                request_endpoint: None,
            },
            RequestError::TokenConsumed => CatalogueError::Forbidden {
                code: "token_consumed",
                message: e.to_string(),
                request_endpoint: None,
            },
            RequestError::Repo(r) => CatalogueError::Repo(r),
        }
    }
}

pub(crate) fn error_response(status: u16, code: &str, message: &str, field: Option<&str>) -> ApiResponse {
    let mut body = serde_json::json!({"code": code, "message": message});
    if let Some(f) = field {
        body["field"] = f.into();
    }
    ApiResponse::json(status, &serde_json::json!({ "error": body }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewRequest {
    contact: String,
    justification: String,
}

pub struct Catalogue {
    repo: Arc<Repository>,
    node: NodeDescriptor,
    peers_file: PathBuf,
    requests: RequestStore,
    admin_token: Option<String>,
}

impl std::fmt::Debug for Catalogue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Catalogue").field("repo", &self.repo).finish_non_exhaustive()
    }
}

impl Catalogue {
    /// Admin endpoints stay disabled until a token is set.
    pub fn new(repo: Arc<Repository>) -> Catalogue {
        let requests = RequestStore::new(repo.root());
        Catalogue {
            node: repo.node().clone(),
            peers_file: repo.root().join(PEERS_FILE),
            repo,
            requests,
            admin_token: None,
        }
    }

    /// Serves under another descriptor of the same node, e.g. with the
    /// public base URL of a deployment.
    pub fn with_descriptor(mut self, node: NodeDescriptor) -> Result<Catalogue, CatalogueError> {
        node.validate()
            .into_result()
            .map_err(|e| CatalogueError::BadRequest(e.to_string()))?;
        if node.node_id != self.repo.node().node_id {
            return Err(CatalogueError::BadRequest(format!(
                "descriptor is for node `{}`, the repository belongs to `{}`",
                node.node_id,
                self.repo.node().node_id
            )));
        }
        self.node = node;
        Ok(self)
    }

    /// Reads peers for remote links from `path` instead of the repository.
    pub fn with_peers_file(mut self, path: impl Into<PathBuf>) -> Catalogue {
        self.peers_file = path.into();
        self
    }

    pub fn with_admin_token(mut self, token: impl Into<String>) -> Catalogue {
        self.admin_token = Some(token.into()).filter(|t| !t.is_empty());
        self
    }

    pub fn node(&self) -> &NodeDescriptor {
        &self.node
    }

    pub fn requests(&self) -> &RequestStore {
        &self.requests
    }

    fn distributed(&self) -> Result<Vec<RepositoryEntry>, CatalogueError> {
        Ok(self.repo.list(Partition::Drep, &ListFilter::default())?)
    }

    fn distributed_entry(&self, dataset: &DatasetRef) -> Result<RepositoryEntry, CatalogueError> {
        match self.repo.entry(dataset, Partition::Drep) {
            Ok(e) => Ok(e),
            Err(RepoError::NotFound { .. }) => Err(CatalogueError::NotFound(format!(
                "{}/{}/{}",
                dataset.node_id, dataset.local_id, dataset.version
            ))),
            Err(e) => Err(e.into()),
        }
    }

    fn metadata_of(entry: &RepositoryEntry) -> Result<&MetadataRecord, CatalogueError> {
        entry.metadata.as_ref().ok_or_else(|| {
            CatalogueError::Repo(RepoError::Corruption {
                dataset: entry.dataset.clone(),
                partition: Partition::Drep,
                path: entry.file.clone().into(),
            })
        })
    }

    pub fn node_summary(&self) -> Result<NodeSummary, CatalogueError> {
        let entries = self.distributed()?;
        let mut counts: BTreeMap<ContentKind, usize> = ContentKind::CORE.into_iter().map(|k| (k, 0)).collect();
        for e in &entries {
            *counts.entry(e.dataset.kind).or_default() += 1;
        }
        Ok(NodeSummary {
            node: self.node().clone(),
            counts,
            total: entries.len(),
        })
    }

    pub fn search(&self, query: &SearchQuery) -> Result<SearchPage, CatalogueError> {
        query.validate()?;
        let entries = self.distributed()?;
        let records = entries.iter().map(Self::metadata_of).collect::<Result<Vec<_>, _>>()?;
        Ok(search(records, query, |r| self.node().catalogue_url(r)))
    }

    /// Catalogue URL of a link target: this node for distributed local
    /// datasets, the owning peer for remote ones. Peers are looked up at call
    /// time, so base URL changes apply without re-promotion.
    fn resolve(&self, dataset: &DatasetRef, distributed: &[RepositoryEntry], peers: &PeerRegistry) -> ResolvedLink {
        let own = self.node();
        let (url, remote) = if dataset.node_id == own.node_id {
            let here = distributed.iter().any(|e| e.dataset.same_version(dataset));
            (here.then(|| own.catalogue_url(dataset)), false)
        } else {
            (peers.get(&dataset.node_id).map(|p| p.catalogue_url(dataset)), true)
        };
        ResolvedLink {
            dataset: dataset.clone(),
            catalogue_url: url,
            remote,
        }
    }

    pub fn detail(&self, dataset: &DatasetRef) -> Result<DatasetDetail, CatalogueError> {
        let entry = self.distributed_entry(dataset)?;
        let metadata = Self::metadata_of(&entry)?.clone();
        let distributed = self.distributed()?;
        let peers = PeerRegistry::load_file(&self.peers_file)?;
        let resolve_all = |refs: &[DatasetRef]| -> Vec<ResolvedLink> {
            refs.iter().map(|r| self.resolve(r, &distributed, &peers)).collect()
        };
        let links = ResolvedLinks {
            composed_of: resolve_all(&metadata.links.composed_of),
            uses_language: resolve_all(&metadata.links.uses_language),
            derived_from: resolve_all(&metadata.links.derived_from),
        };
        let catalogue_url = self.node().catalogue_url(&metadata.dataset);
        Ok(DatasetDetail {
            download_url: format!("{catalogue_url}/download"),
            catalogue_url,
            metadata,
            links,
        })
    }

    fn request_endpoint(&self, dataset: &DatasetRef) -> String {
        format!("{}/requests", self.node().catalogue_url(dataset))
    }

    /// Bytes of a distributed dataset. Request-policy datasets need a token
    /// from an approved access request; the token is spent only when the
    /// bytes are about to be returned.
    pub fn download(&self, dataset: &DatasetRef, token: Option<&str>) -> Result<Download, CatalogueError> {
        let entry = self.distributed_entry(dataset)?;
        let policy = Self::metadata_of(&entry)?.download_policy;
        let bytes = self.repo.get_bytes(&entry.dataset, Partition::Drep)?;
        if policy == DownloadPolicy::Request {
            let Some(token) = token else {
                let endpoint = self.request_endpoint(&entry.dataset);
                return Err(CatalogueError::Forbidden {
                    code: "request_required",
                    message: format!(
                        "this dataset is distributed on request: POST {{\"contact\", \"justification\"}} to {endpoint}, then download with ?token=<token> once approved"
                    ),
                    request_endpoint: Some(endpoint),
                });
            };
            self.requests.consume(&entry.dataset, token)?;
        }
        Ok(Download { entry, bytes })
    }

    pub fn request_access(
        &self,
        dataset: &DatasetRef,
        contact: &str,
        justification: &str,
    ) -> Result<AccessRequest, CatalogueError> {
        let entry = self.distributed_entry(dataset)?;
        if Self::metadata_of(&entry)?.download_policy == DownloadPolicy::Automatic {
            return Err(CatalogueError::Conflict(format!(
                "{} is downloadable without a request",
                entry.dataset
            )));
        }
        if contact.trim().is_empty() || justification.trim().is_empty() {
            return Err(CatalogueError::BadRequest("contact and justification must not be empty".into()));
        }
        Ok(self.requests.create(&entry.dataset, contact.trim(), justification.trim())?)
    }

    pub fn decide(&self, request_id: &str, approve: bool) -> Result<AccessRequest, CatalogueError> {
        Ok(self.requests.decide(request_id, approve)?)
    }

    fn check_admin(&self, req: &ApiRequest) -> Result<(), CatalogueError> {
        let Some(expected) = &self.admin_token else {
            return Err(CatalogueError::Forbidden {
                code: "admin_disabled",
                message: "admin endpoints are disabled on this node".into(),
                request_endpoint: None,
            });
        };
        if req.header(ADMIN_TOKEN_HEADER) != Some(expected.as_str()) {
            return Err(CatalogueError::Forbidden {
                code: "admin_token",
                message: "missing or wrong X-Admin-Token".into(),
                request_endpoint: None,
            });
        }
        Ok(())
    }

    /// Answers one API request. Never panics on client input.
    pub fn handle(&self, req: &ApiRequest) -> ApiResponse {
        let mut resp = if req.method == "OPTIONS" {
            ApiResponse {
                status: 204,
                headers: vec![
                    ("access-control-allow-methods".into(), "GET, POST, OPTIONS".into()),
                    ("access-control-allow-headers".into(), "content-type, x-admin-token".into()),
                ],
                body: Vec::new(),
            }
        } else {
            self.route(req).unwrap_or_else(CatalogueError::into_response)
        };
        resp.headers.push(("access-control-allow-origin".into(), "*".into()));
        resp
    }

    fn route(&self, req: &ApiRequest) -> Result<ApiResponse, CatalogueError> {
        let segments: Vec<String> = req
            .path
            .trim_end_matches('/')
            .split('/')
            .skip(1)
            .map(|s| percent_encoding::percent_decode_str(s).decode_utf8_lossy().into_owned())
            .collect();
        let segs: Vec<&str> = segments.iter().map(String::as_str).collect();
        let method = req.method.as_str();
        let allow = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(CatalogueError::MethodNotAllowed(format!("{method} is not allowed on {}", req.path)))
            }
        };
        match segs.as_slice() {
            ["api", "v1", "node"] => {
                allow(method == "GET")?;
                Ok(ApiResponse::json(200, &self.node_summary()?))
            }
            ["api", "v1", "datasets"] => {
                allow(method == "GET")?;
                let query = SearchQuery::from_pairs(&req.query)?;
                Ok(ApiResponse::json(200, &self.search(&query)?))
            }
            ["api", "v1", "datasets", node, local, version, rest @ ..] => {
                let dataset = parse_ref(node, local, version)?;
                match rest {
                    [] => {
                        allow(method == "GET")?;
                        Ok(ApiResponse::json(200, &self.detail(&dataset)?))
                    }
                    ["download"] => {
                        allow(method == "GET")?;
                        let d = self.download(&dataset, req.query_param("token"))?;
                        let filename = format!("{}.{}", d.entry.dataset.file_stem(), d.entry.dataset.kind.file_suffix());
                        Ok(ApiResponse {
                            status: 200,
                            headers: vec![
                                ("content-type".into(), d.content_type().into()),
                                (CONTENT_HASH_HEADER.into(), d.entry.content_hash.clone()),
                                ("content-disposition".into(), format!("attachment; filename=\"{filename}\"")),
                            ],
                            body: d.bytes,
                        })
                    }
                    ["requests"] => {
                        allow(method == "POST")?;
                        let body: NewRequest = serde_json::from_slice(&req.body).map_err(|e| {
                            CatalogueError::BadRequest(format!("body must be {{\"contact\", \"justification\"}}: {e}"))
                        })?;
                        let created = self.request_access(&dataset, &body.contact, &body.justification)?;
                        Ok(ApiResponse::json(201, &created))
                    }
                    _ => Err(CatalogueError::NotFound(req.path.clone())),
                }
            }
            ["api", "v1", "requests"] => {
                allow(method == "GET")?;
                self.check_admin(req)?;
                Ok(ApiResponse::json(200, &self.requests.list()?))
            }
            ["api", "v1", "requests", id] => {
                allow(method == "GET")?;
                Ok(ApiResponse::json(200, &self.requests.get(id)?))
            }
            ["api", "v1", "requests", id, action @ ("approve" | "deny")] => {
                allow(method == "POST")?;
                self.check_admin(req)?;
                Ok(ApiResponse::json(200, &self.decide(id, *action == "approve")?))
            }
            _ => Err(CatalogueError::NotFound(req.path.clone())),
        }
    }
}

/// The kind is not part of the path; lookups compare node, local id and
/// version only, so a placeholder is used.
fn parse_ref(node: &str, local: &str, version: &str) -> Result<DatasetRef, CatalogueError> {
    let bad = |field: &str, message: String| {
        CatalogueError::BadQuery(QueryError {
            field: field.into(),
            message,
        })
    };
    let version: u32 = version
        .trim_start_matches('v')
        .parse()
        .ok()
        .filter(|v| *v > 0)
        .ok_or_else(|| bad("version", format!("`{version}` is not a positive integer")))?;
    let node_id = node.parse().map_err(|e: crate::model::ValidationError| bad("node_id", e.to_string()))?;
    let local_id = local.parse().map_err(|e: crate::model::ValidationError| bad("local_id", e.to_string()))?;
    Ok(DatasetRef {
        node_id,
        local_id,
        version,
        kind: ContentKind::Standardised,
    })
}
