use std::path::PathBuf;
use std::sync::Mutex;

use chrono::{DateTime, SubsecRound, Utc};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::formats::sha256_hex;
use crate::model::DatasetRef;
use crate::repository::{lock_file, read_json, write_json, RepoError};

pub const REQUESTS_FILE: &str = "requests.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestStatus {
    Pending,
    Approved,
    Denied,
}

impl std::fmt::Display for RequestStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RequestStatus::Pending => "pending",
            RequestStatus::Approved => "approved",
            RequestStatus::Denied => "denied",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRequest {
    pub request_id: String,
    #[serde(rename = "ref")]
    pub dataset: DatasetRef,
    pub contact: String,
    pub justification: String,
    pub status: RequestStatus,
    #[serde(with = "crate::model::rfc3339_seconds")]
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::model::rfc3339_seconds_opt")]
    pub decided_at: Option<DateTime<Utc>>,
    /// Download token, present only in the response to an approval. The
    /// store keeps its hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TokenRecord {
    sha256: String,
    request_id: String,
    #[serde(rename = "ref")]
    dataset: DatasetRef,
    consumed: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct RequestFile {
    requests: Vec<AccessRequest>,
    tokens: Vec<TokenRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum RequestError {
    #[error("no access request `{0}`")]
    NotFound(String),
    #[error("access request `{id}` is already {status:?}")]
    AlreadyDecided { id: String, status: RequestStatus },
    #[error("download token is not valid for this dataset")]
    InvalidToken,
    #[error("download token has already been used")]
    TokenConsumed,
    #[error(transparent)]
    Repo(#[from] RepoError),
}

/// Access requests and their tokens, kept in `requests.json`. Every
/// operation runs under an in-process mutex and a file lock, so token
/// consumption is linearized across threads and processes.
#[derive(Debug)]
pub struct RequestStore {
    path: PathBuf,
    lock_path: PathBuf,
    guard: Mutex<()>,
}

fn random_hex(bytes: usize) -> String {
    let mut buf = vec![0u8; bytes];
    rand::rng().fill(&mut buf[..]);
    hex::encode(buf)
}

impl RequestStore {
    pub fn new(root: &std::path::Path) -> RequestStore {
        RequestStore {
            path: root.join(REQUESTS_FILE),
            lock_path: root.join(".requests.lock"),
            guard: Mutex::new(()),
        }
    }

    fn with_file<T>(&self, write: bool, f: impl FnOnce(&mut RequestFile) -> Result<T, RequestError>) -> Result<T, RequestError> {
        let _guard = self.guard.lock().unwrap_or_else(|e| e.into_inner());
        let _lock = lock_file(&self.lock_path)?;
        let mut file = if self.path.exists() {
            read_json(&self.path)?
        } else {
            RequestFile::default()
        };
        let out = f(&mut file);
        if write && out.is_ok() {
            write_json(&self.path, &file)?;
        }
        out
    }

    pub fn create(&self, dataset: &DatasetRef, contact: &str, justification: &str) -> Result<AccessRequest, RequestError> {
        self.with_file(true, |file| {
            let request_id = loop {
                let id = format!("req-{}", random_hex(6));
                if !file.requests.iter().any(|r| r.request_id == id) {
                    break id;
                }
            };
            let request = AccessRequest {
                request_id,
                dataset: dataset.clone(),
                contact: contact.to_owned(),
                justification: justification.to_owned(),
                status: RequestStatus::Pending,
                created_at: Utc::now().trunc_subsecs(0),
                decided_at: None,
                token: None,
            };
            file.requests.push(request.clone());
            Ok(request)
        })
    }

    pub fn get(&self, request_id: &str) -> Result<AccessRequest, RequestError> {
        self.with_file(false, |file| {
            file.requests
                .iter()
                .find(|r| r.request_id == request_id)
                .cloned()
                .ok_or_else(|| RequestError::NotFound(request_id.to_owned()))
        })
    }

    pub fn list(&self) -> Result<Vec<AccessRequest>, RequestError> {
        self.with_file(false, |file| Ok(file.requests.clone()))
    }

    /// Moves a pending request to approved (issuing a token) or denied.
    pub fn decide(&self, request_id: &str, approve: bool) -> Result<AccessRequest, RequestError> {
        self.with_file(true, |file| {
            let request = file
                .requests
                .iter_mut()
                .find(|r| r.request_id == request_id)
                .ok_or_else(|| RequestError::NotFound(request_id.to_owned()))?;
            if request.status != RequestStatus::Pending {
                return Err(RequestError::AlreadyDecided {
                    id: request_id.to_owned(),
                    status: request.status,
                });
            }
            request.decided_at = Some(Utc::now().trunc_subsecs(0));
            let mut out = request.clone();
            if approve {
                request.status = RequestStatus::Approved;
                out.status = RequestStatus::Approved;
                let token = random_hex(24);
                file.tokens.push(TokenRecord {
                    sha256: sha256_hex(token.as_bytes()),
                    request_id: request_id.to_owned(),
                    dataset: out.dataset.clone(),
                    consumed: false,
                });
                out.token = Some(token);
            } else {
                request.status = RequestStatus::Denied;
                out.status = RequestStatus::Denied;
            }
            Ok(out)
        })
    }

    /// Marks a token as used. Succeeds once per token.
    pub fn consume(&self, dataset: &DatasetRef, token: &str) -> Result<(), RequestError> {
        let digest = sha256_hex(token.as_bytes());
        self.with_file(true, |file| {
            let record = file
                .tokens
                .iter_mut()
                .find(|t| t.sha256 == digest && t.dataset.same_version(dataset))
                .ok_or(RequestError::InvalidToken)?;
            if record.consumed {
                return Err(RequestError::TokenConsumed);
            }
            record.consumed = true;
            Ok(())
        })
    }
}
