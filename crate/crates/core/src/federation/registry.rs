use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FederationError;
use crate::model::{NodeDescriptor, NodeId};
use crate::repository::{read_json, write_json, RepoError};

pub const PEERS_FILE: &str = "peers.json";
pub const DEFAULT_TTL_SECONDS: u64 = 300;

fn default_ttl() -> u64 {
    DEFAULT_TTL_SECONDS
}

/// Known peer nodes, persisted as `peers.json` in the repository root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerRegistry {
    /// How long a fetched metadata record is served from cache.
    #[serde(default = "default_ttl")]
    pub ttl_seconds: u64,
    #[serde(default)]
    pub peers: BTreeMap<NodeId, NodeDescriptor>,
}

impl Default for PeerRegistry {
    fn default() -> Self {
        PeerRegistry {
            ttl_seconds: DEFAULT_TTL_SECONDS,
            peers: BTreeMap::new(),
        }
    }
}

impl PeerRegistry {
    /// A missing file is an empty registry.
    pub fn load(root: &Path) -> Result<PeerRegistry, RepoError> {
        PeerRegistry::load_file(&root.join(PEERS_FILE))
    }

    /// Reads a registry file; a missing file is an empty registry.
    pub fn load_file(path: &Path) -> Result<PeerRegistry, RepoError> {
        if !path.exists() {
            return Ok(PeerRegistry::default());
        }
        read_json(path)
    }

    pub fn save(&self, root: &Path) -> Result<(), RepoError> {
        write_json(&root.join(PEERS_FILE), self)
    }

    pub fn get(&self, node_id: &NodeId) -> Option<&NodeDescriptor> {
        self.peers.get(node_id)
    }

    /// Returns `false` when the identical descriptor was already present.
    pub fn add(&mut self, own: &NodeId, peer: NodeDescriptor) -> Result<bool, FederationError> {
        if &peer.node_id == own {
            return Err(FederationError::OwnNode(peer.node_id));
        }
        peer.validate().into_result()?;
        match self.peers.get(&peer.node_id) {
            Some(existing) if *existing == peer => Ok(false),
            Some(_) => Err(FederationError::PeerConflict(peer.node_id)),
            None => {
                self.peers.insert(peer.node_id.clone(), peer);
                Ok(true)
            }
        }
    }

    pub fn remove(&mut self, node_id: &NodeId) -> Result<NodeDescriptor, FederationError> {
        self.peers
            .remove(node_id)
            .ok_or_else(|| FederationError::UnknownPeer(node_id.clone()))
    }
}
