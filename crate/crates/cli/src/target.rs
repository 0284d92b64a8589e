//! Dataset references on the command line: `local`, `local/version`,
//! `node/local` or `node/local/version`; versions may carry a `v`.

use livedata::model::{ContentKind, DatasetRef, LocalId, NodeId};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    pub node: Option<NodeId>,
    pub local: LocalId,
    pub version: Option<u32>,
}

fn version(s: &str) -> Option<u32> {
    s.strip_prefix('v').unwrap_or(s).parse().ok().filter(|v| *v > 0)
}

impl Target {
    pub fn parse(s: &str) -> Result<Target, CliError> {
        let bad = |why: String| CliError::Usage(format!("`{s}` is not a dataset reference: {why}"));
        let parts: Vec<&str> = s.trim_matches('/').split('/').collect();
        let (node, local, ver) = match parts.as_slice() {
            [local] => (None, *local, None),
            [a, b] => match version(b) {
                Some(v) => (None, *a, Some(v)),
                None => (Some(*a), *b, None),
            },
            [node, local, v] => (Some(*node), *local, Some(version(v).ok_or_else(|| bad(format!("bad version `{v}`")))?)),
            _ => return Err(bad("expected node/local/version".into())),
        };
        Ok(Target {
            node: node.map(str::parse).transpose().map_err(|e| bad(format!("{e}")))?,
            local: local.parse().map_err(|e| bad(format!("{e}")))?,
            version: ver,
        })
    }

    /// A full reference; the kind is a placeholder for lookups that ignore it.
    pub fn full(&self, default_node: &NodeId) -> Result<DatasetRef, CliError> {
        let version = self
            .version
            .ok_or_else(|| CliError::Usage(format!("`{}` needs an explicit version", self.local)))?;
        Ok(DatasetRef {
            node_id: self.node.clone().unwrap_or_else(|| default_node.clone()),
            local_id: self.local.clone(),
            version,
            kind: ContentKind::Standardised,
        })
    }
}
