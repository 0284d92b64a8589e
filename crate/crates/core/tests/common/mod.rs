//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod generators;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use livedata::catalogue::{ApiRequest, ApiResponse, Catalogue};
use livedata::federation::{Clock, SystemClock, Transport};
use livedata::model::{DatasetRef, DescriptiveFields, DownloadPolicy, NodeDescriptor};
use livedata::node::{Node, Transformed};
use livedata::pipeline::TransformConfig;
use livedata::repository::{Repository, RepositoryEntry, SrepSection};

pub fn fixture_dir(node: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(node)
}

pub fn fixture(node: &str, file: &str) -> Vec<u8> {
    std::fs::read(fixture_dir(node).join(file)).unwrap()
}

pub fn descriptor(node: &str) -> NodeDescriptor {
    serde_json::from_slice(&fixture(node, "node.json")).unwrap()
}

pub fn config(node: &str) -> TransformConfig {
    TransformConfig::from_json(&fixture(node, "transform.json")).unwrap()
}

pub fn fields(node: &str) -> DescriptiveFields {
    serde_json::from_slice(&fixture(node, "fields.json")).unwrap()
}

/// Initialises a repository for the fixture node under `root`.
pub fn init_node(node: &str, root: &Path, transport: Option<Arc<dyn Transport>>) -> Node {
    let repo = Repository::init(root, descriptor(node)).unwrap();
    match transport {
        Some(t) => Node::with_transport(repo, t, Arc::new(SystemClock) as Arc<dyn Clock>),
        None => Node::from_repository(repo),
    }
}

/// Collects both raw files and runs the pipeline.
pub fn collect_and_transform(node: &Node, name: &str) -> Transformed {
    for (file, local) in [("professors.csv", "professors-raw"), ("courses.csv", "courses-raw")] {
        node.collect(&fixture(name, file), &local.parse().unwrap(), None, SrepSection::LowQuality, file)
            .unwrap();
    }
    node.transform(&config(name)).unwrap()
}

/// Distributes S, L, K and G of a transform run.
pub fn distribute_all(node: &Node, name: &str, t: &Transformed, policy: DownloadPolicy) -> Vec<RepositoryEntry> {
    t.entries
        .iter()
        .map(|e| node.distribute(&e.dataset, &fields(name), policy).unwrap())
        .collect()
}

/// A fully distributed walkthrough node.
pub fn walkthrough_node(name: &str, root: &Path) -> (Node, Transformed) {
    let node = init_node(name, root, None);
    let t = collect_and_transform(&node, name);
    distribute_all(&node, name, &t, DownloadPolicy::Automatic);
    (node, t)
}

pub fn get(catalogue: &Catalogue, path: &str) -> ApiResponse {
    catalogue.handle(&ApiRequest::get(path))
}

pub fn json(resp: &ApiResponse) -> serde_json::Value {
    serde_json::from_slice(&resp.body).unwrap()
}

pub fn path_of(r: &DatasetRef) -> String {
    r.catalogue_path()
}
