//! End-to-end scenarios returning a description of the first failed check.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::{Arc, Barrier};

use livedata::catalogue::{ApiRequest, Catalogue, CONTENT_HASH_HEADER};
use livedata::federation::{InProcessTransport, Transport};
use livedata::formats::sha256_hex;
use livedata::model::{validate, Context, Dataset, DatasetRef, DescriptiveFields, DownloadPolicy};
use livedata::node::Node;
use livedata::pipeline::decompose_graph;
use livedata::repository::{ListFilter, Partition};
use serde_json::{json, Value};

use super::*;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// sha256 of the stored CREP files of the unitn walkthrough, taken with
/// `sha256sum` over a reference run.
pub const WALKTHROUGH_DIGESTS: [(&str, &str); 4] = [
    ("standardised", "9be03bb19dedec510a461a0e26edf405596957471da07cd59e1ac319f47df7da"),
    ("language", "42d3bb386bf20cebaf2aeddf6992af0b51b3d7470866e6213df183fc66ebd228"),
    ("knowledge", "3d9374491d2bd8ef9eb7291d9c8162548c364b030877f32a385601c7f9a01a07"),
    ("graph", "6f96d2f4f1001d9039589cbd7fb8fd485d314f148fee25452e7be26182c38741"),
];

fn set(refs: &[DatasetRef]) -> BTreeSet<String> {
    refs.iter().map(|r| r.to_string()).collect()
}

/// Functional ETypes, context validation and metadata links.
pub fn stratification(root: &Path) -> Result<(), String> {
    let (node, t) = walkthrough_node("unitn", root);
    let out = &t.output;
    for child in ["master_course", "bachelor_course"] {
        let e = out.knowledge.etype(child).ok_or(format!("no etype {child}"))?;
        ensure!(e.parent.as_deref() == Some("course"), "{child} has parent {:?}", e.parent);
    }
    let languages = std::slice::from_ref(&out.language);
    let with_l = Context::new().with_languages(languages);
    let report = validate(&out.knowledge.clone().into(), Some(&with_l));
    ensure!(report.is_empty(), "validate(K, L): {report:?}");
    let with_kl = with_l.with_knowledge(&out.knowledge);
    let report = validate(&out.graph.clone().into(), Some(&with_kl));
    ensure!(report.is_empty(), "validate(G, K, L): {report:?}");

    let meta = |r: &DatasetRef| {
        node.repository()
            .entry(r, Partition::Drep)
            .map_err(|e| e.to_string())?
            .metadata
            .ok_or(format!("{r} has no metadata"))
    };
    let g = meta(&out.graph.id)?;
    let expected = set(&[out.standardised.id.clone(), out.language.id.clone(), out.knowledge.id.clone()]);
    ensure!(set(&g.links.composed_of) == expected, "G composed_of {:?}", g.links.composed_of);
    let k = meta(&out.knowledge.id)?;
    ensure!(set(&k.links.uses_language) == set(&[out.language.id.clone()]), "K uses_language {:?}", k.links.uses_language);
    Ok(())
}

/// Integrity check is clean, then every deletion or single-byte flip of a
/// stored file is reported and makes reads of that file fail.
pub fn repository_invariants(root: &Path) -> Result<(), String> {
    let (node, _) = walkthrough_node("unitn", root);
    let repo = node.repository();
    let report = repo.integrity_check().map_err(|e| e.to_string())?;
    ensure!(report.is_empty(), "fresh repository: {report:?}");
    let drep = repo.list(Partition::Drep, &ListFilter::default()).map_err(|e| e.to_string())?;
    ensure!(drep.len() == 4, "{} DREP entries", drep.len());

    let mut tampered = 0;
    for partition in [Partition::Srep, Partition::Crep, Partition::Drep] {
        for entry in repo.list(partition, &ListFilter::default()).map_err(|e| e.to_string())? {
            let path = root.join(&entry.file);
            let original = std::fs::read(&path).map_err(|e| e.to_string())?;

            let mut flipped = original.clone();
            flipped[original.len() / 2] ^= 0x01;
            std::fs::write(&path, &flipped).unwrap();
            let report = repo.integrity_check().map_err(|e| e.to_string())?;
            ensure!(!report.is_empty(), "byte flip in {} not reported", entry.file);
            ensure!(repo.get_bytes(&entry.dataset, partition).is_err(), "read of flipped {} succeeded", entry.file);

            std::fs::remove_file(&path).unwrap();
            let report = repo.integrity_check().map_err(|e| e.to_string())?;
            ensure!(!report.is_empty(), "deletion of {} not reported", entry.file);
            ensure!(repo.get_bytes(&entry.dataset, partition).is_err(), "read of deleted {} succeeded", entry.file);

            std::fs::write(&path, &original).unwrap();
            let report = repo.integrity_check().map_err(|e| e.to_string())?;
            ensure!(report.is_empty(), "restored {} still reported: {report:?}", entry.file);
            tampered += 1;
        }
    }
    ensure!(tampered == 2 + 4 + 4, "tampered with {tampered} files");
    Ok(())
}

const TITLE_WORDS: [&str; 6] = ["alpine", "baltic", "coral", "delta", "ember", "fjord"];

fn titled(fields: &DescriptiveFields, words: &[&str]) -> DescriptiveFields {
    DescriptiveFields {
        title: [("en".to_string(), words.join(" "))].into(),
        ..fields.clone()
    }
}

/// Landing, list and detail agree; search is sound and complete on title
/// tokens; downloads match their hashes; access tokens are single use.
pub fn catalogue_conformance(root: &Path) -> Result<(), String> {
    let node = init_node("unitn", root, None);
    let t = collect_and_transform(&node, "unitn");
    let base = fields("unitn");
    let mut titles: Vec<(DatasetRef, Vec<&str>)> = Vec::new();
    for (i, e) in t.entries.iter().enumerate() {
        let words: Vec<&str> = TITLE_WORDS.iter().enumerate().filter(|(j, _)| (j + i) % 3 != 0).map(|(_, w)| *w).collect();
        let policy = if e.dataset.kind == livedata::model::ContentKind::Graph {
            DownloadPolicy::Request
        } else {
            DownloadPolicy::Automatic
        };
        node.distribute(&e.dataset, &titled(&base, &words), policy).map_err(|e| e.to_string())?;
        titles.push((e.dataset.clone(), words));
    }
    let catalogue = Arc::new(node.catalogue().with_admin_token("admin-secret"));
    let base_url = node.descriptor().base_url.clone();

    let landing = json(&get(&catalogue, "/api/v1/node"));
    let list = json(&get(&catalogue, "/api/v1/datasets?page_size=100"));
    ensure!(landing["total"] == list["total"], "landing {} vs list {}", landing["total"], list["total"]);
    let results = list["results"].as_array().ok_or("no results")?;
    ensure!(results.len() as u64 == list["total"].as_u64().unwrap(), "page shorter than total");
    let counted: u64 = landing["counts"].as_object().ok_or("no counts")?.values().filter_map(Value::as_u64).sum();
    ensure!(counted == results.len() as u64, "per-kind counts sum to {counted}");

    let mut local_links = 0;
    for hit in results {
        let url = hit["catalogue_url"].as_str().ok_or("hit without url")?;
        let path = url.strip_prefix(&base_url).ok_or(format!("{url} is not local"))?;
        let detail = get(&catalogue, path);
        ensure!(detail.status == 200, "{path}: {}", detail.status);
        let detail = json(&detail);
        for group in ["composed_of", "uses_language", "derived_from"] {
            for link in detail["links"][group].as_array().into_iter().flatten() {
                if let (Some(u), false) = (link["catalogue_url"].as_str(), link["remote"].as_bool().unwrap_or(true)) {
                    let status = get(&catalogue, u.strip_prefix(&base_url).ok_or(u.to_string())?).status;
                    ensure!(status == 200, "link {u}: {status}");
                    local_links += 1;
                }
            }
        }
    }
    // G to S, L, K; K to L; derivations L to S and K to S, L.
    ensure!(local_links == 7, "{local_links} local links resolved");

    for word in TITLE_WORDS {
        let resp = json(&get(&catalogue, &format!("/api/v1/datasets?text={word}&page_size=100")));
        let found: BTreeSet<String> = resp["results"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|h| h["catalogue_url"].as_str().unwrap_or_default().to_string())
            .collect();
        let expected: BTreeSet<String> = titles
            .iter()
            .filter(|(_, ws)| ws.contains(&word))
            .map(|(r, _)| format!("{base_url}{}", r.catalogue_path()))
            .collect();
        ensure!(found == expected, "search `{word}`: {found:?} != {expected:?}");
    }

    for (r, _) in titles.iter().filter(|(r, _)| r.kind != livedata::model::ContentKind::Graph) {
        let path = r.catalogue_path();
        let advertised = json(&get(&catalogue, &path))["metadata"]["content_hash"].clone();
        let resp = get(&catalogue, &format!("{path}/download"));
        ensure!(resp.status == 200, "download {path}: {}", resp.status);
        let actual = sha256_hex(&resp.body);
        ensure!(advertised == actual.as_str(), "{path}: body hashes to {actual}, advertised {advertised}");
        ensure!(resp.header(CONTENT_HASH_HEADER) == Some(actual.as_str()), "{path}: hash header");
    }

    let g = t.output.graph.id.catalogue_path();
    let resp = get(&catalogue, &format!("{g}/download"));
    ensure!(resp.status == 403 && json(&resp)["error"]["code"] == "request_required", "unrequested download: {}", resp.status);
    let created = catalogue.handle(&ApiRequest::post_json(
        &format!("{g}/requests"),
        &json!({"contact": "ana@example.org", "justification": "teaching"}),
    ));
    ensure!(created.status == 201, "request: {}", created.status);
    let id = json(&created)["request_id"].as_str().ok_or("no request id")?.to_string();
    let approve = format!("/api/v1/requests/{id}/approve");
    let denied = catalogue.handle(&ApiRequest::new("POST", &approve));
    ensure!(denied.status == 403, "approve without admin token: {}", denied.status);
    let approved = catalogue.handle(&ApiRequest::new("POST", &approve).with_header("x-admin-token", "admin-secret"));
    ensure!(approved.status == 200, "approve: {}", approved.status);
    let token = json(&approved)["token"].as_str().ok_or("no token")?.to_string();

    let threads = 8;
    let barrier = Arc::new(Barrier::new(threads));
    let handles: Vec<_> = (0..threads)
        .map(|_| {
            let (catalogue, barrier, path) = (catalogue.clone(), barrier.clone(), format!("{g}/download?token={token}"));
            std::thread::spawn(move || {
                barrier.wait();
                get(&catalogue, &path)
            })
        })
        .collect();
    let responses: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    let wins: Vec<_> = responses.iter().filter(|r| r.status == 200).collect();
    ensure!(wins.len() == 1, "{} concurrent downloads succeeded", wins.len());
    ensure!(
        responses.iter().filter(|r| r.status == 403).all(|r| json(r)["error"]["code"] == "token_consumed"),
        "losers were not told the token is consumed"
    );
    let advertised = json(&get(&catalogue, &g))["metadata"]["content_hash"].clone();
    ensure!(advertised == sha256_hex(&wins[0].body).as_str(), "granted download hash");
    let again = get(&catalogue, &format!("{g}/download?token={token}"));
    ensure!(again.status == 403, "reused token: {}", again.status);
    Ok(())
}

/// Two in-process nodes: B composes its data with A's knowledge and language.
pub fn federation(root_a: &Path, root_b: &Path) -> Result<(), String> {
    let transport = Arc::new(InProcessTransport::new());
    let shared: Arc<dyn Transport> = transport.clone();
    let a = init_node("unitn", root_a, Some(shared.clone()));
    let b = init_node("num", root_b, Some(shared));
    let ta = collect_and_transform(&a, "unitn");
    distribute_all(&a, "unitn", &ta, DownloadPolicy::Automatic);
    let tb = collect_and_transform(&b, "num");
    distribute_all(&b, "num", &tb, DownloadPolicy::Automatic);
    transport.register(&a.descriptor().base_url, Arc::new(a.catalogue()));
    transport.register(&b.descriptor().base_url, Arc::new(b.catalogue()));
    b.federation().add_peer(a.descriptor().clone()).map_err(|e| e.to_string())?;
    a.federation().add_peer(b.descriptor().clone()).map_err(|e| e.to_string())?;

    let (k_ref, l_ref) = (&ta.output.knowledge.id, &ta.output.language.id);
    for r in [k_ref, l_ref] {
        let fetched = b.federation().fetch_into_srep(r, None).map_err(|e| e.to_string())?;
        let published = a.repository().entry(r, Partition::Drep).map_err(|e| e.to_string())?;
        ensure!(fetched.content_hash == published.content_hash, "{r}: fetched hash differs");
    }
    let composed = b
        .cross_node_compose(&tb.output.standardised.id, k_ref, l_ref, None)
        .map_err(|e| e.to_string())?;
    b.distribute(&composed.entry.dataset, &fields("num"), DownloadPolicy::Automatic)
        .map_err(|e| e.to_string())?;

    let catalogue: Catalogue = b.catalogue();
    let detail = get(&catalogue, &composed.entry.dataset.catalogue_path());
    ensure!(detail.status == 200, "B detail of G: {}", detail.status);
    let detail = json(&detail);
    let urls: Vec<&str> = detail["links"]["composed_of"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|l| l["catalogue_url"].as_str())
        .collect();
    ensure!(urls.len() == 3, "composed_of urls {urls:?}");
    let remote: Vec<&str> = urls.iter().copied().filter(|u| u.starts_with(&a.descriptor().base_url)).collect();
    ensure!(remote.len() == 2, "links to A: {remote:?}");
    for u in remote {
        let status = transport.get(u).map_err(|e| e.to_string())?.status;
        ensure!(status == 200, "{u}: {status}");
    }

    let k = b.load(k_ref).map_err(|e| e.to_string())?;
    let l = b.load(l_ref).map_err(|e| e.to_string())?;
    let (Dataset::Knowledge(k), Dataset::Language(l)) = (k.dataset, l.dataset) else {
        return Err("fetched datasets have the wrong kinds".into());
    };
    let back = decompose_graph(&composed.graph, &l, &k).map_err(|e| e.to_string())?;
    ensure!(
        back.canonicalized() == tb.output.standardised.clone().canonicalized(),
        "decompose under A's context does not give B's S"
    );
    let report = b.repository().integrity_check().map_err(|e| e.to_string())?;
    ensure!(report.is_empty(), "B integrity: {report:?}");
    Ok(())
}

/// Stored CREP bytes of the four walkthrough outputs, S to G.
pub fn walkthrough_bytes(node: &Node, t: &livedata::node::Transformed) -> Vec<Vec<u8>> {
    t.output
        .refs()
        .iter()
        .map(|r| node.repository().get_bytes(r, Partition::Crep).unwrap())
        .collect()
}

/// Two runs from the same inputs give the same refs, bytes and hashes, and
/// the bytes match the pinned digests.
pub fn determinism(root_a: &Path, root_b: &Path) -> Result<(), String> {
    let (na, ta) = walkthrough_node("unitn", root_a);
    let (nb, tb) = walkthrough_node("unitn", root_b);
    ensure!(ta.output.refs() == tb.output.refs(), "refs differ");
    let (ba, bb) = (walkthrough_bytes(&na, &ta), walkthrough_bytes(&nb, &tb));
    for (i, (x, y)) in ba.iter().zip(&bb).enumerate() {
        let (kind, pinned) = WALKTHROUGH_DIGESTS[i];
        ensure!(x == y, "{kind} bytes differ between runs");
        ensure!(sha256_hex(x) == pinned, "{kind} digest {} != pinned {pinned}", sha256_hex(x));
    }
    for r in ta.output.refs() {
        let [ma, mb] = [&na, &nb].map(|n| n.repository().entry(r, Partition::Drep).unwrap().metadata.unwrap());
        ensure!(ma.content_hash == mb.content_hash, "{r}: content hashes differ");
        ensure!(
            livedata::model::MetadataRecord { issued_at: ma.issued_at, ..mb } == ma,
            "{r}: metadata differs beyond issued_at"
        );
    }
    Ok(())
}
