mod common;

use std::sync::Arc;

use common::scenarios;
use common::*;
use livedata::catalogue::{router, serve, ApiRequest, SearchPage};
use livedata::model::{ContentKind, DownloadPolicy};
use serde_json::json;

#[test]
fn conformance() {
    let dir = tempfile::tempdir().unwrap();
    scenarios::catalogue_conformance(dir.path()).unwrap();
}

#[test]
fn fresh_node_has_zero_counts() {
    let dir = tempfile::tempdir().unwrap();
    let node = init_node("unitn", dir.path(), None);
    let landing = json(&get(&node.catalogue(), "/api/v1/node"));
    assert_eq!(landing["total"], 0);
    assert_eq!(landing["node_id"], "unitn");
    for kind in ["standardised", "language", "knowledge", "graph"] {
        assert_eq!(landing["counts"][kind], 0, "{kind}");
    }
    let list: SearchPage = get(&node.catalogue(), "/api/v1/datasets?kinds=language").json_body().unwrap();
    assert_eq!(list.total, 0);
    assert!(list.results.is_empty());
}

#[test]
fn counts_follow_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let node = init_node("unitn", dir.path(), None);
    let t = collect_and_transform(&node, "unitn");
    let catalogue = node.catalogue();
    node.distribute(&t.output.language.id, &fields("unitn"), DownloadPolicy::Automatic).unwrap();
    assert_eq!(json(&get(&catalogue, "/api/v1/node"))["counts"]["language"], 1);
    assert_eq!(json(&get(&catalogue, "/api/v1/node"))["total"], 1);
}

#[test]
fn kind_filter_and_paging() {
    let dir = tempfile::tempdir().unwrap();
    let (node, _) = walkthrough_node("unitn", dir.path());
    let catalogue = node.catalogue();
    let page: SearchPage = get(&catalogue, "/api/v1/datasets?kinds=language").json_body().unwrap();
    assert_eq!(page.total, 1);
    assert!(page.results.iter().all(|h| h.kinds == [ContentKind::Language]));

    let first: SearchPage = get(&catalogue, "/api/v1/datasets?page_size=3").json_body().unwrap();
    let second: SearchPage = get(&catalogue, "/api/v1/datasets?page_size=3&page=2").json_body().unwrap();
    assert_eq!((first.total, first.results.len(), second.results.len()), (4, 3, 1));
    let mut all: Vec<_> = first.results.iter().chain(&second.results).map(|h| h.dataset.to_string()).collect();
    all.dedup();
    assert_eq!(all.len(), 4);
}

#[test]
fn graph_detail_has_three_composition_links() {
    let dir = tempfile::tempdir().unwrap();
    let (node, t) = walkthrough_node("unitn", dir.path());
    let detail = json(&get(&node.catalogue(), &path_of(&t.output.graph.id)));
    let links = detail["links"]["composed_of"].as_array().unwrap();
    assert_eq!(links.len(), 3);
    assert!(links.iter().all(|l| l["remote"] == false && l["catalogue_url"].is_string()));
    assert_eq!(
        detail["download_url"],
        format!("http://unitn.livedata.example{}/download", path_of(&t.output.graph.id))
    );
}

#[test]
fn error_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let (node, t) = walkthrough_node("unitn", dir.path());
    let catalogue = node.catalogue();
    let cases = [
        ("/api/v1/datasets/unitn/nothing-here/1", 404, "not_found"),
        ("/api/v1/datasets/unitn/unitn-university-graph/0", 400, "bad_query"),
        ("/api/v1/datasets?kinds=low_quality", 400, "bad_query"),
        ("/api/v1/datasets?page=0", 400, "bad_query"),
        ("/api/v1/datasets?page_size=1000", 400, "bad_query"),
        ("/api/v1/datasets?colour=red", 400, "bad_query"),
        ("/api/v1/nowhere", 404, "not_found"),
        ("/api/v1/requests/unknown", 404, "not_found"),
        ("/api/v1/requests", 403, "admin_disabled"),
    ];
    for (path, status, code) in cases {
        let resp = get(&catalogue, path);
        assert_eq!(resp.status, status, "{path}");
        assert_eq!(json(&resp)["error"]["code"], code, "{path}");
    }
    let bad_field = json(&get(&catalogue, "/api/v1/datasets?page=zero"));
    assert_eq!(bad_field["error"]["field"], "page");

    // Automatic datasets do not take requests.
    let s = path_of(&t.output.standardised.id);
    let resp = catalogue.handle(&ApiRequest::post_json(
        &format!("{s}/requests"),
        &json!({"contact": "a@example.org", "justification": "x"}),
    ));
    assert_eq!(resp.status, 409);
    let resp = catalogue.handle(&ApiRequest::new("DELETE", &s));
    assert_eq!(resp.status, 405);
    let resp = catalogue.handle(&ApiRequest::new("POST", &format!("{s}/requests")).with_header("content-type", "application/json"));
    assert_eq!(resp.status, 400);
}

#[test]
fn request_flow_and_denial() {
    let dir = tempfile::tempdir().unwrap();
    let node = init_node("unitn", dir.path(), None);
    let t = collect_and_transform(&node, "unitn");
    node.distribute(&t.output.standardised.id, &fields("unitn"), DownloadPolicy::Request).unwrap();
    let catalogue = node.catalogue().with_admin_token("tok");
    let s = path_of(&t.output.standardised.id);

    let blocked = json(&get(&catalogue, &format!("{s}/download")));
    assert_eq!(blocked["error"]["code"], "request_required");
    assert_eq!(blocked["error"]["request_endpoint"], format!("http://unitn.livedata.example{s}/requests"));

    let post = |body| catalogue.handle(&ApiRequest::post_json(&format!("{s}/requests"), &body));
    let created = json(&post(json!({"contact": "ana@example.org", "justification": "thesis"})));
    assert_eq!(created["status"], "pending");
    assert!(created.get("token").is_none());
    let id = created["request_id"].as_str().unwrap();

    let admin = |path: &str| ApiRequest::new("POST", path).with_header("x-admin-token", "tok");
    let wrong = catalogue.handle(&ApiRequest::new("POST", &format!("/api/v1/requests/{id}/deny")).with_header("x-admin-token", "nope"));
    assert_eq!((wrong.status, json(&wrong)["error"]["code"].as_str()), (403, Some("admin_token")));
    let denied = json(&catalogue.handle(&admin(&format!("/api/v1/requests/{id}/deny"))));
    assert_eq!(denied["status"], "denied");
    assert!(denied.get("token").is_none());
    assert_eq!(catalogue.handle(&admin(&format!("/api/v1/requests/{id}/approve"))).status, 409);
    assert_eq!(json(&get(&catalogue, &format!("/api/v1/requests/{id}")))["status"], "denied");

    let bogus = get(&catalogue, &format!("{s}/download?token=bogus"));
    assert_eq!((bogus.status, json(&bogus)["error"]["code"].as_str()), (403, Some("invalid_token")));

    let listed = catalogue.handle(&ApiRequest::get("/api/v1/requests").with_header("x-admin-token", "tok"));
    assert_eq!(json(&listed).as_array().unwrap().len(), 1);
}

#[test]
fn cors_preflight() {
    let dir = tempfile::tempdir().unwrap();
    let node = init_node("unitn", dir.path(), None);
    let resp = node.catalogue().handle(&ApiRequest::new("OPTIONS", "/api/v1/datasets"));
    assert_eq!(resp.status, 204);
    assert_eq!(resp.header("access-control-allow-origin"), Some("*"));
}

#[test]
fn served_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let (node, t) = walkthrough_node("unitn", dir.path());
    let catalogue = Arc::new(node.catalogue());
    let _ = router(catalogue.clone());
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    let server = rt.spawn(serve(listener, catalogue, std::future::pending()));

    let client = reqwest::blocking::Client::new();
    let url = format!("http://{addr}{}/download", path_of(&t.output.knowledge.id));
    let resp = client.get(&url).send().unwrap();
    assert_eq!(resp.status(), 200);
    assert!(resp.headers()["content-type"].to_str().unwrap().starts_with("text/turtle"));
    let hash = resp.headers()["x-content-sha256"].to_str().unwrap().to_string();
    let body = resp.bytes().unwrap();
    assert_eq!(livedata::formats::sha256_hex(&body), hash);
    let resp = client.get(format!("http://{addr}/api/v1/datasets?text=professori")).send().unwrap();
    let page: SearchPage = serde_json::from_slice(&resp.bytes().unwrap()).unwrap();
    assert_eq!(page.total, 4);

    server.abort();
}
