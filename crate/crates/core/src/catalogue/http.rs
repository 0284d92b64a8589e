//! Transport-neutral request/response types and the axum adapter.

use std::future::Future;
use std::sync::Arc;

use axum::body::Body;
use axum::extract::Request;
use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::response::Response;
use axum::Router;
use serde::Serialize;

use super::Catalogue;

/// Largest request body accepted by the server.
pub const MAX_BODY_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiRequest {
    /// Uppercase method name.
    pub method: String,
    /// Percent-encoded path without the query.
    pub path: String,
    /// Decoded query pairs in order.
    pub query: Vec<(String, String)>,
    /// Headers with lowercase names.
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl ApiRequest {
    /// Builds a request from a path that may carry a query string.
    pub fn new(method: &str, path_and_query: &str) -> ApiRequest {
        let (path, query) = path_and_query.split_once('?').unwrap_or((path_and_query, ""));
        ApiRequest {
            method: method.to_ascii_uppercase(),
            path: path.to_owned(),
            query: form_urlencoded::parse(query.as_bytes()).into_owned().collect(),
            headers: Vec::new(),
            body: Vec::new(),
        }
    }

    pub fn get(path_and_query: &str) -> ApiRequest {
        ApiRequest::new("GET", path_and_query)
    }

    pub fn post_json<T: Serialize>(path: &str, body: &T) -> ApiRequest {
        ApiRequest {
            body: serde_json::to_vec(body).expect("serializable body"),
            ..ApiRequest::new("POST", path)
        }
        .with_header("content-type", "application/json")
    }

    pub fn with_header(mut self, name: &str, value: &str) -> ApiRequest {
        self.headers.push((name.to_ascii_lowercase(), value.to_owned()));
        self
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn query_param(&self, name: &str) -> Option<&str> {
        self.query.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    /// Lowercase names.
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl ApiResponse {
    pub fn json<T: Serialize>(status: u16, value: &T) -> ApiResponse {
        let mut body = serde_json::to_vec_pretty(value).expect("serializable response");
        body.push(b'\n');
        ApiResponse {
            status,
            headers: vec![("content-type".into(), "application/json".into())],
            body,
        }
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// Parses the body as JSON.
    pub fn json_body<T: serde::de::DeserializeOwned>(&self) -> serde_json::Result<T> {
        serde_json::from_slice(&self.body)
    }
}

async fn dispatch(catalogue: Arc<Catalogue>, request: Request) -> Response {
    let (parts, body) = request.into_parts();
    let mut api = ApiRequest::new(
        parts.method.as_str(),
        parts.uri.path_and_query().map_or(parts.uri.path(), |pq| pq.as_str()),
    );
    api.headers = parts
        .headers
        .iter()
        .filter_map(|(k, v)| Some((k.as_str().to_owned(), v.to_str().ok()?.to_owned())))
        .collect();
    let resp = match axum::body::to_bytes(body, MAX_BODY_BYTES).await {
        Ok(bytes) => {
            api.body = bytes.to_vec();
            tokio::task::spawn_blocking(move || catalogue.handle(&api))
                .await
                .unwrap_or_else(|e| super::error_response(500, "internal", &e.to_string(), None))
        }
        Err(_) => super::error_response(413, "body_too_large", "request body is too large", None),
    };
    into_axum(resp)
}

fn into_axum(resp: ApiResponse) -> Response {
    let mut out = Response::new(Body::from(resp.body));
    *out.status_mut() = StatusCode::from_u16(resp.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    for (k, v) in resp.headers {
        if let (Ok(k), Ok(v)) = (HeaderName::try_from(k), HeaderValue::try_from(v)) {
            out.headers_mut().append(k, v);
        }
    }
    out
}

/// Router that sends every request to [`Catalogue::handle`].
pub fn router(catalogue: Arc<Catalogue>) -> Router {
    Router::new().fallback(move |req: Request| dispatch(catalogue.clone(), req))
}

/// Serves the catalogue on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    catalogue: Arc<Catalogue>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(catalogue))
        .with_graceful_shutdown(shutdown)
        .await
}
