//! HTTP seam. Every network call in the crate goes through [`Transport`] so
//! tests can capture requests or script failures without a server.

use std::time::Duration;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpRequest {
    pub fn post(url: impl Into<String>, content_type: &str, body: Vec<u8>) -> Self {
        Self {
            url: url.into(),
            headers: vec![("Content-Type".into(), content_type.into())],
            body,
        }
    }

    pub fn header(mut self, name: &str, value: impl Into<String>) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

pub trait Transport: Send + Sync {
    /// Sends a POST. Connection-level failures come back as [`Error::Retryable`];
    /// any HTTP status is returned as a response.
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse>;
}

/// Maps an HTTP status onto the crate's retry semantics.
pub fn check_status(endpoint: &str, response: HttpResponse) -> Result<Vec<u8>> {
    let snippet = || {
        let text = String::from_utf8_lossy(&response.body);
        let text: String = text.chars().take(200).collect();
        format!("HTTP {}: {}", response.status, text)
    };
    match response.status {
        200..=299 => Ok(response.body),
        401 | 403 => Err(Error::Auth {
            endpoint: endpoint.into(),
            message: snippet(),
        }),
        408 | 429 | 500..=599 => Err(Error::Retryable {
            endpoint: endpoint.into(),
            message: snippet(),
        }),
        _ => Err(Error::Rejected {
            endpoint: endpoint.into(),
            message: snippet(),
        }),
    }
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

const MAX_BODY: u64 = 64 * 1024 * 1024;

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for UreqTransport {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse> {
        let retryable = |e: ureq::Error| Error::Retryable {
            endpoint: request.url.clone(),
            message: e.to_string(),
        };
        let mut builder = self.agent.post(&request.url);
        for (name, value) in &request.headers {
            builder = builder.header(name.as_str(), value.as_str());
        }
        let response = builder.send(&request.body[..]).map_err(|e| match e {
            ureq::Error::BadUri(m) => Error::Config(format!("bad endpoint {}: {m}", request.url)),
            other => retryable(other),
        })?;
        let status = response.status().as_u16();
        let body = response
            .into_body()
            .with_config()
            .limit(MAX_BODY)
            .read_to_vec()
            .map_err(retryable)?;
        Ok(HttpResponse { status, body })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resp(status: u16) -> HttpResponse {
        HttpResponse {
            status,
            body: b"nope".to_vec(),
        }
    }

    #[test]
    fn status_classes() {
        assert!(check_status("e", resp(200)).is_ok());
        assert!(matches!(check_status("e", resp(401)), Err(Error::Auth { .. })));
        assert!(matches!(check_status("e", resp(503)), Err(Error::Retryable { .. })));
        assert!(matches!(check_status("e", resp(429)), Err(Error::Retryable { .. })));
        assert!(matches!(check_status("e", resp(400)), Err(Error::Rejected { .. })));
    }

    #[test]
    fn refused_connection_is_retryable_and_names_endpoint() {
        // Bind then drop to get a port nobody listens on.
        let port = std::net::TcpListener::bind("127.0.0.1:0")
            .unwrap()
            .local_addr()
            .unwrap()
            .port();
        let url = format!("http://127.0.0.1:{port}/x");
        let t = UreqTransport::new(Duration::from_secs(2));
        let err = t.post(&HttpRequest::post(&url, "text/plain", vec![])).unwrap_err();
        assert!(err.is_retryable());
        assert!(err.to_string().contains(&url), "{err}");
    }
}
