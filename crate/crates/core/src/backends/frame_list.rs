//! Multimodal chat-completions request shape: one user message whose content
//! is the images in frame order followed by the prompt text.

use std::sync::atomic::Ordering;
use std::time::Instant;

use base64::Engine;
use serde_json::{json, Value};

use super::transport::{check_status, HttpRequest};
use super::{Backend, BackendKind, InferenceResponse};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::trace::redact;

pub fn build_chat_request(model: &str, temperature: f64, prompt: &str, frames: &[Frame]) -> Result<Value> {
    let mut content = Vec::with_capacity(frames.len() + 1);
    for frame in frames {
        let png = frame.encode_png()?;
        let data = base64::engine::general_purpose::STANDARD.encode(png);
        content.push(json!({
            "type": "image_url",
            "image_url": {"url": format!("data:image/png;base64,{data}")}
        }));
    }
    content.push(json!({"type": "text", "text": prompt}));
    Ok(json!({
        "model": model,
        "temperature": temperature,
        "messages": [{"role": "user", "content": content}]
    }))
}

/// Text of the first choice. Accepts string content or a list of text parts.
pub fn parse_chat_response(body: &[u8]) -> Result<String> {
    let value: Value =
        serde_json::from_slice(body).map_err(|e| Error::Format(format!("chat response is not JSON: {e}")))?;
    let content = &value["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join("")),
        _ => Err(Error::Format("chat response has no choices[0].message.content".into())),
    }
}

impl Backend {
    pub fn infer_frames(&self, prompt: &str, frames: &[Frame]) -> Result<InferenceResponse> {
        if self.config.kind != BackendKind::FrameList {
            return Err(Error::Config(format!("infer_frames called on a {} backend", self.config.kind)));
        }
        if frames.is_empty() {
            return Err(Error::Precondition("no frames to send".into()));
        }
        let key = self.api_key()?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let endpoint = self.endpoint().to_string();
        let body = build_chat_request(&self.config.model_id, self.config.temperature, prompt, frames)?;
        if self.trace.as_ref().is_some_and(|t| t.verbose()) {
            self.trace_event("request", json!({"endpoint": endpoint, "body": redact(&body)}));
        }
        let mut request = HttpRequest::post(&endpoint, "application/json", serde_json::to_vec(&body).expect("json"));
        if let Some(key) = key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }

        let start = Instant::now();
        let (text, attempts) = self.config.retry_policy().run(
            |_| {
                self.limiter.acquire();
                let response = self.transport.post(&request)?;
                let body = check_status(&endpoint, response)?;
                parse_chat_response(&body)
            },
            |attempt, err, delay| {
                log::warn!("{endpoint}: attempt {attempt} failed ({err}), retrying in {delay:?}");
                self.trace_event(
                    "retry",
                    json!({"endpoint": endpoint, "attempt": attempt, "error": err.to_string()}),
                );
            },
        )?;
        if self.trace.as_ref().is_some_and(|t| t.verbose()) {
            self.trace_event("response", json!({"endpoint": endpoint, "text": text, "attempts": attempts}));
        }
        Ok(InferenceResponse {
            text,
            latency_secs: start.elapsed().as_secs_f64(),
            attempt_count: attempts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::transport::{HttpResponse, Transport};
    use crate::backends::BackendConfig;
    use std::sync::{Arc, Mutex};

    /// Answers with the number of attached images; fails the first `fail` calls with 503.
    struct EchoTransport {
        fail: Mutex<u32>,
        seen: Mutex<Vec<HttpRequest>>,
    }

    impl Transport for EchoTransport {
        fn post(&self, request: &HttpRequest) -> Result<HttpResponse> {
            self.seen.lock().unwrap().push(request.clone());
            let mut fail = self.fail.lock().unwrap();
            if *fail > 0 {
                *fail -= 1;
                return Ok(HttpResponse {
                    status: 503,
                    body: b"busy".to_vec(),
                });
            }
            let body: Value = serde_json::from_slice(&request.body).unwrap();
            let images = body["messages"][0]["content"]
                .as_array()
                .unwrap()
                .iter()
                .filter(|p| p["type"] == "image_url")
                .count();
            Ok(HttpResponse {
                status: 200,
                body: json!({"choices": [{"message": {"content": format!("{images} images")}}]})
                    .to_string()
                    .into_bytes(),
            })
        }
    }

    fn backend(fail: u32, api_key_env: Option<&str>) -> (Backend, Arc<EchoTransport>) {
        let transport = Arc::new(EchoTransport {
            fail: Mutex::new(fail),
            seen: Mutex::new(Vec::new()),
        });
        let config = BackendConfig {
            kind: BackendKind::FrameList,
            endpoint: Some("http://model.test/v1/chat/completions".into()),
            model_id: "llava-onevision-7b".into(),
            api_key_env: api_key_env.map(String::from),
            backoff_base_ms: 0,
            backoff_max_ms: 0,
            ..Default::default()
        };
        (Backend::with_transport(config, transport.clone()).unwrap(), transport)
    }

    fn frames(n: usize) -> Vec<Frame> {
        (0..n).map(|i| Frame::filled(4, 4, [i as u8, 0, 0], i as f64)).collect()
    }

    #[test]
    fn images_go_out_in_order() {
        let (b, t) = backend(0, None);
        let input = frames(15);
        let r = b.infer_frames("which object?", &input).unwrap();
        assert_eq!(r.text, "15 images");
        assert_eq!(r.attempt_count, 1);
        let sent: Value = serde_json::from_slice(&t.seen.lock().unwrap()[0].body).unwrap();
        let parts = sent["messages"][0]["content"].as_array().unwrap();
        for (i, part) in parts[..15].iter().enumerate() {
            let url = part["image_url"]["url"].as_str().unwrap();
            let png = base64::engine::general_purpose::STANDARD
                .decode(url.trim_start_matches("data:image/png;base64,"))
                .unwrap();
            let img = image::load_from_memory(&png).unwrap().to_rgb8();
            assert_eq!(img.get_pixel(0, 0).0[0], i as u8);
        }
        assert_eq!(parts[15]["text"], "which object?");
        assert_eq!(sent["temperature"], 0.0);
    }

    #[test]
    fn retries_transient_failures() {
        let (b, t) = backend(2, None);
        let r = b.infer_frames("p", &frames(2)).unwrap();
        assert_eq!(r.attempt_count, 3);
        assert_eq!(t.seen.lock().unwrap().len(), 3);
    }

    #[test]
    fn exhausted_retries_carry_the_log() {
        let (b, _) = backend(10, None);
        let err = b.infer_frames("p", &frames(1)).unwrap_err();
        assert!(matches!(err, Error::RetriesExhausted { attempts: 4, .. }), "{err}");
    }

    #[test]
    fn missing_credential_fails_before_sending() {
        let (b, t) = backend(0, Some("HOICUE_TEST_KEY_THAT_IS_NOT_SET"));
        let err = b.infer_frames("p", &frames(1)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(t.seen.lock().unwrap().is_empty());
    }

    #[test]
    fn credential_goes_in_header() {
        std::env::set_var("HOICUE_TEST_KEY_SET", "sekrit");
        let (b, t) = backend(0, Some("HOICUE_TEST_KEY_SET"));
        b.infer_frames("p", &frames(1)).unwrap();
        let headers = &t.seen.lock().unwrap()[0].headers;
        assert!(headers.contains(&("Authorization".to_string(), "Bearer sekrit".to_string())));
    }

    #[test]
    fn response_shapes() {
        assert_eq!(
            parse_chat_response(br#"{"choices":[{"message":{"content":[{"type":"text","text":"The "},{"type":"text","text":"egg."}]}}]}"#).unwrap(),
            "The egg."
        );
        assert!(matches!(parse_chat_response(b"{}"), Err(Error::Format(_))));
        assert!(matches!(parse_chat_response(b"<html>"), Err(Error::Format(_))));
    }
}
