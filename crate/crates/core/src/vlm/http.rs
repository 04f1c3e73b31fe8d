//! `http_chat` wire formats and the retrying sender.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use base64::Engine;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::backend::{Adapter, AuthStyle, BackendConfig};
use super::prompt::Prompt;
use super::QueryError;

static HTTP_REQUESTS: AtomicU64 = AtomicU64::new(0);

/// Number of HTTP requests this process has attempted.
pub fn http_request_count() -> u64 {
    HTTP_REQUESTS.load(Ordering::SeqCst)
}

const MAX_BACKOFF: Duration = Duration::from_secs(30);
const SNIPPET_CHARS: usize = 300;

/// Replaces every occurrence of `secret` in `text`.
pub fn scrub(text: &str, secret: &str) -> String {
    if secret.is_empty() {
        text.to_string()
    } else {
        text.replace(secret, "[REDACTED]")
    }
}

fn snippet(body: &str, secret: &str) -> String {
    scrub(&body.chars().take(SNIPPET_CHARS).collect::<String>(), secret)
}

/// Request body. With `image_data` set to `None` the image is replaced by
/// its digest, which is what transcripts store.
pub(crate) fn request_body(cfg: &BackendConfig, prompt: &Prompt, inline_image: bool) -> Value {
    let image_data = if inline_image {
        base64::engine::general_purpose::STANDARD.encode(&prompt.image_png)
    } else {
        format!("sha256:{}", hex::encode(Sha256::digest(&prompt.image_png)))
    };
    let has_image = !prompt.image_png.is_empty();
    let content = match cfg.adapter {
        Adapter::ContentParts => {
            let mut parts = vec![json!({"type": "text", "text": prompt.text})];
            if has_image {
                parts.push(json!({
                    "type": "image_url",
                    "image_url": {"url": format!("data:image/png;base64,{image_data}")}
                }));
            }
            parts
        }
        Adapter::Messages => {
            let mut parts = Vec::new();
            if has_image {
                parts.push(json!({
                    "type": "image",
                    "source": {"type": "base64", "media_type": "image/png", "data": image_data}
                }));
            }
            parts.push(json!({"type": "text", "text": prompt.text}));
            parts
        }
    };
    json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
        "messages": [{"role": "user", "content": content}],
    })
}

fn join_text_parts(parts: &[Value]) -> Option<String> {
    let texts: Vec<&str> = parts
        .iter()
        .filter(|p| p.get("type").and_then(Value::as_str).is_none_or(|t| t == "text"))
        .filter_map(|p| p.get("text").and_then(Value::as_str))
        .collect();
    (!texts.is_empty()).then(|| texts.concat())
}

pub(crate) fn response_text(adapter: Adapter, body: &Value) -> Option<String> {
    match adapter {
        Adapter::ContentParts => match body.pointer("/choices/0/message/content")? {
            Value::String(s) => Some(s.clone()),
            Value::Array(parts) => join_text_parts(parts),
            _ => None,
        },
        Adapter::Messages => join_text_parts(body.get("content")?.as_array()?),
    }
}

pub(crate) struct Exchange {
    pub result: Result<String, QueryError>,
    pub attempts: u32,
}

fn backoff(cfg: &BackendConfig, attempt: u32, retry_after: Option<Duration>) -> Duration {
    let exp = Duration::from_millis(cfg.backoff_ms).saturating_mul(1u32 << attempt.min(16));
    retry_after.unwrap_or(exp).min(MAX_BACKOFF)
}

fn retry_after(resp: &reqwest::blocking::Response) -> Option<Duration> {
    let secs: f64 = resp.headers().get("retry-after")?.to_str().ok()?.trim().parse().ok()?;
    (secs.is_finite() && secs >= 0.0).then(|| Duration::from_secs_f64(secs))
}

/// POSTs the prompt, retrying timeouts, connection failures, 429 and 5xx
/// with exponential backoff. Auth failures and malformed bodies are final.
pub(crate) fn send(client: &reqwest::blocking::Client, cfg: &BackendConfig, prompt: &Prompt, credential: &str) -> Exchange {
    let endpoint = cfg.endpoint.as_deref().unwrap_or_default();
    let body = request_body(cfg, prompt, true);
    let mut attempts = 0;
    let mut last = QueryError::Transport("no attempt made".into());
    let mut hint = None;
    for attempt in 0..=cfg.max_retries {
        if attempt > 0 {
            std::thread::sleep(backoff(cfg, attempt - 1, hint.take()));
        }
        attempts += 1;
        HTTP_REQUESTS.fetch_add(1, Ordering::SeqCst);
        let mut req = client.post(endpoint).json(&body);
        req = match cfg.auth {
            AuthStyle::Bearer => req.bearer_auth(credential),
            AuthStyle::ApiKeyHeader => req.header("x-api-key", credential),
        };
        for (k, v) in &cfg.headers {
            req = req.header(k, v);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => {
                last = QueryError::Timeout { attempts };
                continue;
            }
            Err(e) => {
                last = QueryError::Transport(scrub(&e.to_string(), credential));
                continue;
            }
        };
        let status = resp.status().as_u16();
        let wait_hint = retry_after(&resp);
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => {
                last = QueryError::Timeout { attempts };
                continue;
            }
            Err(e) => {
                last = QueryError::Transport(scrub(&e.to_string(), credential));
                continue;
            }
        };
        match status {
            401 | 403 => {
                return Exchange {
                    result: Err(QueryError::Auth { status }),
                    attempts,
                }
            }
            429 | 500..=599 => {
                last = QueryError::Http {
                    status,
                    snippet: snippet(&text, credential),
                };
                hint = wait_hint;
                continue;
            }
            200..=299 => {}
            _ => {
                return Exchange {
                    result: Err(QueryError::Http {
                        status,
                        snippet: snippet(&text, credential),
                    }),
                    attempts,
                }
            }
        }
        let result = match serde_json::from_str::<Value>(&text) {
            Err(_) => Err(QueryError::NonJson {
                status,
                snippet: snippet(&text, credential),
            }),
            Ok(json) => response_text(cfg.adapter, &json)
                .map(|t| scrub(&t, credential))
                .ok_or_else(|| QueryError::UnexpectedShape {
                snippet: snippet(&text, credential),
            }),
        };
        return Exchange { result, attempts };
    }
    if let QueryError::Timeout { .. } = last {
        last = QueryError::Timeout { attempts };
    }
    Exchange {
        result: Err(last),
        attempts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vlm::TemplateId;

    fn prompt() -> Prompt {
        Prompt {
            template_id: TemplateId::Instructional,
            text: "go".into(),
            image_png: vec![0x89, b'P', b'N', b'G'],
            hash: "h".into(),
        }
    }

    #[test]
    fn content_parts_shape() {
        let cfg = BackendConfig::http_chat("http://x", "m", "K");
        let body = request_body(&cfg, &prompt(), true);
        assert_eq!(body["messages"][0]["content"][0]["text"], "go");
        assert_eq!(body["messages"][0]["content"][1]["image_url"]["url"], "data:image/png;base64,iVBORw==");
        assert_eq!(body["temperature"], 0.0);
        let stored = request_body(&cfg, &prompt(), false);
        assert!(stored["messages"][0]["content"][1]["image_url"]["url"]
            .as_str()
            .unwrap()
            .starts_with("data:image/png;base64,sha256:"));
    }

    #[test]
    fn messages_shape() {
        let mut cfg = BackendConfig::http_chat("http://x", "m", "K");
        cfg.adapter = Adapter::Messages;
        let body = request_body(&cfg, &prompt(), true);
        assert_eq!(body["messages"][0]["content"][0]["source"]["data"], "iVBORw==");
        assert_eq!(body["messages"][0]["content"][1]["text"], "go");
    }

    #[test]
    fn extracts_reply_text() {
        let a = json!({"choices": [{"message": {"role": "assistant", "content": "hello"}}]});
        assert_eq!(response_text(Adapter::ContentParts, &a).as_deref(), Some("hello"));
        let b = json!({"choices": [{"message": {"content": [{"type": "text", "text": "a"}, {"type": "text", "text": "b"}]}}]});
        assert_eq!(response_text(Adapter::ContentParts, &b).as_deref(), Some("ab"));
        let c = json!({"content": [{"type": "text", "text": "plan"}], "stop_reason": "end_turn"});
        assert_eq!(response_text(Adapter::Messages, &c).as_deref(), Some("plan"));
        assert_eq!(response_text(Adapter::Messages, &a), None);
    }

    #[test]
    fn scrubbing_and_backoff() {
        assert_eq!(scrub("key=sk-123 again sk-123", "sk-123"), "key=[REDACTED] again [REDACTED]");
        assert_eq!(scrub("abc", ""), "abc");
        let mut cfg = BackendConfig::http_chat("http://x", "m", "K");
        cfg.backoff_ms = 100;
        assert_eq!(backoff(&cfg, 0, None), Duration::from_millis(100));
        assert_eq!(backoff(&cfg, 3, None), Duration::from_millis(800));
        assert_eq!(backoff(&cfg, 20, None), MAX_BACKOFF);
        assert_eq!(backoff(&cfg, 0, Some(Duration::from_secs(2))), Duration::from_secs(2));
    }
}
