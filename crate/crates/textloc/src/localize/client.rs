//! Client for an OpenAI-compatible chat-completions endpoint.

use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::protocol::{assemble_prompt, parse_model_output};
use super::{LocalizationResult, Method};
use crate::bev::BevImage;
use crate::error::{Error, Result};
use crate::geom::pixel_to_world;
use crate::query_gen::Hint;
use crate::scene_graph::SceneGraph;

/// Remote endpoint settings. The auth token is read from the environment
/// variable named in `token_env` and never stored in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Base URL, e.g. `https://host:port/v1`.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: Option<String>,
    pub timeout_s: u64,
    /// Retries after a malformed response; total attempts = retries + 1.
    pub max_retries: u32,
    /// Upper bound on concurrent in-flight requests in batch runs.
    pub max_in_flight: usize,
    /// Log request/response bodies to stderr with the token redacted.
    #[serde(default)]
    pub trace: bool,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model: "default".into(),
            token_env: None,
            timeout_s: 120,
            max_retries: 2,
            max_in_flight: 4,
            trace: false,
        }
    }
}

impl EndpointConfig {
    fn token(&self) -> Result<Option<String>> {
        match &self.token_env {
            None => Ok(None),
            Some(var) => std::env::var(var).map(Some).map_err(|_| {
                Error::Config(format!("auth token environment variable {var} is not set"))
            }),
        }
    }

    fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

fn trace_log(config: &EndpointConfig, direction: &str, body: &str) {
    if config.trace {
        eprintln!("[trace] {direction} {}", body.replace('\n', " "));
    }
}

/// One POST to the endpoint; returns the assistant message content.
fn post_chat(
    agent: &ureq::Agent,
    config: &EndpointConfig,
    token: Option<&str>,
    payload: &serde_json::Value,
) -> std::result::Result<String, String> {
    let body = serde_json::to_string(payload).expect("payload serializes");
    trace_log(config, "request", &body);
    let mut request = agent
        .post(config.completions_url())
        .header("Content-Type", "application/json");
    if let Some(token) = token {
        request = request.header("Authorization", &format!("Bearer {token}"));
    }
    let mut response = request
        .send(body)
        .map_err(|e| format!("transport error: {e}"))?;
    let status = response.status().as_u16();
    let text = response
        .body_mut()
        .read_to_string()
        .map_err(|e| format!("transport error reading body: {e}"))?;
    trace_log(config, &format!("response status={status}"), &text);
    if status == 401 || status == 403 {
        return Err(format!("auth failure: HTTP {status}"));
    }
    if !(200..300).contains(&status) {
        return Err(format!(
            "HTTP {status}: {}",
            text.chars().take(200).collect::<String>()
        ));
    }
    let parsed: ChatResponse =
        serde_json::from_str(&text).map_err(|e| format!("unexpected response shape: {e}"))?;
    parsed
        .choices
        .first()
        .map(|c| c.message.content.clone())
        .ok_or_else(|| "response has no choices".to_string())
}

/// Localizes one query via the endpoint: assemble, POST, parse, retrying
/// malformed output up to `max_retries` times. Remote misbehavior never
/// panics; exhaustion and transport failures yield a failed result.
pub fn vlm_localize(
    config: &EndpointConfig,
    query_id: u64,
    bev: &BevImage,
    graph: &SceneGraph,
    hints: &[Hint],
    system_text: &str,
) -> LocalizationResult {
    if config.timeout_s == 0 {
        return LocalizationResult::failed(
            query_id,
            Method::Vlm,
            "endpoint timeout must be positive".into(),
            None,
        );
    }
    let token = match config.token() {
        Ok(t) => t,
        Err(e) => return LocalizationResult::failed(query_id, Method::Vlm, e.to_string(), None),
    };
    let mut png = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut png, bev.georef.width_px, bev.georef.height_px);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = match encoder.write_header() {
            Ok(w) => w,
            Err(e) => {
                return LocalizationResult::failed(
                    query_id,
                    Method::Vlm,
                    format!("png encode: {e}"),
                    None,
                )
            }
        };
        if let Err(e) = writer.write_image_data(&bev.to_rgb_bytes()) {
            return LocalizationResult::failed(
                query_id,
                Method::Vlm,
                format!("png encode: {e}"),
                None,
            );
        }
    }
    let png_base64 = base64::engine::general_purpose::STANDARD.encode(&png);

    let payload = match assemble_prompt(graph, hints, system_text, &config.model, &png_base64) {
        Ok(p) => p,
        Err(e) => return LocalizationResult::failed(query_id, Method::Vlm, e.to_string(), None),
    };

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(config.timeout_s)))
        .http_status_as_error(false)
        .build()
        .into();

    let mut last_raw: Option<String> = None;
    let mut last_error = String::new();
    for _attempt in 0..=config.max_retries {
        let content = match post_chat(&agent, config, token.as_deref(), &payload) {
            Ok(c) => c,
            Err(e) => {
                // transport and auth failures are not retried as malformed output
                return LocalizationResult::failed(query_id, Method::Vlm, e, last_raw);
            }
        };
        match parse_model_output(
            &content,
            hints.len(),
            bev.georef.width_px,
            bev.georef.height_px,
        ) {
            Ok(pred) => {
                let world = pixel_to_world(pred.point_2d, &bev.georef)
                    .expect("validated pixel is in raster");
                return LocalizationResult {
                    query_id,
                    method: Method::Vlm,
                    predicted_pixel: Some(pred.point_2d),
                    predicted_world: Some(world),
                    assignments: Some(pred.assignments),
                    raw_output: Some(content),
                    failure: None,
                };
            }
            Err(e) => {
                last_error = e.to_string();
                last_raw = Some(content);
            }
        }
    }
    LocalizationResult::failed(
        query_id,
        Method::Vlm,
        format!(
            "malformed output after {} attempts: {last_error}",
            config.max_retries + 1
        ),
        last_raw,
    )
}
