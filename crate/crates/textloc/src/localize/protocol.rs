//! Prompt assembly and strict parsing of model output.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::PixelCoord;
use crate::pna::Assignment;
use crate::query_gen::Hint;
use crate::scene_graph::{serialize_scene_graph, SceneGraph};

/// The instruction text sent as the system message, shipped at
/// `assets/system_prompt.txt`.
pub const DEFAULT_SYSTEM_PROMPT: &str = include_str!("../../assets/system_prompt.txt");

/// Loads an alternative system prompt from disk.
pub fn load_system_prompt(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("system prompt file {}: {e}", path.display())))
}

/// Ways a model response can fail to parse; each drives one retry.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MalformedOutput {
    #[error("no JSON object with an `assignments` key found in model output")]
    NoJson,
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("point_2d [{u}, {v}] outside {width}x{height} raster")]
    OutOfRaster {
        u: i64,
        v: i64,
        width: u32,
        height: u32,
    },
}

/// A validated model response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelPrediction {
    pub assignments: Vec<Assignment>,
    pub point_2d: PixelCoord,
}

#[derive(Deserialize)]
struct RawPrediction {
    assignments: Vec<RawAssignment>,
    point_2d: Vec<i64>,
}

#[derive(Deserialize)]
struct RawAssignment {
    object_label: String,
    grounded: bool,
    #[serde(default, deserialize_with = "deserialize_matched_node")]
    matched_node: Option<i64>,
}

/// Accepts an integer, JSON `null`, or the string `"None"` (the prompt
/// text says None; JSON requires null). Emitted canonically as null.
fn deserialize_matched_node<'de, D>(deserializer: D) -> std::result::Result<Option<i64>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum NodeField {
        Int(i64),
        Text(String),
        Null,
    }
    match NodeField::deserialize(deserializer)? {
        NodeField::Int(v) => Ok(Some(v)),
        NodeField::Null => Ok(None),
        NodeField::Text(s) if s == "None" || s == "null" => Ok(None),
        NodeField::Text(s) => Err(serde::de::Error::custom(format!(
            "matched_node must be an integer or None, got {s:?}"
        ))),
    }
}

/// Replaces bare `None` tokens outside string literals with `null` so
/// prompt-literal output still parses as JSON.
fn normalize_none_tokens(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if in_string {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            i += 1;
            continue;
        }
        if c == '"' {
            in_string = true;
            out.push(c);
            i += 1;
            continue;
        }
        if text[i..].starts_with("None")
            && !bytes[..i]
                .last()
                .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
            && !bytes
                .get(i + 4)
                .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
        {
            out.push_str("null");
            i += 4;
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}

/// Yields every balanced `{...}` substring, respecting string literals.
fn balanced_objects(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut start = None;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        let c = b as char;
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' if depth > 0 => in_string = true,
            '{' => {
                if depth == 0 {
                    start = Some(i);
                }
                depth += 1;
            }
            '}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    out.push(&text[start.unwrap()..=i]);
                }
            }
            _ => {}
        }
    }
    out
}

/// Extracts and validates the single JSON prediction object from model
/// output, tolerating surrounding prose and markdown fences.
///
/// Strictness applies to the extracted object: the assignment count must
/// equal `expected_assignments`, `grounded` must agree with the presence
/// of `matched_node`, node ids must be non-negative, and `point_2d` must
/// land inside the `width x height` raster.
pub fn parse_model_output(
    text: &str,
    expected_assignments: usize,
    width: u32,
    height: u32,
) -> std::result::Result<ModelPrediction, MalformedOutput> {
    let normalized = normalize_none_tokens(text);
    let raw: RawPrediction = balanced_objects(&normalized)
        .into_iter()
        .filter_map(|cand| serde_json::from_str::<serde_json::Value>(cand).ok())
        .find(|v| v.get("assignments").is_some())
        .ok_or(MalformedOutput::NoJson)
        .and_then(|v| {
            serde_json::from_value(v).map_err(|e| MalformedOutput::Schema(e.to_string()))
        })?;

    if raw.assignments.len() != expected_assignments {
        return Err(MalformedOutput::Schema(format!(
            "expected {expected_assignments} assignments, got {}",
            raw.assignments.len()
        )));
    }
    let mut assignments = Vec::with_capacity(raw.assignments.len());
    for (i, a) in raw.assignments.into_iter().enumerate() {
        if a.grounded != a.matched_node.is_some() {
            return Err(MalformedOutput::Schema(format!(
                "assignment {i}: grounded={} but matched_node={:?}",
                a.grounded, a.matched_node
            )));
        }
        let matched_node = match a.matched_node {
            Some(v) if v < 0 => {
                return Err(MalformedOutput::Schema(format!(
                    "assignment {i}: negative node id {v}"
                )))
            }
            Some(v) => Some(v as u32),
            None => None,
        };
        assignments.push(Assignment {
            object_label: a.object_label,
            grounded: a.grounded,
            matched_node,
        });
    }

    if raw.point_2d.len() != 2 {
        return Err(MalformedOutput::Schema(format!(
            "point_2d must have exactly 2 coordinates, got {}",
            raw.point_2d.len()
        )));
    }
    let (u, v) = (raw.point_2d[0], raw.point_2d[1]);
    if u < 0 || v < 0 || u >= width as i64 || v >= height as i64 {
        return Err(MalformedOutput::OutOfRaster {
            u,
            v,
            width,
            height,
        });
    }
    Ok(ModelPrediction {
        assignments,
        point_2d: PixelCoord::new(u as u32, v as u32),
    })
}

/// Serializes a prediction in the output schema (matched_node as null).
pub fn serialize_prediction(pred: &ModelPrediction) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        assignments: &'a [Assignment],
        point_2d: [u32; 2],
    }
    serde_json::to_string(&Out {
        assignments: &pred.assignments,
        point_2d: [pred.point_2d.u, pred.point_2d.v],
    })
    .expect("prediction serializes")
}

/// Builds the deterministic chat request payload: system message, then a
/// user message holding the serialized scene graph, the concatenated hint
/// sentences, and the BEV image as a base64 PNG data URL.
pub fn assemble_prompt(
    graph: &SceneGraph,
    hints: &[Hint],
    system_text: &str,
    model: &str,
    png_base64: &str,
) -> Result<serde_json::Value> {
    if graph.nodes.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let hint_line = hints
        .iter()
        .map(|h| h.text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let user_text = format!(
        "SCENE GRAPH:\n{}\nQUERY:\n{}\n",
        serialize_scene_graph(graph),
        hint_line
    );
    Ok(serde_json::json!({
        "model": model,
        "temperature": 0,
        "messages": [
            { "role": "system", "content": system_text },
            { "role": "user", "content": [
                { "type": "text", "text": user_text },
                { "type": "image_url", "image_url": {
                    "url": format!("data:image/png;base64,{png_base64}")
                }}
            ]}
        ]
    }))
}
