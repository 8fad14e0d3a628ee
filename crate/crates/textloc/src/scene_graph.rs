//! Edge-free scene graphs: one node per map object with its semantic
//! label and centroid pixel position.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{world_to_pixel, GeoReference, PixelCoord};
use crate::map_builder::LocalMap;
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGraphNode {
    pub node_id: u32,
    pub label: String,
    pub pixel_center: PixelCoord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub nodes: Vec<SceneGraphNode>,
}

/// Builds the scene graph: node ids are the map's object ids, in map
/// order; pixel centers come from the ground centroids.
pub fn build_scene_graph(
    map: &LocalMap,
    georef: &GeoReference,
    taxonomy: &Taxonomy,
) -> Result<SceneGraph> {
    if map.objects.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let mut nodes = Vec::with_capacity(map.objects.len());
    for obj in &map.objects {
        let label = taxonomy
            .display_name(obj.semantic)
            .ok_or_else(|| Error::Config(format!("semantic {} not in taxonomy", obj.semantic)))?;
        let (pixel_center, _) = world_to_pixel(obj.centroid_xy(), georef);
        nodes.push(SceneGraphNode {
            node_id: obj.id,
            label,
            pixel_center,
        });
    }
    Ok(SceneGraph { nodes })
}

/// One line per node in the prompt schema:
/// `{node_id: 0, label: "road", pixel_center: [45, 135]}`.
pub fn serialize_scene_graph(graph: &SceneGraph) -> String {
    let mut out = String::new();
    for node in &graph.nodes {
        out.push_str(&format!(
            "{{node_id: {}, label: \"{}\", pixel_center: [{}, {}]}}\n",
            node.node_id, node.label, node.pixel_center.u, node.pixel_center.v
        ));
    }
    out
}

/// Parses the line format emitted by [`serialize_scene_graph`].
pub fn parse_scene_graph(text: &str) -> Result<SceneGraph> {
    let mut nodes = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fail = |msg: &str| Error::Parse {
            path: "<scene graph text>".into(),
            record: lineno + 1,
            message: msg.to_owned(),
        };
        let inner = line
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| fail("expected braces"))?;
        let rest = inner
            .strip_prefix("node_id: ")
            .ok_or_else(|| fail("expected node_id"))?;
        let (id_str, rest) = rest
            .split_once(", label: \"")
            .ok_or_else(|| fail("expected label"))?;
        let node_id: u32 = id_str.parse().map_err(|_| fail("bad node id"))?;
        let (label, rest) = rest
            .split_once("\", pixel_center: [")
            .ok_or_else(|| fail("expected pixel_center"))?;
        let coords = rest
            .strip_suffix(']')
            .ok_or_else(|| fail("expected closing bracket"))?;
        let (u_str, v_str) = coords
            .split_once(", ")
            .ok_or_else(|| fail("expected two coords"))?;
        let u: u32 = u_str.parse().map_err(|_| fail("bad u"))?;
        let v: u32 = v_str.parse().map_err(|_| fail("bad v"))?;
        nodes.push(SceneGraphNode {
            node_id,
            label: label.to_owned(),
            pixel_center: PixelCoord::new(u, v),
        });
    }
    Ok(SceneGraph { nodes })
}

pub fn save_scene_graph(graph: &SceneGraph, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(graph).expect("scene graph serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_scene_graph(path: &Path) -> Result<SceneGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}
