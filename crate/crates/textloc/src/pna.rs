//! Ground-truth node assignments: decide per hint whether the mentioned
//! object is groundable in the map and, if so, to which node.

use serde::{Deserialize, Serialize};

use crate::geom::dist_xy;
use crate::map_builder::{LocalMap, ObjectInstance};
use crate::taxonomy::LabelKind;

/// Per-hint grounding decision. `grounded` is true iff `matched_node`
/// holds a node id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub object_label: String,
    pub grounded: bool,
    pub matched_node: Option<u32>,
}

impl Assignment {
    pub fn grounded(object_label: String, node: u32) -> Self {
        Self {
            object_label,
            grounded: true,
            matched_node: Some(node),
        }
    }

    pub fn ungrounded(object_label: String) -> Self {
        Self {
            object_label,
            grounded: false,
            matched_node: None,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.grounded == self.matched_node.is_some()
    }
}

/// Per-kind grounding distance thresholds in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauConfig {
    pub object_m: f64,
    pub stuff_m: f64,
}

impl Default for TauConfig {
    fn default() -> Self {
        Self {
            object_m: 5.0,
            stuff_m: 15.0,
        }
    }
}

impl TauConfig {
    pub fn for_kind(&self, kind: LabelKind) -> f64 {
        match kind {
            LabelKind::Object => self.object_m,
            LabelKind::Stuff => self.stuff_m,
        }
    }
}

/// Finds the map object corresponding to a pose-cell instance.
///
/// Object kind: the map instance with the same raw source id. Stuff kind
/// is re-clustered per window, so ids do not carry over; the same-label
/// cluster whose centroid is nearest to the source's is used instead.
fn correspondence<'m>(source: &ObjectInstance, map: &'m LocalMap) -> Option<&'m ObjectInstance> {
    match source.kind {
        LabelKind::Object => map.objects.iter().find(|o| {
            matches!(o.kind, LabelKind::Object)
                && o.semantic == source.semantic
                && o.source_instance == source.source_instance
        }),
        LabelKind::Stuff => {
            let b = source.centroid_xy();
            map.objects
                .iter()
                .filter(|o| matches!(o.kind, LabelKind::Stuff) && o.semantic == source.semantic)
                .min_by(|a, c| {
                    dist_xy(a.centroid_xy(), b)
                        .partial_cmp(&dist_xy(c.centroid_xy(), b))
                        .unwrap()
                        .then(a.id.cmp(&c.id))
                })
        }
    }
}

/// Grounds one pose-cell instance against the map.
///
/// A is the map object's in-window centroid, B the source's in-cell
/// centroid; the hint is grounded iff a correspondence exists and
/// ||A - B|| is strictly below the kind's threshold.
pub fn groundability(
    source: &ObjectInstance,
    object_label: &str,
    map: &LocalMap,
    tau: &TauConfig,
) -> Assignment {
    let Some(map_obj) = correspondence(source, map) else {
        return Assignment::ungrounded(object_label.to_owned());
    };
    let dist = dist_xy(map_obj.centroid_xy(), source.centroid_xy());
    if dist < tau.for_kind(source.kind) {
        Assignment::grounded(object_label.to_owned(), map_obj.id)
    } else {
        Assignment::ungrounded(object_label.to_owned())
    }
}

/// Grounds every hint source, in hint order.
pub fn label_query(
    sources: &[(&ObjectInstance, String)],
    map: &LocalMap,
    tau: &TauConfig,
) -> Vec<Assignment> {
    sources
        .iter()
        .map(|(source, label)| groundability(source, label, map, tau))
        .collect()
}

/// Ablation variant: every hint is forced onto the nearest node with the
/// same semantic label regardless of distance; ungrounded only when no
/// same-label node exists. Ties go to the lowest node id.
pub fn full_assignment_variant(
    sources: &[(&ObjectInstance, String)],
    map: &LocalMap,
) -> Vec<Assignment> {
    sources
        .iter()
        .map(|(source, label)| {
            let b = source.centroid_xy();
            let nearest = map
                .objects
                .iter()
                .filter(|o| o.semantic == source.semantic)
                .min_by(|x, y| {
                    dist_xy(x.centroid_xy(), b)
                        .partial_cmp(&dist_xy(y.centroid_xy(), b))
                        .unwrap()
                        .then(x.id.cmp(&y.id))
                });
            match nearest {
                Some(node) => Assignment::grounded(label.clone(), node.id),
                None => Assignment::ungrounded(label.clone()),
            }
        })
        .collect()
}
