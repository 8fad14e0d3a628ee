//! Semantic label taxonomy with the object/stuff split.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a label denotes countable instances or uncountable regions.
///
/// Object instances keep their source instance ids and are filtered by the
/// completeness rule; stuff points are re-clustered per window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Object,
    Stuff,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDef {
    pub id: u16,
    pub name: String,
    pub kind: LabelKind,
}

/// Maps semantic label ids to names and kinds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Taxonomy {
    labels: BTreeMap<u16, LabelDef>,
}

impl Taxonomy {
    pub fn new(defs: Vec<LabelDef>) -> Result<Self> {
        let mut labels = BTreeMap::new();
        for def in defs {
            if def.name.is_empty()
                || !def
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == ' ' || c == '-' || c == '_')
            {
                return Err(Error::Config(format!(
                    "label {} name {:?} must be non-empty alphanumeric/space/-/_",
                    def.id, def.name
                )));
            }
            if labels.insert(def.id, def.clone()).is_some() {
                return Err(Error::Config(format!("duplicate label id {}", def.id)));
            }
        }
        if labels.is_empty() {
            return Err(Error::Config("taxonomy must not be empty".into()));
        }
        Ok(Self { labels })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let defs: Vec<LabelDef> = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        Self::new(defs)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let defs: Vec<&LabelDef> = self.labels.values().collect();
        let text = serde_json::to_string_pretty(&defs).expect("taxonomy serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn get(&self, id: u16) -> Option<&LabelDef> {
        self.labels.get(&id)
    }

    pub fn kind(&self, id: u16) -> Option<LabelKind> {
        self.labels.get(&id).map(|d| d.kind)
    }

    /// Display name, lowercased for hint templates.
    pub fn display_name(&self, id: u16) -> Option<String> {
        self.labels.get(&id).map(|d| d.name.to_lowercase())
    }

    pub fn ids(&self) -> impl Iterator<Item = u16> + '_ {
        self.labels.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
