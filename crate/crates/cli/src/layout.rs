use std::path::Path;

use areawatch::placement::PlacementProblem;
use areawatch::{Point, Polygon, Result};
use serde::{Deserialize, Serialize};

/// Store layout: AP candidates, target-area centroids, gate, optional
/// outside polygon and the placement sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutFile {
    pub aps: Vec<Point>,
    pub areas: Vec<Point>,
    pub gate: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outside: Option<Polygon>,
    pub k: usize,
    pub m: usize,
    pub eta: f64,
}

impl LayoutFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let layout: LayoutFile = serde_json::from_str(&text)?;
        layout.problem().validate()?;
        Ok(layout)
    }

    pub fn problem(&self) -> PlacementProblem {
        PlacementProblem {
            ap_candidates: self.aps.clone(),
            area_candidates: self.areas.clone(),
            k: self.k,
            m: self.m,
            gate: self.gate,
            eta: self.eta,
        }
    }
}
