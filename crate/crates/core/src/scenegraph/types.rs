use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geom::{Cell, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Inside,
    Ontop,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relation {
    pub kind: RelationKind,
    /// Instance id of the supporting or containing object.
    pub target: String,
}

/// Robot pose an object was observed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub position: Point,
    pub heading: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectNode {
    /// Category plus alphabetical suffix, e.g. `apple_B`.
    pub id: String,
    /// Simulator id.
    pub name: String,
    pub category: String,
    pub position: Cell,
    pub is_door: bool,
    pub articulated: bool,
    /// `"open"` or `"closed"` for articulated objects and doors.
    pub state: Option<String>,
    pub attributes: BTreeMap<String, serde_json::Value>,
    pub relations: Vec<Relation>,
    pub viewpoint: Viewpoint,
    pub held: bool,
    pub last_seen: u64,
    pub region: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionNode {
    pub id: u32,
    pub label: String,
    /// Display name: the label, with a counter when several regions share it.
    pub name: String,
    /// Post-separation Voronoi labels making up the region.
    pub voronoi_labels: BTreeSet<u32>,
    /// Voronoi component (before door cuts) the region lies in.
    pub component: u32,
    pub node_count: usize,
    pub frontier_count: usize,
    pub exploration_complete: bool,
    /// Non-generic floor categories seen in the region (lawn, carpet, ...).
    pub floor_categories: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierNode {
    pub centroid: Cell,
    pub size: usize,
    pub region: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub regions: BTreeMap<u32, RegionNode>,
    pub objects: BTreeMap<String, ObjectNode>,
    pub frontiers: Vec<FrontierNode>,
    pub robot_region: Option<u32>,
    pub robot_component: Option<u32>,
    pub robot_position: Point,
    pub holding: Option<String>,
}

impl SceneGraph {
    pub fn objects_in(&self, region: u32) -> impl Iterator<Item = &ObjectNode> + '_ {
        self.objects.values().filter(move |o| o.region == region)
    }

    pub fn object_by_name(&self, name: &str) -> Option<&ObjectNode> {
        self.objects.values().find(|o| o.name == name)
    }

    pub fn region_name(&self, id: u32) -> String {
        self.regions
            .get(&id)
            .map_or_else(|| format!("region_{id}"), |r| r.name.clone())
    }

    /// Gives every region its display name. Call after labels change.
    pub fn assign_region_names(&mut self) {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for r in self.regions.values() {
            *counts.entry(r.label.clone()).or_default() += 1;
        }
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for r in self.regions.values_mut() {
            let k = seen.entry(r.label.clone()).or_default();
            *k += 1;
            r.name = if counts[&r.label] == 1 {
                r.label.clone()
            } else {
                format!("{} {k}", r.label)
            };
        }
    }

    /// Resolves a region reference from a planner reply: display name, bare label when
    /// unique, or numeric id.
    pub fn resolve_region(&self, s: &str) -> Option<u32> {
        let s = s.trim().trim_matches('"').trim_matches('\'');
        let lower = s.to_lowercase();
        if let Some(r) = self.regions.values().find(|r| r.name.to_lowercase() == lower) {
            return Some(r.id);
        }
        let by_label: Vec<u32> = self
            .regions
            .values()
            .filter(|r| r.label.to_lowercase() == lower)
            .map(|r| r.id)
            .collect();
        if by_label.len() == 1 {
            return Some(by_label[0]);
        }
        let digits = lower.trim_start_matches("region").trim_start_matches('_').trim();
        digits
            .parse::<u32>()
            .ok()
            .filter(|id| self.regions.contains_key(id))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene graph serializes")
    }
}

/// Alphabetical instance suffix: 0 → A, 25 → Z, 26 → AA, ...
pub fn alpha_suffix(mut n: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (n % 26) as u8);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}
