//! Scene description files and their invariants.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geom::{Cell, CellRect, Grid};

use super::SceneError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_RESOLUTION_M: f64 = 0.075;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Free,
    Wall,
    Furniture,
    DoorFrame,
}

/// What a legend character stands for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub kind: CellKind,
    pub category: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Opening runs along x (door sits in a horizontal wall).
    Horizontal,
    /// Opening runs along y.
    Vertical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoorState {
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoorSpec {
    pub id: String,
    pub center: Cell,
    pub length_cells: i32,
    pub orientation: Orientation,
    pub state: DoorState,
    pub bbox: CellRect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Articulation {
    Open,
    Closed,
    #[serde(rename = "n/a")]
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: String,
    pub category: String,
    pub position: Cell,
    #[serde(default)]
    pub articulated: bool,
    #[serde(default = "default_articulation")]
    pub articulation_state: Articulation,
    #[serde(default)]
    pub contained_in: Option<String>,
    #[serde(default)]
    pub on_top_of: Option<String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, serde_json::Value>,
}

fn default_articulation() -> Articulation {
    Articulation::NotApplicable
}

impl ObjectSpec {
    pub fn parent(&self) -> Option<&str> {
        self.contained_in
            .as_deref()
            .or(self.on_top_of.as_deref())
    }

    pub fn graspable(&self) -> bool {
        self.attributes
            .get("graspable")
            .and_then(|v| v.as_bool())
            .unwrap_or(true)
    }
}

/// Ground-truth room extent, used only by tests and evaluation oracles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomAnnotation {
    pub name: String,
    pub rects: Vec<CellRect>,
}

impl RoomAnnotation {
    pub fn contains(&self, c: Cell) -> bool {
        self.rects.iter().any(|r| r.contains(c))
    }
}

/// On-disk scene description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub width_cells: i32,
    pub height_cells: i32,
    #[serde(default = "default_resolution")]
    pub resolution_m: f64,
    #[serde(default = "default_legend")]
    pub legend: BTreeMap<char, LegendEntry>,
    /// One string per row, `cells[y]`, one legend character per column.
    pub cells: Vec<String>,
    #[serde(default = "default_free_space")]
    pub free_space_categories: BTreeSet<String>,
    #[serde(default)]
    pub doors: Vec<DoorSpec>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub room_annotations: Vec<RoomAnnotation>,
}

fn default_resolution() -> f64 {
    DEFAULT_RESOLUTION_M
}

pub fn default_free_space() -> BTreeSet<String> {
    ["floor", "carpet", "lawn", "driveway"]
        .into_iter()
        .map(String::from)
        .collect()
}

pub fn default_legend() -> BTreeMap<char, LegendEntry> {
    let e = |kind, category: &str| LegendEntry {
        kind,
        category: category.to_string(),
    };
    BTreeMap::from([
        ('.', e(CellKind::Free, "floor")),
        ('_', e(CellKind::Free, "carpet")),
        (',', e(CellKind::Free, "lawn")),
        ('=', e(CellKind::Free, "driveway")),
        ('~', e(CellKind::Free, "pool")),
        ('#', e(CellKind::Wall, "wall")),
        ('%', e(CellKind::Wall, "fence")),
        ('c', e(CellKind::Furniture, "counter")),
        ('s', e(CellKind::Furniture, "shelf")),
        ('D', e(CellKind::DoorFrame, "door")),
    ])
}

/// Static layer of a scene after decoding the legend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticCell {
    pub kind: CellKind,
    pub category: String,
}

impl SceneSpec {
    pub fn from_json(src: &str) -> Result<Self, SceneError> {
        let spec: SceneSpec = serde_json::from_str(src)?;
        Ok(spec)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    /// Decode the character grid through the legend.
    pub fn decode_cells(&self) -> Result<Grid<StaticCell>, SceneError> {
        let (w, h) = (self.width_cells, self.height_cells);
        if w <= 0 || h <= 0 {
            return Err(SceneError::Invalid("grid dimensions must be positive".into()));
        }
        if self.cells.len() != h as usize {
            return Err(SceneError::Invalid(format!(
                "cells has {} rows, expected height_cells = {h}",
                self.cells.len()
            )));
        }
        let mut data = Vec::with_capacity((w * h) as usize);
        for (y, row) in self.cells.iter().enumerate() {
            let chars: Vec<char> = row.chars().collect();
            if chars.len() != w as usize {
                return Err(SceneError::Invalid(format!(
                    "row {y} has {} columns, expected width_cells = {w}",
                    chars.len()
                )));
            }
            for (x, ch) in chars.into_iter().enumerate() {
                let entry = self.legend.get(&ch).ok_or_else(|| {
                    SceneError::Invalid(format!("unknown legend character {ch:?} at ({x}, {y})"))
                })?;
                data.push(StaticCell {
                    kind: entry.kind,
                    category: entry.category.clone(),
                });
            }
        }
        Ok(Grid::from_vec(w as usize, h as usize, data))
    }

    /// Check every scene invariant; the error names the first violation found.
    pub fn validate(&self) -> Result<Grid<StaticCell>, SceneError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(SceneError::Invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.resolution_m > 0.0) || !self.resolution_m.is_finite() {
            return Err(SceneError::Invalid("resolution_m must be > 0".into()));
        }
        let grid = self.decode_cells()?;
        self.validate_doors(&grid)?;
        self.validate_objects(&grid)?;
        self.validate_rooms(&grid)?;
        Ok(grid)
    }

    fn validate_doors(&self, grid: &Grid<StaticCell>) -> Result<(), SceneError> {
        let mut owner: BTreeMap<Cell, &str> = BTreeMap::new();
        let mut ids = BTreeSet::new();
        for door in &self.doors {
            if !ids.insert(door.id.as_str()) {
                return Err(SceneError::Invalid(format!("duplicate door id {}", door.id)));
            }
            let b = door.bbox;
            if !b.is_valid() {
                return Err(SceneError::Invalid(format!("door {} has an empty bbox", door.id)));
            }
            let long = match door.orientation {
                Orientation::Horizontal => b.width(),
                Orientation::Vertical => b.height(),
            };
            if long != door.length_cells {
                return Err(SceneError::Invalid(format!(
                    "door {} length_cells {} does not match its bbox ({long})",
                    door.id, door.length_cells
                )));
            }
            if !b.contains(door.center) {
                return Err(SceneError::Invalid(format!(
                    "door {} center lies outside its bbox",
                    door.id
                )));
            }
            for c in b.cells() {
                match grid.get(c) {
                    Some(cell) if cell.kind == CellKind::DoorFrame => {}
                    _ => {
                        return Err(SceneError::Invalid(format!(
                            "door {} bbox covers non-DoorFrame cell ({}, {})",
                            door.id, c.x, c.y
                        )))
                    }
                }
                if let Some(other) = owner.insert(c, &door.id) {
                    return Err(SceneError::Invalid(format!(
                        "DoorFrame cell ({}, {}) belongs to both {other} and {}",
                        c.x, c.y, door.id
                    )));
                }
            }
        }
        for (c, cell) in grid.iter() {
            if cell.kind == CellKind::DoorFrame && !owner.contains_key(&c) {
                return Err(SceneError::Invalid(format!(
                    "DoorFrame cell ({}, {}) belongs to no door",
                    c.x, c.y
                )));
            }
        }
        Ok(())
    }

    fn validate_objects(&self, grid: &Grid<StaticCell>) -> Result<(), SceneError> {
        let mut by_id: BTreeMap<&str, &ObjectSpec> = BTreeMap::new();
        for o in &self.objects {
            if by_id.insert(o.id.as_str(), o).is_some() {
                return Err(SceneError::Invalid(format!("duplicate object id {}", o.id)));
            }
            if self.doors.iter().any(|d| d.id == o.id) {
                return Err(SceneError::Invalid(format!(
                    "object id {} collides with a door id",
                    o.id
                )));
            }
        }
        for o in &self.objects {
            if !grid.in_bounds(o.position) {
                return Err(SceneError::Invalid(format!("object {} is out of bounds", o.id)));
            }
            if o.contained_in.is_some() && o.on_top_of.is_some() {
                return Err(SceneError::Invalid(format!(
                    "object {}: contained_in and on_top_of are mutually exclusive",
                    o.id
                )));
            }
            match (o.articulated, o.articulation_state) {
                (false, Articulation::NotApplicable) => {}
                (false, _) => {
                    return Err(SceneError::Invalid(format!(
                        "object {} is not articulated but has an articulation state",
                        o.id
                    )))
                }
                (true, Articulation::NotApplicable) => {
                    return Err(SceneError::Invalid(format!(
                        "articulated object {} needs an open/closed state",
                        o.id
                    )))
                }
                (true, _) => {}
            }
            if let Some(p) = o.parent() {
                if !by_id.contains_key(p) {
                    return Err(SceneError::Invalid(format!(
                        "object {} references unknown parent {p}",
                        o.id
                    )));
                }
            }
        }
        // Containment/support chains must terminate.
        for o in &self.objects {
            let mut seen = BTreeSet::from([o.id.as_str()]);
            let mut cur = o;
            while let Some(p) = cur.parent() {
                if !seen.insert(p) {
                    return Err(SceneError::Invalid(format!(
                        "containment graph cyclic (through {})",
                        o.id
                    )));
                }
                cur = by_id[p];
            }
        }
        Ok(())
    }

    fn validate_rooms(&self, grid: &Grid<StaticCell>) -> Result<(), SceneError> {
        for room in &self.room_annotations {
            let cells: BTreeSet<Cell> = room
                .rects
                .iter()
                .flat_map(|r| r.cells())
                .filter(|c| matches!(grid.get(*c), Some(s) if s.kind == CellKind::Free))
                .collect();
            let Some(&start) = cells.iter().next() else {
                continue;
            };
            let mut seen = BTreeSet::from([start]);
            let mut stack = vec![start];
            while let Some(c) = stack.pop() {
                for n in c.neighbors4() {
                    if cells.contains(&n) && seen.insert(n) {
                        stack.push(n);
                    }
                }
            }
            if seen.len() != cells.len() {
                return Err(SceneError::Invalid(format!(
                    "free cells of room {} are not connected",
                    room.name
                )));
            }
        }
        Ok(())
    }
}
