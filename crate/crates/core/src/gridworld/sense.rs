use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geom::{Cell, Point};

use super::scene::{Articulation, CellKind, DoorSpec, DoorState};
use super::sim::{RobotState, SimState};

pub const SENSOR_RANGE_M: f64 = 5.0;
pub const SENSOR_FOV_RAD: f64 = std::f64::consts::FRAC_PI_2;
/// Nominal angular spacing of the ray fan.
pub const RAY_STEP_RAD: f64 = std::f64::consts::PI / 180.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevealedCell {
    pub cell: Cell,
    pub kind: CellKind,
    pub category: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub id: String,
    pub category: String,
    pub position: Cell,
    pub articulated: bool,
    pub articulation_state: Articulation,
    pub contained_in: Option<String>,
    pub on_top_of: Option<String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Simulator tick at which the observation was taken.
    pub step: u64,
    pub revealed_cells: Vec<RevealedCell>,
    pub visible_objects: Vec<VisibleObject>,
    pub visible_doors: Vec<DoorSpec>,
    pub robot_pose: RobotState,
}

impl SimState {
    /// Category reported for a cell: the object resting on it, the door state, or the floor.
    pub fn cell_category(&self, c: Cell, roots: &BTreeMap<Cell, &super::ObjectSpec>) -> String {
        if let Some(o) = roots.get(&c) {
            return o.category.clone();
        }
        if let Some(d) = self.door_at(c) {
            return match d.state {
                DoorState::Open => "floor".to_string(),
                DoorState::Closed => "door".to_string(),
            };
        }
        self.cells.get(c).map(|s| s.category.clone()).unwrap_or_default()
    }

    /// Ray-cast the sensor cone from the current pose.
    ///
    /// The fan spacing is the smaller of one degree and half the angle one cell subtends at
    /// full range, so every cell within range is crossed by at least one ray. Blocking cells
    /// that share a face with a visible open cell are reported as well.
    pub fn sense(&self) -> Observation {
        let res = self.resolution;
        let origin = self.robot.position;
        let step = RAY_STEP_RAD.min(res / (2.0 * SENSOR_RANGE_M));
        let n = (SENSOR_FOV_RAD / step).ceil() as usize;
        let start = self.robot.heading - SENSOR_FOV_RAD / 2.0;

        let mut seen: BTreeSet<Cell> = BTreeSet::new();
        let own = self.robot_cell();
        if self.cells.in_bounds(own) {
            seen.insert(own);
        }
        for i in 0..=n {
            let a = start + SENSOR_FOV_RAD * i as f64 / n as f64;
            self.cast(origin, a, &mut seen);
        }

        let within = |c: Cell| c.center(res).dist(origin) <= SENSOR_RANGE_M;
        let faces: Vec<Cell> = seen
            .iter()
            .filter(|c| !self.blocks_sight(**c))
            .flat_map(|c| c.neighbors4())
            .filter(|n| self.cells.in_bounds(*n) && self.blocks_sight(*n) && within(*n))
            .collect();
        seen.extend(faces);

        let roots = self.root_objects();
        let revealed_cells = seen
            .iter()
            .map(|&c| RevealedCell {
                cell: c,
                kind: self.cells.get(c).unwrap().kind,
                category: self.cell_category(c, &roots),
            })
            .collect();

        let visible_objects = self
            .objects
            .values()
            .filter(|o| self.object_visible(&o.id, &seen))
            .filter_map(|o| self.visible_object(&o.id))
            .collect();

        let visible_doors = self
            .doors
            .iter()
            .filter(|d| d.bbox.cells().any(|c| seen.contains(&c)))
            .cloned()
            .collect();

        Observation {
            step: self.tick,
            revealed_cells,
            visible_objects,
            visible_doors,
            robot_pose: self.robot.clone(),
        }
    }

    /// What the sensor reports about an object once it is in view.
    pub fn visible_object(&self, id: &str) -> Option<VisibleObject> {
        let o = self.objects.get(id)?;
        Some(VisibleObject {
            id: o.id.clone(),
            category: o.category.clone(),
            position: o.position,
            articulated: o.articulated,
            articulation_state: o.articulation_state,
            contained_in: o.contained_in.clone(),
            on_top_of: o.on_top_of.clone(),
            attributes: o.attributes.clone(),
        })
    }

    fn object_visible(&self, id: &str, seen: &BTreeSet<Cell>) -> bool {
        if self.is_held(id) {
            return false;
        }
        let o = &self.objects[id];
        match (&o.contained_in, &o.on_top_of) {
            (Some(c), _) => {
                self.objects[c.as_str()].articulation_state == Articulation::Open
                    && self.object_visible(c, seen)
            }
            (None, Some(t)) => self.object_visible(t, seen),
            (None, None) => seen.contains(&o.position),
        }
    }

    /// Amanatides–Woo traversal of one ray, stopping at range or the first blocking cell.
    fn cast(&self, origin: Point, angle: f64, seen: &mut BTreeSet<Cell>) {
        let res = self.resolution;
        let (dx, dy) = (angle.cos(), angle.sin());
        let mut cell = origin.cell(res);
        let step_x = if dx > 0.0 { 1 } else { -1 };
        let step_y = if dy > 0.0 { 1 } else { -1 };
        let next_boundary = |p: f64, c: i32, s: i32| {
            if s > 0 {
                (c + 1) as f64 * res - p
            } else {
                p - c as f64 * res
            }
        };
        let mut t_max_x = if dx.abs() < 1e-12 {
            f64::INFINITY
        } else {
            next_boundary(origin.x, cell.x, step_x) / dx.abs()
        };
        let mut t_max_y = if dy.abs() < 1e-12 {
            f64::INFINITY
        } else {
            next_boundary(origin.y, cell.y, step_y) / dy.abs()
        };
        let t_dx = if dx.abs() < 1e-12 { f64::INFINITY } else { res / dx.abs() };
        let t_dy = if dy.abs() < 1e-12 { f64::INFINITY } else { res / dy.abs() };

        loop {
            let t = if t_max_x < t_max_y {
                cell.x += step_x;
                let t = t_max_x;
                t_max_x += t_dx;
                t
            } else {
                cell.y += step_y;
                let t = t_max_y;
                t_max_y += t_dy;
                t
            };
            if t > SENSOR_RANGE_M || !self.cells.in_bounds(cell) {
                return;
            }
            if cell.center(res).dist(origin) <= SENSOR_RANGE_M {
                seen.insert(cell);
            }
            if self.blocks_sight(cell) {
                return;
            }
        }
    }
}
