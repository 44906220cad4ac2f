use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{wrap_angle, Cell, CellRect, Grid, Point};

use super::scene::{
    Articulation, CellKind, DoorSpec, DoorState, ObjectSpec, RoomAnnotation, SceneSpec,
    StaticCell,
};
use super::SceneError;

/// Distance covered by one `Forward` action.
pub const FORWARD_STEP_M: f64 = 0.075;
/// Largest single turn, 35 degrees.
pub const MAX_TURN_RAD: f64 = 35.0 * std::f64::consts::PI / 180.0;
/// Magic actions need the robot within this distance of the target footprint.
pub const REACH_RADIUS_M: f64 = 1.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Point,
    /// Radians in `[0, 2π)`, counter-clockwise from +x.
    pub heading: f64,
    pub gripper: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MotionAction {
    Forward,
    TurnLeft(f64),
    TurnRight(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagicVerb {
    Open,
    Close,
    Grasp,
    PlaceInside,
    PlaceOntop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entity", rename_all = "snake_case")]
pub enum WorldDelta {
    Object(ObjectSpec),
    Door(DoorSpec),
    Robot(RobotState),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionResult {
    pub success: bool,
    pub feedback: String,
    pub world_delta: Vec<WorldDelta>,
}

impl ActionResult {
    fn ok(delta: Vec<WorldDelta>) -> Self {
        Self {
            success: true,
            feedback: String::new(),
            world_delta: delta,
        }
    }

    fn fail(feedback: impl Into<String>) -> Self {
        Self {
            success: false,
            feedback: feedback.into(),
            world_delta: Vec::new(),
        }
    }
}

/// Ground-truth relation atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    Inside(String, String),
    Ontop(String, String),
    Open(String),
    Closed(String),
}

/// Complete simulator state. Owned by a single episode runner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub name: String,
    pub resolution: f64,
    pub free_space_categories: BTreeSet<String>,
    pub cells: Grid<StaticCell>,
    /// Doors sorted by id.
    pub doors: Vec<DoorSpec>,
    pub objects: BTreeMap<String, ObjectSpec>,
    pub robot: RobotState,
    pub rooms: Vec<RoomAnnotation>,
    /// Count of low-level and magic actions executed so far.
    pub tick: u64,
    door_at: Grid<Option<u16>>,
}

/// Validate a scene and instantiate it, placing the robot on a seeded random free cell.
pub fn load_scene(spec: &SceneSpec, seed: u64) -> Result<SimState, SceneError> {
    let cells = spec.validate()?;
    let mut doors = spec.doors.clone();
    doors.sort_by(|a, b| a.id.cmp(&b.id));
    let mut door_at = Grid::new(cells.width(), cells.height(), None);
    for (i, d) in doors.iter().enumerate() {
        for c in d.bbox.cells() {
            *door_at.get_mut(c).expect("validated bbox") = Some(i as u16);
        }
    }
    let mut objects: BTreeMap<String, ObjectSpec> = spec
        .objects
        .iter()
        .map(|o| (o.id.clone(), o.clone()))
        .collect();
    // Children share their root's position.
    let ids: Vec<String> = objects.keys().cloned().collect();
    for id in &ids {
        let root = root_of(&objects, id);
        let pos = objects[&root].position;
        objects.get_mut(id).unwrap().position = pos;
    }

    let occupied: BTreeSet<Cell> = objects.values().map(|o| o.position).collect();
    let candidates: Vec<Cell> = cells
        .iter()
        .filter(|(c, s)| {
            s.kind == CellKind::Free
                && spec.free_space_categories.contains(&s.category)
                && !occupied.contains(c)
        })
        .map(|(c, _)| c)
        .collect();
    if candidates.is_empty() {
        return Err(SceneError::Invalid("scene has no free cell for the robot".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = candidates[rng.random_range(0..candidates.len())];
    let heading = wrap_angle(rng.random_range(0.0..std::f64::consts::TAU));

    Ok(SimState {
        name: spec.name.clone(),
        resolution: spec.resolution_m,
        free_space_categories: spec.free_space_categories.clone(),
        cells,
        doors,
        objects,
        robot: RobotState {
            position: start.center(spec.resolution_m),
            heading,
            gripper: None,
        },
        rooms: spec.room_annotations.clone(),
        tick: 0,
        door_at,
    })
}

fn root_of(objects: &BTreeMap<String, ObjectSpec>, id: &str) -> String {
    let mut cur = id;
    while let Some(p) = objects[cur].parent() {
        cur = p;
    }
    cur.to_string()
}

impl SimState {
    pub fn door(&self, id: &str) -> Option<&DoorSpec> {
        self.doors.iter().find(|d| d.id == id)
    }

    pub fn door_at(&self, c: Cell) -> Option<&DoorSpec> {
        self.door_at
            .get(c)
            .copied()
            .flatten()
            .map(|i| &self.doors[i as usize])
    }

    /// Cells the robot may step onto.
    pub fn traversable(&self, c: Cell) -> bool {
        match self.cells.get(c) {
            None => false,
            Some(s) => match s.kind {
                CellKind::Wall => false,
                CellKind::DoorFrame => {
                    matches!(self.door_at(c), Some(d) if d.state == DoorState::Open)
                }
                CellKind::Free | CellKind::Furniture => true,
            },
        }
    }

    /// Cells that stop a sensor ray.
    pub fn blocks_sight(&self, c: Cell) -> bool {
        match self.cells.get(c) {
            None => true,
            Some(s) => match s.kind {
                CellKind::Wall => true,
                CellKind::DoorFrame => {
                    matches!(self.door_at(c), Some(d) if d.state == DoorState::Closed)
                }
                _ => false,
            },
        }
    }

    pub fn robot_cell(&self) -> Cell {
        self.robot.position.cell(self.resolution)
    }

    /// True when the object is in the gripper, directly or through its parents.
    pub fn is_held(&self, id: &str) -> bool {
        let mut cur = id;
        loop {
            if self.robot.gripper.as_deref() == Some(cur) {
                return true;
            }
            match self.objects.get(cur).and_then(|o| o.parent()) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// True when some container on the object's parent chain is closed.
    pub fn enclosed(&self, id: &str) -> bool {
        let mut cur = &self.objects[id];
        while let Some(p) = cur.parent() {
            let parent = &self.objects[p];
            if cur.contained_in.is_some() && parent.articulation_state == Articulation::Closed {
                return true;
            }
            cur = parent;
        }
        false
    }

    /// The uncontained, unsupported, not-held object sitting on each cell.
    pub fn root_objects(&self) -> BTreeMap<Cell, &ObjectSpec> {
        let mut out = BTreeMap::new();
        for o in self.objects.values() {
            if o.parent().is_none() && !self.is_held(&o.id) {
                out.entry(o.position).or_insert(o);
            }
        }
        out
    }

    fn footprint(&self, target: &str) -> Option<CellRect> {
        if let Some(d) = self.door(target) {
            return Some(d.bbox);
        }
        self.objects
            .get(target)
            .map(|o| CellRect::new(o.position.x, o.position.y, o.position.x, o.position.y))
    }

    pub fn distance_to_target(&self, target: &str) -> Option<f64> {
        self.footprint(target)
            .map(|r| r.distance_to(self.robot.position, self.resolution))
    }

    /// Execute one low-level motion action.
    pub fn step_motion(&mut self, action: MotionAction) -> ActionResult {
        self.tick += 1;
        match action {
            MotionAction::Forward => {
                let p = self.robot.position;
                let next = Point::new(
                    p.x + FORWARD_STEP_M * self.robot.heading.cos(),
                    p.y + FORWARD_STEP_M * self.robot.heading.sin(),
                );
                if !self.traversable(next.cell(self.resolution)) {
                    return ActionResult::fail("blocked");
                }
                self.robot.position = next;
                ActionResult::ok(vec![WorldDelta::Robot(self.robot.clone())])
            }
            MotionAction::TurnLeft(a) | MotionAction::TurnRight(a) => {
                if !(0.0..=MAX_TURN_RAD + 1e-12).contains(&a) {
                    return ActionResult::fail("turn angle outside [0, 35 deg]");
                }
                let signed = if matches!(action, MotionAction::TurnLeft(_)) {
                    a
                } else {
                    -a
                };
                self.robot.heading = wrap_angle(self.robot.heading + signed);
                ActionResult::ok(vec![WorldDelta::Robot(self.robot.clone())])
            }
        }
    }

    /// Execute a precondition-checked, instantaneous manipulation.
    /// On failure the world is untouched.
    pub fn magic_interact(&mut self, verb: MagicVerb, target: &str) -> ActionResult {
        self.tick += 1;
        let is_door = self.door(target).is_some();
        if !is_door && !self.objects.contains_key(target) {
            return ActionResult::fail("no such object");
        }
        if !is_door && self.is_held(target) && verb != MagicVerb::Grasp {
            return ActionResult::fail("invalid target: object is in the gripper");
        }
        match self.distance_to_target(target) {
            Some(d) if d <= REACH_RADIUS_M => {}
            _ => return ActionResult::fail("too far"),
        }
        match verb {
            MagicVerb::Open | MagicVerb::Close => self.articulate(verb, target, is_door),
            MagicVerb::Grasp => self.grasp(target, is_door),
            MagicVerb::PlaceInside | MagicVerb::PlaceOntop => self.place(verb, target, is_door),
        }
    }

    fn articulate(&mut self, verb: MagicVerb, target: &str, is_door: bool) -> ActionResult {
        let want_open = verb == MagicVerb::Open;
        if self.robot.gripper.is_some() {
            return ActionResult::fail("gripper full: the arm must be empty to open or close");
        }
        if is_door {
            let idx = self.doors.iter().position(|d| d.id == target).unwrap();
            let door = &mut self.doors[idx];
            let open = door.state == DoorState::Open;
            if open == want_open {
                return ActionResult::fail(if open { "already open" } else { "already closed" });
            }
            door.state = if want_open {
                DoorState::Open
            } else {
                DoorState::Closed
            };
            return ActionResult::ok(vec![WorldDelta::Door(door.clone())]);
        }
        if self.enclosed(target) {
            return ActionResult::fail("inside a closed container");
        }
        let obj = self.objects.get_mut(target).unwrap();
        if !obj.articulated {
            return ActionResult::fail("not articulated");
        }
        let open = obj.articulation_state == Articulation::Open;
        if open == want_open {
            return ActionResult::fail(if open { "already open" } else { "already closed" });
        }
        obj.articulation_state = if want_open {
            Articulation::Open
        } else {
            Articulation::Closed
        };
        ActionResult::ok(vec![WorldDelta::Object(obj.clone())])
    }

    fn grasp(&mut self, target: &str, is_door: bool) -> ActionResult {
        if self.robot.gripper.is_some() {
            return ActionResult::fail("gripper full");
        }
        if is_door || !self.objects[target].graspable() {
            return ActionResult::fail("not graspable");
        }
        if self.enclosed(target) {
            return ActionResult::fail("inside a closed container");
        }
        let obj = self.objects.get_mut(target).unwrap();
        obj.contained_in = None;
        obj.on_top_of = None;
        let obj = obj.clone();
        self.robot.gripper = Some(target.to_string());
        ActionResult::ok(vec![
            WorldDelta::Object(obj),
            WorldDelta::Robot(self.robot.clone()),
        ])
    }

    fn place(&mut self, verb: MagicVerb, target: &str, is_door: bool) -> ActionResult {
        let Some(held) = self.robot.gripper.clone() else {
            return ActionResult::fail("gripper empty");
        };
        if is_door {
            return ActionResult::fail("invalid placement");
        }
        if self.is_held(target) {
            return ActionResult::fail("invalid placement");
        }
        if self.enclosed(target) {
            return ActionResult::fail("inside a closed container");
        }
        let tgt = &self.objects[target];
        if verb == MagicVerb::PlaceInside
            && tgt.articulated
            && tgt.articulation_state == Articulation::Closed
        {
            return ActionResult::fail(format!(
                "container closed: open {target} before placing objects inside"
            ));
        }
        let pos = tgt.position;
        let obj = self.objects.get_mut(&held).unwrap();
        match verb {
            MagicVerb::PlaceInside => obj.contained_in = Some(target.to_string()),
            _ => obj.on_top_of = Some(target.to_string()),
        }
        self.robot.gripper = None;
        self.move_subtree(&held, pos);
        let mut delta: Vec<WorldDelta> = self
            .subtree(&held)
            .into_iter()
            .map(|id| WorldDelta::Object(self.objects[&id].clone()))
            .collect();
        delta.push(WorldDelta::Robot(self.robot.clone()));
        ActionResult::ok(delta)
    }

    fn subtree(&self, root: &str) -> Vec<String> {
        let mut out = vec![root.to_string()];
        let mut i = 0;
        while i < out.len() {
            let cur = out[i].clone();
            out.extend(
                self.objects
                    .values()
                    .filter(|o| o.parent() == Some(cur.as_str()))
                    .map(|o| o.id.clone()),
            );
            i += 1;
        }
        out
    }

    fn move_subtree(&mut self, root: &str, pos: Cell) {
        for id in self.subtree(root) {
            self.objects.get_mut(&id).unwrap().position = pos;
        }
    }

    /// Snapshot of every ground relation atom.
    pub fn world_relations(&self) -> BTreeSet<Atom> {
        let mut atoms = BTreeSet::new();
        for o in self.objects.values() {
            if let Some(c) = &o.contained_in {
                atoms.insert(Atom::Inside(o.id.clone(), c.clone()));
            }
            if let Some(t) = &o.on_top_of {
                atoms.insert(Atom::Ontop(o.id.clone(), t.clone()));
            }
            match o.articulation_state {
                Articulation::Open => {
                    atoms.insert(Atom::Open(o.id.clone()));
                }
                Articulation::Closed => {
                    atoms.insert(Atom::Closed(o.id.clone()));
                }
                Articulation::NotApplicable => {}
            }
        }
        for d in &self.doors {
            atoms.insert(match d.state {
                DoorState::Open => Atom::Open(d.id.clone()),
                DoorState::Closed => Atom::Closed(d.id.clone()),
            });
        }
        atoms
    }

    /// Object id → category, including doors.
    pub fn catalog(&self) -> BTreeMap<String, String> {
        let mut out: BTreeMap<String, String> = self
            .objects
            .values()
            .map(|o| (o.id.clone(), o.category.clone()))
            .collect();
        for d in &self.doors {
            out.insert(d.id.clone(), "door".to_string());
        }
        out
    }

    /// Ground-truth room containing a cell, if annotated.
    pub fn room_of(&self, c: Cell) -> Option<&str> {
        self.rooms
            .iter()
            .find(|r| r.contains(c))
            .map(|r| r.name.as_str())
    }
}
