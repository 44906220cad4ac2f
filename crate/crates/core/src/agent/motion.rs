use std::collections::BTreeSet;

use crate::geom::{angle_diff, Cell, Point};
use crate::gridworld::{MotionAction, Observation, SimState, MAX_TURN_RAD};
use crate::mapping::{full_knowledge_map, BevMap};
use crate::scenegraph::SceneTracker;

/// Initial spin: eleven maximal turns cover 385 degrees.
pub const SPIN_TURNS: usize = 11;

/// What the robot knows: its belief map, object memory and everything seen so far.
#[derive(Clone, Debug)]
pub struct Perception {
    pub map: BevMap,
    pub tracker: SceneTracker,
}

impl Perception {
    pub fn new(sim: &SimState) -> Self {
        Self {
            map: BevMap::new(
                sim.cells.width(),
                sim.cells.height(),
                sim.resolution,
                sim.free_space_categories.clone(),
            ),
            tracker: SceneTracker::new(sim.resolution),
        }
    }

    /// Knowledge of the whole world: the full map, and every object observed from
    /// where it stands.
    pub fn omniscient(sim: &SimState) -> Self {
        let mut per = Self::new(sim);
        per.map = full_knowledge_map(sim);
        for o in sim.objects.values() {
            let mut pose = sim.robot.clone();
            pose.position = o.position.center(sim.resolution);
            per.tracker.observe(&Observation {
                step: sim.tick,
                revealed_cells: Vec::new(),
                visible_objects: sim.visible_object(&o.id).into_iter().collect(),
                visible_doors: sim.doors.clone(),
                robot_pose: pose,
            });
        }
        per
    }

    pub fn sense(&mut self, sim: &SimState) {
        let obs = sim.sense();
        self.map.integrate(&obs);
        self.tracker.observe(&obs);
    }

    pub fn observed(&self) -> BTreeSet<String> {
        self.tracker.observed_names()
    }
}

/// Turns in maximal increments until the heading matches, sensing after each turn.
pub fn turn_to(sim: &mut SimState, per: &mut Perception, heading: f64) {
    loop {
        let d = angle_diff(sim.robot.heading, heading);
        if d.abs() < 1e-9 {
            return;
        }
        let a = d.abs().min(MAX_TURN_RAD);
        let action = if d > 0.0 {
            MotionAction::TurnLeft(a)
        } else {
            MotionAction::TurnRight(a)
        };
        sim.step_motion(action);
        per.sense(sim);
    }
}

pub fn face_point(sim: &mut SimState, per: &mut Perception, p: Point) {
    let r = sim.robot.position;
    if r.dist(p) > 1e-9 {
        turn_to(sim, per, (p.y - r.y).atan2(p.x - r.x));
    }
}

pub fn spin(sim: &mut SimState, per: &mut Perception) {
    for _ in 0..SPIN_TURNS {
        sim.step_motion(MotionAction::TurnLeft(MAX_TURN_RAD));
        per.sense(sim);
    }
}

/// Follows a cell path with axis-aligned moves only, so the robot stays on cell
/// centers. A diagonal step goes through its x-neighbor, which the planner guarantees
/// is free.
pub fn drive(sim: &mut SimState, per: &mut Perception, path: &[Cell]) -> Result<(), String> {
    for pair in path.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mut legs = vec![b];
        if a.x != b.x && a.y != b.y {
            legs.insert(0, Cell::new(b.x, a.y));
        }
        for to in legs {
            let from = sim.robot_cell();
            if from == to {
                continue;
            }
            let heading = ((to.y - from.y) as f64).atan2((to.x - from.x) as f64);
            turn_to(sim, per, heading);
            let r = sim.step_motion(MotionAction::Forward);
            if !r.success {
                return Err(r.feedback);
            }
            per.sense(sim);
            if sim.robot_cell() != to {
                return Err("drifted off path".into());
            }
        }
    }
    Ok(())
}
