use std::collections::BTreeSet;
use std::f64::consts::TAU;

use log::debug;

use crate::geom::{Cell, Point};
use crate::gridworld::{SimState, WorldDelta};
use crate::language::{Subpolicy, SubpolicyCall};
use crate::mapping::{cost_field, is_frontier_cell, plan_path, Frontier};
use crate::scenegraph::{ObjectNode, SceneGraph};
use crate::voronoi::closest_node;

use super::geometry::Geometry;
use super::motion::{drive, face_point, spin, Perception};

/// Circle radii tried in order when approaching an object.
pub const APPROACH_RADII_M: [f64; 3] = [1.0, 0.75, 1.25];
pub const APPROACH_SAMPLES: usize = 16;

pub const FEEDBACK_UNKNOWN: &str = "unknown target";
pub const FEEDBACK_NO_PATH: &str = "no path";
pub const FEEDBACK_EXPLORED: &str = "region fully explored";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub success: bool,
    pub feedback: String,
    pub done: bool,
}

impl Outcome {
    fn ok(feedback: impl Into<String>) -> Self {
        Self {
            success: true,
            feedback: feedback.into(),
            done: false,
        }
    }

    fn fail(feedback: impl Into<String>) -> Self {
        Self {
            success: false,
            feedback: feedback.into(),
            done: false,
        }
    }
}

/// Frontier clusters the robot has given up on.
#[derive(Clone, Debug, Default)]
pub struct FrontierBlacklist {
    cells: BTreeSet<Cell>,
}

impl FrontierBlacklist {
    pub fn add(&mut self, f: &Frontier) {
        self.cells.extend(f.cells.iter().copied());
    }

    /// A cluster is ignored once most of its cells have been given up on.
    pub fn covers(&self, f: &Frontier) -> bool {
        let hit = f.cells.iter().filter(|c| self.cells.contains(c)).count();
        2 * hit > f.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

pub struct Workspace<'a> {
    pub sim: &'a mut SimState,
    pub per: &'a mut Perception,
    pub geometry: &'a Geometry,
    /// Unfiltered, unpruned graph of this step.
    pub scene: &'a SceneGraph,
    pub blacklist: &'a mut FrontierBlacklist,
}

fn find_object<'g>(scene: &'g SceneGraph, id: Option<&str>) -> Option<&'g ObjectNode> {
    let id = id?.trim();
    scene.objects.get(id).or_else(|| scene.object_by_name(id))
}

fn go_to_cell(ws: &mut Workspace<'_>, goal: Cell) -> Result<(), String> {
    for _ in 0..2 {
        let start = ws.sim.robot_cell();
        if start == goal {
            return Ok(());
        }
        let Some(path) = plan_path(&ws.per.map, start, goal) else {
            return Err(FEEDBACK_NO_PATH.into());
        };
        match drive(ws.sim, ws.per, &path.cells) {
            Ok(()) => return Ok(()),
            Err(e) => debug!("drive interrupted: {e}; replanning"),
        }
    }
    Err(FEEDBACK_NO_PATH.into())
}

/// Best reachable sample on a circle around `center`, by path cost from the robot.
fn approach_cell(ws: &Workspace<'_>, center: Point) -> Option<Cell> {
    let map = &ws.per.map;
    let res = map.resolution;
    let field = cost_field(map, ws.sim.robot_cell());
    for r in APPROACH_RADII_M {
        let mut best: Option<(f64, Cell)> = None;
        for k in 0..APPROACH_SAMPLES {
            let a = TAU * k as f64 / APPROACH_SAMPLES as f64;
            let c = Point::new(center.x + r * a.cos(), center.y + r * a.sin()).cell(res);
            let Some(&cost) = field.get(c) else { continue };
            if cost.is_finite() && best.is_none_or(|(b, _)| cost < b) {
                best = Some((cost, c));
            }
        }
        if let Some((_, c)) = best {
            return Some(c);
        }
    }
    None
}

fn explore(ws: &mut Workspace<'_>, room: &str) -> Outcome {
    let Some(rid) = ws.scene.resolve_region(room) else {
        return Outcome::fail(FEEDBACK_UNKNOWN);
    };
    let candidates: Vec<&Frontier> = ws
        .geometry
        .frontiers
        .iter()
        .filter(|f| !ws.blacklist.covers(f))
        .filter(|f| {
            ws.scene
                .frontiers
                .iter()
                .any(|n| n.centroid == f.centroid && n.region == rid)
        })
        .collect();
    if candidates.is_empty() {
        return Outcome::fail(FEEDBACK_EXPLORED);
    }
    let field = cost_field(&ws.per.map, ws.sim.robot_cell());
    let mut ranked: Vec<(f64, &Frontier)> = candidates
        .iter()
        .map(|f| (field.get(f.centroid).copied().unwrap_or(f64::INFINITY), *f))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    let unreachable: Vec<&Frontier> = ranked
        .iter()
        .filter(|(c, _)| !c.is_finite())
        .map(|(_, f)| *f)
        .collect();
    for f in unreachable {
        ws.blacklist.add(f);
    }
    let Some((cost, target)) = ranked.first().copied() else {
        return Outcome::fail(FEEDBACK_EXPLORED);
    };
    if !cost.is_finite() {
        return Outcome::fail(FEEDBACK_NO_PATH);
    }
    if let Err(e) = go_to_cell(ws, target.centroid) {
        ws.blacklist.add(target);
        return Outcome::fail(e);
    }
    spin(ws.sim, ws.per);
    if is_frontier_cell(&ws.per.map, target.centroid) {
        debug!("frontier at {:?} did not clear; giving up on it", target.centroid);
        ws.blacklist.add(target);
    }
    Outcome::ok("explored")
}

fn navigate(ws: &mut Workspace<'_>, object: Option<&str>) -> Outcome {
    let Some(o) = find_object(ws.scene, object) else {
        return Outcome::fail(FEEDBACK_UNKNOWN);
    };
    let res = ws.per.map.resolution;
    let Some(n) = closest_node(&ws.geometry.sparse, o.position.center(res), None) else {
        return Outcome::fail(FEEDBACK_NO_PATH);
    };
    let goal = ws.geometry.sparse.node(n).unwrap().cell;
    match go_to_cell(ws, goal) {
        Ok(()) => Outcome::ok("arrived"),
        Err(e) => Outcome::fail(e),
    }
}

fn go_to_and(ws: &mut Workspace<'_>, call: &SubpolicyCall) -> Outcome {
    let verb = call.name.magic_verb().expect("manipulation subpolicy");
    let Some(o) = find_object(ws.scene, call.object.as_deref()) else {
        return Outcome::fail(FEEDBACK_UNKNOWN);
    };
    let res = ws.per.map.resolution;
    let center = if o.is_door {
        ws.per
            .tracker
            .doors()
            .into_iter()
            .find(|d| d.id == o.name)
            .map_or(o.position.center(res), |d| d.bbox.center_m(res))
    } else {
        o.position.center(res)
    };
    let name = o.name.clone();
    let close_enough = APPROACH_RADII_M[0] + res / 2.0;
    if ws.sim.robot.position.dist(center) > close_enough {
        let Some(goal) = approach_cell(ws, center) else {
            return Outcome::fail(FEEDBACK_NO_PATH);
        };
        if let Err(e) = go_to_cell(ws, goal) {
            return Outcome::fail(e);
        }
    }
    face_point(ws.sim, ws.per, center);
    let r = ws.sim.magic_interact(verb, &name);
    for d in &r.world_delta {
        match d {
            WorldDelta::Object(spec) => ws.per.tracker.note_object(spec),
            WorldDelta::Door(spec) => ws.per.tracker.note_door(spec),
            WorldDelta::Robot(_) => {}
        }
    }
    ws.per.sense(ws.sim);
    if r.success {
        Outcome::ok(format!("{} {} succeeded", call.name.as_str(), o.id))
    } else {
        Outcome::fail(r.feedback)
    }
}

/// Runs one high-level call to completion against the simulator.
pub fn execute_subpolicy(ws: &mut Workspace<'_>, call: &SubpolicyCall) -> Outcome {
    match call.name {
        Subpolicy::Done => Outcome {
            success: true,
            feedback: String::new(),
            done: true,
        },
        Subpolicy::Explore => explore(ws, call.room.as_deref().unwrap_or("")),
        Subpolicy::Navigate => navigate(ws, call.object.as_deref()),
        _ => go_to_and(ws, call),
    }
}
