use std::collections::{BTreeMap, BTreeSet, VecDeque};

use log::debug;

use crate::geom::{Cell, Grid, Point};
use crate::gridworld::{Articulation, DoorSpec, DoorState, ObjectSpec, Observation, RobotState};
use crate::language::LlmBackend;
use crate::mapping::{BevMap, Frontier, Occupancy};
use crate::voronoi::{closest_node, NodeId, VoronoiGraph};

use super::assign::{assign_object, LAMBDA};
use super::classify::{classify_region, FALLBACK_ROOM};
use super::types::{
    alpha_suffix, FrontierNode, ObjectNode, RegionNode, Relation, RelationKind, SceneGraph,
    Viewpoint,
};

/// Floor categories too generic to say anything about a room.
const GENERIC_FLOORS: [&str; 1] = ["floor"];
/// Minimum share of a region's cells a floor category needs to be reported.
const FLOOR_SHARE: f64 = 0.25;

#[derive(Clone, Debug, PartialEq)]
struct Memory {
    instance: String,
    category: String,
    position: Cell,
    center: Point,
    is_door: bool,
    articulated: bool,
    state: Option<String>,
    attributes: BTreeMap<String, serde_json::Value>,
    contained_in: Option<String>,
    on_top_of: Option<String>,
    viewpoint: Viewpoint,
    last_seen: u64,
}

/// The geometric layers a scene graph is built from.
pub struct Layers<'a> {
    pub map: &'a BevMap,
    /// Sparsified graph before door cuts.
    pub sparse: &'a VoronoiGraph,
    /// The same graph after door cuts, with region labels.
    pub separated: &'a VoronoiGraph,
    pub frontiers: &'a [Frontier],
    pub robot: &'a RobotState,
}

/// Episode-long object memory plus the bookkeeping that keeps ids stable between
/// rebuilds of the scene graph.
#[derive(Clone, Debug)]
pub struct SceneTracker {
    pub lambda: f64,
    objects: BTreeMap<String, Memory>,
    suffixes: BTreeMap<String, usize>,
    doors: BTreeMap<String, DoorSpec>,
    prev_regions: Option<Grid<Option<u32>>>,
    next_region: u32,
    labels: BTreeMap<Vec<String>, String>,
    /// `(kept, absorbed)` region id pairs, in the order merges happened.
    pub merges: Vec<(u32, u32)>,
    resolution: f64,
}

impl SceneTracker {
    pub fn new(resolution: f64) -> Self {
        Self {
            lambda: LAMBDA,
            objects: BTreeMap::new(),
            suffixes: BTreeMap::new(),
            doors: BTreeMap::new(),
            prev_regions: None,
            next_region: 0,
            labels: BTreeMap::new(),
            merges: Vec::new(),
            resolution,
        }
    }

    fn instance_for(&mut self, name: &str, category: &str) -> String {
        if let Some(m) = self.objects.get(name) {
            return m.instance.clone();
        }
        let n = self.suffixes.entry(category.to_string()).or_insert(0);
        let id = format!("{category}_{}", alpha_suffix(*n));
        *n += 1;
        id
    }

    fn upsert(&mut self, name: &str, mut fresh: Memory, robot: &RobotState) {
        let dist = robot.position.dist(fresh.center);
        match self.objects.get_mut(name) {
            Some(m) => {
                let moved = m.position != fresh.position;
                if moved || dist < m.viewpoint.distance {
                    m.viewpoint = Viewpoint {
                        position: robot.position,
                        heading: robot.heading,
                        distance: dist,
                    };
                }
                fresh.viewpoint = m.viewpoint.clone();
                fresh.instance = m.instance.clone();
                *m = fresh;
            }
            None => {
                fresh.viewpoint = Viewpoint {
                    position: robot.position,
                    heading: robot.heading,
                    distance: dist,
                };
                self.objects.insert(name.to_string(), fresh);
            }
        }
    }

    /// Records every object and door in the observation. New instances get suffixes in
    /// simulator-id order within the observation.
    pub fn observe(&mut self, obs: &Observation) {
        let res = self.resolution;
        let mut objs: Vec<_> = obs.visible_objects.iter().collect();
        objs.sort_by(|a, b| a.id.cmp(&b.id));
        for o in objs {
            let instance = self.instance_for(&o.id, &o.category);
            let state = match o.articulation_state {
                Articulation::Open => Some("open".to_string()),
                Articulation::Closed => Some("closed".to_string()),
                Articulation::NotApplicable => None,
            };
            let mem = Memory {
                instance,
                category: o.category.clone(),
                position: o.position,
                center: o.position.center(res),
                is_door: false,
                articulated: o.articulated,
                state,
                attributes: o.attributes.clone(),
                contained_in: o.contained_in.clone(),
                on_top_of: o.on_top_of.clone(),
                viewpoint: placeholder_viewpoint(),
                last_seen: obs.step,
            };
            self.upsert(&o.id, mem, &obs.robot_pose);
        }
        let mut doors: Vec<_> = obs.visible_doors.iter().collect();
        doors.sort_by(|a, b| a.id.cmp(&b.id));
        for d in doors {
            self.doors.insert(d.id.clone(), d.clone());
            let instance = self.instance_for(&d.id, "door");
            let mem = Memory {
                instance,
                category: "door".into(),
                position: d.center,
                center: d.bbox.center_m(res),
                is_door: true,
                articulated: true,
                state: Some(match d.state {
                    DoorState::Open => "open".into(),
                    DoorState::Closed => "closed".into(),
                }),
                attributes: BTreeMap::new(),
                contained_in: None,
                on_top_of: None,
                viewpoint: placeholder_viewpoint(),
                last_seen: obs.step,
            };
            self.upsert(&d.id, mem, &obs.robot_pose);
        }
    }

    /// Applies the outcome of the robot's own manipulation, which it knows without
    /// looking.
    pub fn note_object(&mut self, o: &ObjectSpec) {
        if let Some(m) = self.objects.get_mut(&o.id) {
            if m.position != o.position {
                m.viewpoint.distance = f64::INFINITY;
            }
            m.position = o.position;
            m.center = o.position.center(self.resolution);
            m.contained_in = o.contained_in.clone();
            m.on_top_of = o.on_top_of.clone();
            m.state = match o.articulation_state {
                Articulation::Open => Some("open".into()),
                Articulation::Closed => Some("closed".into()),
                Articulation::NotApplicable => None,
            };
        }
    }

    pub fn note_door(&mut self, d: &DoorSpec) {
        self.doors.insert(d.id.clone(), d.clone());
        if let Some(m) = self.objects.get_mut(&d.id) {
            m.state = Some(match d.state {
                DoorState::Open => "open".into(),
                DoorState::Closed => "closed".into(),
            });
        }
    }

    /// Doors seen so far, by id.
    pub fn doors(&self) -> Vec<DoorSpec> {
        self.doors.values().cloned().collect()
    }

    /// Simulator ids of everything observed so far.
    pub fn observed_names(&self) -> BTreeSet<String> {
        self.objects.keys().cloned().collect()
    }

    pub fn instance_of(&self, name: &str) -> Option<&str> {
        self.objects.get(name).map(|m| m.instance.as_str())
    }

    fn held(&self, name: &str, gripper: Option<&str>) -> bool {
        let mut cur = name;
        for _ in 0..=self.objects.len() {
            if gripper == Some(cur) {
                return true;
            }
            match self.objects.get(cur).and_then(|m| m.contained_in.as_deref().or(m.on_top_of.as_deref())) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    /// Rebuilds the full scene graph from the current layers.
    pub fn update(&mut self, layers: &Layers<'_>, backend: &dyn LlmBackend) -> SceneGraph {
        let sep = layers.separated;
        let map = layers.map;
        let robot = layers.robot;
        let res = map.resolution;

        let nearest = nearest_node_raster(map, sep);
        let label_of = |n: NodeId| sep.regions.get(&n).copied().unwrap_or(0);
        let mut raster: Grid<Option<u32>> = Grid::new(map.width(), map.height(), None);
        for (i, n) in nearest.as_slice().iter().enumerate() {
            raster.as_mut_slice()[i] = n.map(label_of);
        }

        // Voronoi label -> stable region id.
        let labels: BTreeSet<u32> = sep.regions.values().copied().collect();
        let ids = self.stable_ids(&raster, &labels);
        for v in raster.as_mut_slice().iter_mut() {
            *v = v.map(|l| ids[&l]);
        }

        let node_region = |n: NodeId| ids.get(&label_of(n)).copied();
        let locate = |p: Point| -> Option<u32> {
            let c = p.cell(res);
            raster
                .get(c)
                .copied()
                .flatten()
                .or_else(|| closest_node(sep, p, None).and_then(node_region))
        };

        let robot_node = nearest
            .get(robot.position.cell(res))
            .copied()
            .flatten()
            .or_else(|| closest_node(sep, robot.position, None));
        let robot_region = robot_node.and_then(node_region);
        let robot_component = robot_node.and_then(|n| sep.components.get(&n).copied());

        let mut regions: BTreeMap<u32, RegionNode> = BTreeMap::new();
        for n in sep.nodes() {
            let Some(rid) = node_region(n.id) else { continue };
            let r = regions.entry(rid).or_insert_with(|| RegionNode {
                id: rid,
                label: FALLBACK_ROOM.into(),
                name: String::new(),
                voronoi_labels: BTreeSet::new(),
                component: sep.components.get(&n.id).copied().unwrap_or(0),
                node_count: 0,
                frontier_count: 0,
                exploration_complete: true,
                floor_categories: BTreeSet::new(),
            });
            r.voronoi_labels.insert(label_of(n.id));
            r.node_count += 1;
        }

        let mut frontiers = Vec::new();
        for f in layers.frontiers {
            if let Some(rid) = locate(f.centroid.center(res)) {
                frontiers.push(FrontierNode {
                    centroid: f.centroid,
                    size: f.cells.len(),
                    region: rid,
                });
                if let Some(r) = regions.get_mut(&rid) {
                    r.frontier_count += 1;
                    r.exploration_complete = false;
                }
            }
        }

        // Floor categories by share of each region's cells.
        let mut floor_counts: BTreeMap<u32, BTreeMap<String, usize>> = BTreeMap::new();
        let mut totals: BTreeMap<u32, usize> = BTreeMap::new();
        for (c, rid) in raster.iter() {
            let Some(rid) = rid else { continue };
            *totals.entry(*rid).or_default() += 1;
            if let Some(cat) = map.get(c).and_then(|m| m.category.as_ref()) {
                if map.state(c) == Occupancy::Free && !GENERIC_FLOORS.contains(&cat.as_str()) {
                    *floor_counts.entry(*rid).or_default().entry(cat.clone()).or_default() += 1;
                }
            }
        }
        for (rid, counts) in floor_counts {
            let total = totals[&rid] as f64;
            if let Some(r) = regions.get_mut(&rid) {
                for (cat, k) in counts {
                    if k as f64 >= FLOOR_SHARE * total {
                        r.floor_categories.insert(cat);
                    }
                }
            }
        }

        let gripper = robot.gripper.as_deref();
        let mut objects: BTreeMap<String, ObjectNode> = BTreeMap::new();
        let mut region_of_name: BTreeMap<String, u32> = BTreeMap::new();
        let names: Vec<String> = self.objects.keys().cloned().collect();
        // Roots first, then children inherit their parent's region.
        let mut pending: Vec<String> = Vec::new();
        for name in &names {
            let m = &self.objects[name];
            let held = self.held(name, gripper);
            let region = if held {
                robot_region
            } else if m.contained_in.is_some() || m.on_top_of.is_some() {
                pending.push(name.clone());
                continue;
            } else {
                assign_object(layers.sparse, m.center, m.viewpoint.position, self.lambda)
                    .and_then(|a| node_region(a.v))
            };
            if let Some(rid) = region {
                region_of_name.insert(name.clone(), rid);
            }
        }
        for _ in 0..=pending.len() {
            for name in &pending {
                if region_of_name.contains_key(name) {
                    continue;
                }
                let m = &self.objects[name];
                let parent = m.contained_in.as_deref().or(m.on_top_of.as_deref()).unwrap();
                let r = region_of_name.get(parent).copied().or_else(|| {
                    if self.objects.contains_key(parent) {
                        None
                    } else {
                        assign_object(layers.sparse, m.center, m.viewpoint.position, self.lambda)
                            .and_then(|a| node_region(a.v))
                    }
                });
                if let Some(r) = r {
                    region_of_name.insert(name.clone(), r);
                }
            }
        }

        for name in &names {
            let m = &self.objects[name];
            let Some(&region) = region_of_name.get(name) else {
                debug!("object {name} could not be placed in any region");
                continue;
            };
            let held = self.held(name, gripper);
            let mut relations = Vec::new();
            if !held || gripper != Some(name.as_str()) {
                for (kind, parent) in [
                    (RelationKind::Inside, &m.contained_in),
                    (RelationKind::Ontop, &m.on_top_of),
                ] {
                    if let Some(p) = parent.as_ref().and_then(|p| self.objects.get(p)) {
                        relations.push(Relation {
                            kind,
                            target: p.instance.clone(),
                        });
                    }
                }
            }
            let position = if held { robot.position.cell(res) } else { m.position };
            objects.insert(
                m.instance.clone(),
                ObjectNode {
                    id: m.instance.clone(),
                    name: name.clone(),
                    category: m.category.clone(),
                    position,
                    is_door: m.is_door,
                    articulated: m.articulated,
                    state: m.state.clone(),
                    attributes: m.attributes.clone(),
                    relations,
                    viewpoint: m.viewpoint.clone(),
                    held,
                    last_seen: m.last_seen,
                    region,
                },
            );
        }

        // Label each region from what it holds; repeated category sets reuse the answer.
        for r in regions.values_mut() {
            let mut cats: BTreeSet<String> = objects
                .values()
                .filter(|o| o.region == r.id && !o.is_door && !o.held)
                .map(|o| o.category.clone())
                .collect();
            cats.extend(r.floor_categories.iter().cloned());
            let key: Vec<String> = cats.into_iter().collect();
            let label = match self.labels.get(&key) {
                Some(l) => l.clone(),
                None => {
                    let l = classify_region(&key, backend);
                    self.labels.insert(key, l.clone());
                    l
                }
            };
            r.label = label;
        }

        self.prev_regions = Some(raster);
        let mut graph = SceneGraph {
            regions,
            objects,
            frontiers,
            robot_region,
            robot_component,
            robot_position: robot.position,
            holding: gripper.and_then(|g| self.instance_of(g).map(String::from)),
        };
        graph.assign_region_names();
        graph
    }

    /// Maps this step's Voronoi labels to region ids that persist across steps. Each
    /// previous region goes to the label covering most of its former cells; a label
    /// that collects several previous regions keeps the smallest id.
    fn stable_ids(&mut self, raster: &Grid<Option<u32>>, labels: &BTreeSet<u32>) -> BTreeMap<u32, u32> {
        let mut votes: BTreeMap<u32, BTreeMap<u32, usize>> = BTreeMap::new();
        if let Some(prev) = &self.prev_regions {
            for (a, b) in raster.as_slice().iter().zip(prev.as_slice()) {
                if let (Some(l), Some(p)) = (a, b) {
                    *votes.entry(*p).or_default().entry(*l).or_default() += 1;
                }
            }
        }
        let mut claimed: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (p, by_label) in &votes {
            let (l, _) = by_label
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .unwrap();
            claimed.entry(*l).or_default().push(*p);
        }
        let mut out = BTreeMap::new();
        for l in labels {
            match claimed.get(l) {
                Some(ps) => {
                    let keep = ps[0];
                    for absorbed in &ps[1..] {
                        self.merges.push((keep, *absorbed));
                    }
                    out.insert(*l, keep);
                }
                None => {
                    out.insert(*l, self.next_region);
                    self.next_region += 1;
                }
            }
        }
        self.next_region = self
            .next_region
            .max(out.values().map(|v| v + 1).max().unwrap_or(0));
        out
    }
}

fn placeholder_viewpoint() -> Viewpoint {
    Viewpoint {
        position: Point::new(0.0, 0.0),
        heading: 0.0,
        distance: f64::INFINITY,
    }
}

/// For each free cell, the Voronoi node reached first by a breadth-first wave over free
/// cells started from all nodes at once (seeded in id order).
pub fn nearest_node_raster(map: &BevMap, graph: &VoronoiGraph) -> Grid<Option<NodeId>> {
    let mut out: Grid<Option<NodeId>> = Grid::new(map.width(), map.height(), None);
    let mut queue = VecDeque::new();
    for n in graph.nodes() {
        if let Some(slot) = out.get_mut(n.cell) {
            if slot.is_none() {
                *slot = Some(n.id);
                queue.push_back(n.cell);
            }
        }
    }
    while let Some(c) = queue.pop_front() {
        let id = out[c];
        for (nc, _) in crate::mapping::successors(map, c) {
            let slot = out.get_mut(nc).unwrap();
            if slot.is_none() {
                *slot = id;
                queue.push_back(nc);
            }
        }
    }
    out
}
