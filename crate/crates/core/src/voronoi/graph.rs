use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::{Cell, Point};

pub type NodeId = u32;

/// Node id → label. Labels are dense, numbered in order of each class's smallest node id.
pub type Labels = BTreeMap<NodeId, u32>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VNode {
    pub id: NodeId,
    pub position: Point,
    pub cell: Cell,
    /// ESDF value at the node, meters.
    pub clearance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VEdge {
    /// Always `u < v`.
    pub u: NodeId,
    pub v: NodeId,
    /// Metric length of `polyline`.
    pub weight: f64,
    /// Geometry from `u` to `v`, endpoints included.
    pub polyline: Vec<Point>,
}

/// Simple undirected graph with id-indexed storage. Removing nodes leaves holes so ids
/// stay stable across sparsification and separation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VoronoiGraph {
    nodes: Vec<Option<VNode>>,
    /// Per node: (neighbor, slot in `edges`).
    adj: Vec<Vec<(NodeId, usize)>>,
    edges: Vec<Option<VEdge>>,
    /// Connected components of the graph as extracted or sparsified, before any door cut.
    pub components: Labels,
    /// Components after removing door-crossing edges; empty until separation.
    pub regions: Labels,
}

impl VoronoiGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, position: Point, cell: Cell, clearance: f64) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(Some(VNode {
            id,
            position,
            cell,
            clearance,
        }));
        self.adj.push(Vec::new());
        id
    }

    pub fn node(&self, id: NodeId) -> Option<&VNode> {
        self.nodes.get(id as usize).and_then(|n| n.as_ref())
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.node(id).is_some()
    }

    /// Live nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &VNode> + '_ {
        self.nodes.iter().flatten()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes().map(|n| n.id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes().count()
    }

    /// One past the largest id ever allocated.
    pub fn id_bound(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_count() == 0
    }

    pub fn edges(&self) -> impl Iterator<Item = &VEdge> + '_ {
        self.edges.iter().flatten()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    fn slot(&self, a: NodeId, b: NodeId) -> Option<usize> {
        self.adj
            .get(a as usize)?
            .iter()
            .find(|(n, _)| *n == b)
            .map(|(_, s)| *s)
    }

    pub fn edge(&self, a: NodeId, b: NodeId) -> Option<&VEdge> {
        self.slot(a, b).and_then(|s| self.edges[s].as_ref())
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.slot(a, b).is_some()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adj.get(id as usize).map_or(0, Vec::len)
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.adj
            .get(id as usize)
            .into_iter()
            .flatten()
            .map(|(n, s)| (*n, self.edges[*s].as_ref().map_or(f64::NAN, |e| e.weight)))
    }

    /// Adds an edge unless it would be a self-loop, a duplicate, or touch a missing node.
    /// `polyline` runs from `a` to `b`; an empty polyline means the straight segment.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, weight: f64, polyline: Vec<Point>) -> bool {
        if a == b || !self.contains(a) || !self.contains(b) || self.has_edge(a, b) {
            return false;
        }
        let mut polyline = if polyline.is_empty() {
            vec![self.node(a).unwrap().position, self.node(b).unwrap().position]
        } else {
            polyline
        };
        let (u, v) = if a < b {
            (a, b)
        } else {
            polyline.reverse();
            (b, a)
        };
        let slot = self.edges.len();
        self.edges.push(Some(VEdge {
            u,
            v,
            weight,
            polyline,
        }));
        self.adj[u as usize].push((v, slot));
        self.adj[v as usize].push((u, slot));
        true
    }

    pub fn remove_edge(&mut self, a: NodeId, b: NodeId) -> Option<VEdge> {
        let slot = self.slot(a, b)?;
        self.adj[a as usize].retain(|(n, _)| *n != b);
        self.adj[b as usize].retain(|(n, _)| *n != a);
        self.edges[slot].take()
    }

    pub fn remove_node(&mut self, id: NodeId) -> Option<VNode> {
        let node = self.nodes.get_mut(id as usize)?.take()?;
        let incident: Vec<NodeId> = self.adj[id as usize].iter().map(|(n, _)| *n).collect();
        for n in incident {
            self.remove_edge(id, n);
        }
        self.components.remove(&id);
        self.regions.remove(&id);
        Some(node)
    }

    /// Polyline of edge (a, b) oriented from `a` to `b`.
    pub fn oriented_polyline(&self, a: NodeId, b: NodeId) -> Option<Vec<Point>> {
        let e = self.edge(a, b)?;
        let mut p = e.polyline.clone();
        if e.u != a {
            p.reverse();
        }
        Some(p)
    }

    /// Drops empty slots. Node ids are kept.
    pub fn compact_edges(&mut self) {
        let mut remap = vec![usize::MAX; self.edges.len()];
        let mut kept = Vec::with_capacity(self.edges.len());
        for (i, e) in self.edges.drain(..).enumerate() {
            if let Some(e) = e {
                remap[i] = kept.len();
                kept.push(Some(e));
            }
        }
        self.edges = kept;
        for list in &mut self.adj {
            for (_, s) in list.iter_mut() {
                *s = remap[*s];
            }
        }
    }
}

pub fn polyline_length(p: &[Point]) -> f64 {
    p.windows(2).map(|w| w[0].dist(w[1])).sum()
}
