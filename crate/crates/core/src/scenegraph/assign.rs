use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use log::debug;

use crate::geom::Point;
use crate::voronoi::{NodeId, VoronoiGraph};

pub const LAMBDA: f64 = 1.3;
pub const CANDIDATE_RADIUS_M: f64 = 1.5;
pub const MIN_CANDIDATES: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// Node near the object.
    pub v: NodeId,
    /// Node near the viewpoint; `None` when the fallback decided.
    pub u: Option<NodeId>,
    pub cost: f64,
    pub component: u32,
}

/// Every node within the candidate radius of `p`, topped up to at least
/// [`MIN_CANDIDATES`] by nearest distance (ties by id).
pub fn candidate_set(graph: &VoronoiGraph, p: Point) -> Vec<NodeId> {
    let mut all: Vec<(f64, NodeId)> = graph.nodes().map(|n| (n.position.dist(p), n.id)).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let within = all.iter().filter(|(d, _)| *d <= CANDIDATE_RADIUS_M).count();
    let take = within.max(MIN_CANDIDATES).min(all.len());
    let mut ids: Vec<NodeId> = all[..take].iter().map(|(_, id)| *id).collect();
    ids.sort_unstable();
    ids
}

/// Graph distances from `source` to each of `targets`; stops once all are settled.
fn distances_to(graph: &VoronoiGraph, source: NodeId, targets: &[NodeId]) -> BTreeMap<NodeId, f64> {
    let mut dist: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut remaining = targets.len();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((bits, n))) = heap.pop() {
        if dist.contains_key(&n) {
            continue;
        }
        let d = f64::from_bits(bits);
        dist.insert(n, d);
        if targets.contains(&n) {
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        for (m, w) in graph.neighbors(n) {
            if !dist.contains_key(&m) {
                // Non-negative floats order like their bit patterns.
                heap.push(Reverse(((d + w).to_bits(), m)));
            }
        }
    }
    dist
}

/// Object-to-node assignment minimizing
/// `d_V(v, u) + d_E(O, v)^λ + d_E(v_p, u)` over `v` near the object and `u` near the
/// viewpoint. Pairs in different components cost infinity; ties go to the smallest
/// `(v, u)`. When every pair is infinite, the node nearest the object decides.
pub fn assign_object(
    graph: &VoronoiGraph,
    object: Point,
    viewpoint: Point,
    lambda: f64,
) -> Option<Assignment> {
    let s_o = candidate_set(graph, object);
    let s_p = candidate_set(graph, viewpoint);
    if s_o.is_empty() || s_p.is_empty() {
        return None;
    }
    let mut best: Option<(f64, NodeId, NodeId)> = None;
    let mut from_u: BTreeMap<NodeId, BTreeMap<NodeId, f64>> = BTreeMap::new();
    for &u in &s_p {
        from_u.insert(u, distances_to(graph, u, &s_o));
    }
    for &v in &s_o {
        let pv = graph.node(v).unwrap().position;
        for &u in &s_p {
            let Some(dv) = from_u[&u].get(&v) else {
                continue;
            };
            let pu = graph.node(u).unwrap().position;
            let cost = dv + object.dist(pv).powf(lambda) + viewpoint.dist(pu);
            if best.is_none_or(|(c, bv, bu)| cost < c || (cost == c && (v, u) < (bv, bu))) {
                best = Some((cost, v, u));
            }
        }
    }
    let comp = |id: NodeId| graph.components.get(&id).copied().unwrap_or(0);
    match best {
        Some((cost, v, u)) => Some(Assignment {
            v,
            u: Some(u),
            cost,
            component: comp(v),
        }),
        None => {
            let v = crate::voronoi::closest_node(graph, object, None)?;
            debug!("no finite assignment pair; using nearest node {v}");
            Some(Assignment {
                v,
                u: None,
                cost: f64::INFINITY,
                component: comp(v),
            })
        }
    }
}
