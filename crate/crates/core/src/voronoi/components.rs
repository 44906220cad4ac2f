use std::collections::VecDeque;

use crate::geom::Point;

use super::graph::{Labels, NodeId, VoronoiGraph};

/// Connected components, labeled 0.. in order of each component's smallest node id.
pub fn connected_components(graph: &VoronoiGraph) -> Labels {
    let mut seen = vec![false; graph.id_bound()];
    let mut labels = Labels::new();
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for id in graph.node_ids() {
        if seen[id as usize] {
            continue;
        }
        seen[id as usize] = true;
        queue.push_back(id);
        while let Some(n) = queue.pop_front() {
            labels.insert(n, next);
            for (m, _) in graph.neighbors(n) {
                if !seen[m as usize] {
                    seen[m as usize] = true;
                    queue.push_back(m);
                }
            }
        }
        next += 1;
    }
    labels
}

pub fn label_count(labels: &Labels) -> usize {
    labels.values().max().map_or(0, |m| *m as usize + 1)
}

/// Euclidean-nearest node, ties to the smallest id. With `within = Some((labels, l))`
/// only nodes labeled `l` are candidates.
pub fn closest_node(
    graph: &VoronoiGraph,
    point: Point,
    within: Option<(&Labels, u32)>,
) -> Option<NodeId> {
    let mut best: Option<(f64, NodeId)> = None;
    for n in graph.nodes() {
        if let Some((labels, l)) = within {
            if labels.get(&n.id) != Some(&l) {
                continue;
            }
        }
        let d = n.position.dist(point);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, n.id));
        }
    }
    best.map(|(_, id)| id)
}
