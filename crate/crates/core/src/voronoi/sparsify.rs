use super::components::connected_components;
use super::graph::{NodeId, VoronoiGraph};

/// Contract chains of degree-2 nodes whose two incident edges sum to less than `c` meters.
///
/// One pass over the degree-2 nodes present at entry, in id order. A contraction that
/// would create a self-loop or duplicate an existing edge is skipped. Merged edges
/// carry the concatenated polyline and the summed weight, so graph distances between
/// surviving nodes are unchanged. Linear in the node count.
pub fn sparsify(graph: &VoronoiGraph, c: f64) -> VoronoiGraph {
    let mut g = graph.clone();
    let snapshot: Vec<NodeId> = g.node_ids().filter(|&id| g.degree(id) == 2).collect();
    for x in snapshot {
        if g.degree(x) != 2 {
            continue;
        }
        let mut it = g.neighbors(x);
        let (v, w1) = it.next().unwrap();
        let (u, w2) = it.next().unwrap();
        drop(it);
        if w1 + w2 >= c || u == v || g.has_edge(u, v) {
            continue;
        }
        let mut poly = g.oriented_polyline(v, x).unwrap();
        let tail = g.oriented_polyline(x, u).unwrap();
        poly.extend_from_slice(&tail[1..]);
        g.remove_node(x);
        g.add_edge(v, u, w1 + w2, poly);
    }
    g.compact_edges();
    g.components = connected_components(&g);
    g.regions.clear();
    g
}
