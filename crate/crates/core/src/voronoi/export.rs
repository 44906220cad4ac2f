use std::fmt::Write;

use super::graph::VoronoiGraph;

/// Text dump: `node id x y clearance`, then `edge u v weight`, then `region id label`
/// lines. Six decimals throughout.
pub fn edge_list(graph: &VoronoiGraph) -> String {
    let mut s = String::new();
    for n in graph.nodes() {
        writeln!(
            s,
            "node {} {:.6} {:.6} {:.6}",
            n.id, n.position.x, n.position.y, n.clearance
        )
        .unwrap();
    }
    let mut edges: Vec<_> = graph.edges().collect();
    edges.sort_by_key(|e| (e.u, e.v));
    for e in edges {
        writeln!(s, "edge {} {} {:.6}", e.u, e.v, e.weight).unwrap();
    }
    for (id, l) in &graph.regions {
        writeln!(s, "region {id} {l}").unwrap();
    }
    s
}
