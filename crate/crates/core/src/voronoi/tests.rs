use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::geom::{Cell, CellRect, Point};
use crate::gridworld::{default_free_space, DoorSpec, DoorState, Orientation};
use crate::mapping::{compute_esdf, BevMap, Occupancy};

const RES: f64 = 0.075;

/// `#` occupied, `.` free, anything else unknown. Row 0 is y = 0.
fn ascii_map(rows: &[String]) -> BevMap {
    let h = rows.len();
    let w = rows[0].len();
    let mut m = BevMap::new(w, h, RES, default_free_space());
    for (y, row) in rows.iter().enumerate() {
        for (x, ch) in row.chars().enumerate() {
            let c = Cell::new(x as i32, y as i32);
            match ch {
                '#' => m.set(c, Occupancy::Occupied, Some("wall")),
                '.' => m.set(c, Occupancy::Free, Some("floor")),
                _ => {}
            }
        }
    }
    m
}

fn paint(w: usize, h: usize, wall: impl Fn(i32, i32) -> bool) -> Vec<String> {
    (0..h as i32)
        .map(|y| {
            (0..w as i32)
                .map(|x| if wall(x, y) { '#' } else { '.' })
                .collect()
        })
        .collect()
}

fn gvd_of(map: &BevMap) -> VoronoiGraph {
    extract_gvd(&compute_esdf(map), map, 0.0)
}

fn degree_histogram(g: &VoronoiGraph) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for id in g.node_ids() {
        *h.entry(g.degree(id)).or_default() += 1;
    }
    h
}

fn check_simple(g: &VoronoiGraph) {
    let mut seen = BTreeSet::new();
    for e in g.edges() {
        assert!(e.u < e.v, "self-loop or unordered edge");
        assert!(seen.insert((e.u, e.v)), "parallel edge");
        assert!(e.weight > 0.0);
        assert!((polyline_length(&e.polyline) - e.weight).abs() < 1e-9);
        assert_eq!(e.polyline.first(), Some(&g.node(e.u).unwrap().position));
        assert_eq!(e.polyline.last(), Some(&g.node(e.v).unwrap().position));
    }
}

/// Two 2-cell-walled rooms joined by a 12-cell doorway in a vertical wall.
fn two_rooms() -> (BevMap, DoorSpec) {
    let (w, h) = (60, 40);
    let rows = paint(w, h, |x, y| {
        let border = x < 2 || y < 2 || x >= w as i32 - 2 || y >= h as i32 - 2;
        let divider = (28..=29).contains(&x) && !(14..=25).contains(&y);
        border || divider
    });
    let door = DoorSpec {
        id: "door_0".into(),
        center: Cell::new(28, 19),
        length_cells: 12,
        orientation: Orientation::Vertical,
        state: DoorState::Open,
        bbox: CellRect::new(28, 14, 29, 25),
    };
    (ascii_map(&rows), door)
}

fn dijkstra(g: &VoronoiGraph, s: NodeId) -> BTreeMap<NodeId, f64> {
    let mut dist = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((ordered(0.0), s)));
    while let Some(Reverse((d, n))) = heap.pop() {
        let d = f64::from_bits(d);
        if dist.contains_key(&n) {
            continue;
        }
        dist.insert(n, d);
        for (m, w) in g.neighbors(n) {
            if !dist.contains_key(&m) {
                heap.push(Reverse((ordered(d + w), m)));
            }
        }
    }
    dist
}

/// Non-negative floats order the same as their bit patterns.
fn ordered(x: f64) -> u64 {
    x.to_bits()
}

#[test]
fn empty_map_gives_empty_graph() {
    let m = BevMap::new(10, 10, RES, default_free_space());
    assert!(gvd_of(&m).is_empty());
}

#[test]
fn corridor_skeleton_is_centerline_path() {
    // Free rows 1..=5, open to unknown at both ends.
    let rows: Vec<String> = (0..7)
        .map(|y| {
            (0..40)
                .map(|x| {
                    if x < 2 || x > 37 {
                        '?'
                    } else if y == 0 || y == 6 {
                        '#'
                    } else {
                        '.'
                    }
                })
                .collect()
        })
        .collect();
    let g = gvd_of(&ascii_map(&rows));
    check_simple(&g);
    assert_eq!(label_count(&g.components), 1);
    let hist = degree_histogram(&g);
    assert_eq!(hist.get(&1), Some(&2), "{hist:?}");
    assert!(hist.keys().all(|d| *d <= 2));
    for n in g.nodes() {
        if (8..32).contains(&n.cell.x) {
            assert_eq!(n.cell.y, 3);
            assert!((n.clearance - 3.0 * RES).abs() < 1e-12);
        }
    }
}

#[test]
fn plus_junction_has_one_branch_node() {
    // Arms 5 cells wide, crossing at the center of a 41x41 map.
    let rows = paint(41, 41, |x, y| !((18..=22).contains(&x) || (18..=22).contains(&y)));
    let g = gvd_of(&ascii_map(&rows));
    check_simple(&g);
    let branch: Vec<&VNode> = g.nodes().filter(|n| g.degree(n.id) >= 3).collect();
    assert_eq!(branch.len(), 1, "{:?}", degree_histogram(&g));
    let c = branch[0].cell;
    assert!((c.x - 20).abs() <= 1 && (c.y - 20).abs() <= 1);
}

#[test]
fn skeleton_avoids_obstacles_and_unknown() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let rows = paint(30, 30, |_, _| false);
        let mut m = ascii_map(&rows);
        for _ in 0..120 {
            let c = Cell::new(rng.random_range(0..30), rng.random_range(0..30));
            if rng.random_bool(0.5) {
                m.set(c, Occupancy::Occupied, Some("wall"));
            } else {
                m.set(c, Occupancy::Unknown, None);
            }
        }
        let g = gvd_of(&m);
        check_simple(&g);
        for n in g.nodes() {
            assert_eq!(m.state(n.cell), Occupancy::Free);
        }
    }
}

fn line_graph(weights: &[f64]) -> VoronoiGraph {
    let mut g = VoronoiGraph::new();
    let mut x = 0.0;
    let mut prev = g.add_node(Point::new(0.0, 0.0), Cell::new(0, 0), 1.0);
    for (i, w) in weights.iter().enumerate() {
        x += w;
        let n = g.add_node(Point::new(x, 0.0), Cell::new(i as i32 + 1, 0), 1.0);
        g.add_edge(prev, n, *w, Vec::new());
        prev = n;
    }
    g.components = connected_components(&g);
    g
}

#[test]
fn sparsify_path_of_three() {
    let g = line_graph(&[0.3, 0.4]);
    let s = sparsify(&g, 1.0);
    assert_eq!(s.node_ids().collect::<Vec<_>>(), vec![0, 2]);
    let e = s.edge(0, 2).unwrap();
    assert!((e.weight - 0.7).abs() < 1e-12);
    assert_eq!(e.polyline.len(), 3);
}

#[test]
fn sparsify_zero_threshold_is_identity() {
    let (m, _) = two_rooms();
    let g = gvd_of(&m);
    let s = sparsify(&g, 0.0);
    assert_eq!(s.node_count(), g.node_count());
    assert_eq!(s.edge_count(), g.edge_count());
}

#[test]
fn sparsify_skips_parallel_edges() {
    // Triangle 0-1-2 plus 1-2 direct: contracting node 0 would duplicate (1,2).
    let mut g = VoronoiGraph::new();
    for i in 0..3 {
        g.add_node(Point::new(i as f64, 0.0), Cell::new(i, 0), 1.0);
    }
    g.add_edge(0, 1, 0.2, Vec::new());
    g.add_edge(0, 2, 0.2, Vec::new());
    g.add_edge(1, 2, 0.2, Vec::new());
    let s = sparsify(&g, 1.0);
    assert_eq!(s.node_count(), 3);
    assert_eq!(s.edge_count(), 3);
}

#[test]
fn sparsify_chains_accumulate_up_to_threshold() {
    let g = line_graph(&[0.2; 10]);
    let s = sparsify(&g, 1.0);
    check_simple(&s);
    // Every surviving interior node sits where the accumulated weight reached c.
    for id in s.node_ids() {
        if s.degree(id) == 2 {
            let w: f64 = s.neighbors(id).map(|(_, w)| w).sum();
            assert!(w >= 1.0 - 1e-9);
        }
    }
    let d = dijkstra(&s, 0);
    assert!((d[&10] - 2.0).abs() < 1e-9);
}

#[test]
fn sparsify_preserves_metric_on_random_mazes() {
    for seed in 0..5 {
        let m = crate::fixtures::maze_map(seed, 8, 6);
        let g = gvd_of(&m);
        let s = sparsify(&g, DEFAULT_SPARSIFY_C);
        check_simple(&s);
        assert!(s.node_count() < g.node_count());
        assert_eq!(label_count(&s.components), label_count(&g.components));
        let survivors: Vec<NodeId> = s.node_ids().collect();
        for &a in survivors.iter().step_by(3) {
            let before = dijkstra(&g, a);
            let after = dijkstra(&s, a);
            for &b in &survivors {
                match (before.get(&b), after.get(&b)) {
                    (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9, "{a}->{b}: {x} vs {y}"),
                    (None, None) => {}
                    other => panic!("reachability changed for {a}->{b}: {other:?}"),
                }
            }
        }
    }
}

#[test]
fn kernel_for_standard_door() {
    let door = DoorSpec {
        id: "d".into(),
        center: Cell::new(16, 10),
        length_cells: 12,
        orientation: Orientation::Horizontal,
        state: DoorState::Open,
        bbox: CellRect::new(10, 10, 21, 11),
    };
    let k = &build_door_kernels(std::slice::from_ref(&door), RES)[0];
    assert!((k.sigma_major - 0.45).abs() < 1e-12);
    assert_eq!(k.sigma_minor, SIGMA_MINOR_FLOOR_M);
    assert_eq!(k.axis, Point::new(1.0, 0.0));
    assert_eq!(k.center, Point::new(16.0 * RES, 11.0 * RES));

    let mut other = door.clone();
    other.bbox = CellRect::new(40, 30, 51, 30);
    let k2 = &build_door_kernels(&[other], RES)[0];
    assert_eq!(k2.sigma_minor, SIGMA_MINOR_FLOOR_M);
    assert_eq!(k2.sigma_major, k.sigma_major);
    assert_eq!(k2.axis, k.axis);
}

#[test]
fn perpendicular_crossing_and_far_edges() {
    let k = DoorKernel {
        door_id: "d".into(),
        center: Point::new(2.0, 2.0),
        axis: Point::new(1.0, 0.0),
        sigma_major: 0.45,
        sigma_minor: 0.15,
    };
    let ks = [k.clone()];
    let tau = default_tau(&ks);
    assert!((tau - 0.5 * 0.15 * (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    // A 2 m edge straight through the center captures essentially the whole crossing integral.
    let through = [Point::new(2.0, 1.0), Point::new(2.0, 3.0)];
    let i = polyline_integral(&ks, &through, RES / 4.0);
    assert!((i - k.crossing_integral()).abs() < 1e-6);
    assert!(i > tau);
    // Ending one cell past the midline still exceeds the half-integral threshold.
    let half = [Point::new(2.0, 1.0), Point::new(2.0, 2.0 + RES / 2.0)];
    assert!(polyline_integral(&ks, &half, RES / 4.0) > tau);
    // Parallel to the opening, five major sigmas off to the side.
    let far = [Point::new(0.0, 2.0 + 5.0 * 0.45), Point::new(4.0, 2.0 + 5.0 * 0.45)];
    assert!(polyline_integral(&ks, &far, RES / 4.0) < 1e-6);
}

#[test]
fn two_rooms_separate_into_two_regions() {
    let (m, door) = two_rooms();
    let g = sparsify(&gvd_of(&m), DEFAULT_SPARSIFY_C);
    assert_eq!(label_count(&g.components), 1);
    let ks = build_door_kernels(&[door], RES);
    let (sep, cut) = separate_regions(&g, &ks, default_tau(&ks), RES / 4.0);
    assert_eq!(cut.len(), 1, "{cut:?}");
    assert_eq!(label_count(&sep.regions), 2);
    assert_eq!(connected_components(&sep), sep.regions);
    assert_eq!(sep.components, g.components);
    // Left room nodes and right room nodes land in different regions.
    for n in sep.nodes() {
        let side = if n.position.x < 29.0 * RES { 0 } else { 1 };
        let l = sep.regions[&n.id];
        let left_label = sep.regions[&sep.node_ids().next().unwrap()];
        assert_eq!(side == 0, l == left_label, "node {} at {:?}", n.id, n.cell);
    }
}

#[test]
fn component_basics() {
    let g = line_graph(&[0.1, 0.1, 0.1]);
    assert_eq!(label_count(&connected_components(&g)), 1);
    let mut e = VoronoiGraph::new();
    for i in 0..3 {
        e.add_node(Point::new(i as f64, 0.0), Cell::new(i, 0), 1.0);
    }
    let l = connected_components(&e);
    assert_eq!(l.values().copied().collect::<Vec<_>>(), vec![0, 1, 2]);
}

#[test]
fn closest_node_rules() {
    let mut g = VoronoiGraph::new();
    g.add_node(Point::new(0.0, 0.0), Cell::new(0, 0), 1.0);
    g.add_node(Point::new(2.0, 0.0), Cell::new(1, 0), 1.0);
    g.add_node(Point::new(10.0, 0.0), Cell::new(2, 0), 1.0);
    g.add_edge(0, 1, 2.0, Vec::new());
    g.components = connected_components(&g);
    assert_eq!(closest_node(&g, Point::new(2.0, 0.0), None), Some(1));
    assert_eq!(closest_node(&g, Point::new(1.0, 0.0), None), Some(0));
    assert_eq!(closest_node(&g, Point::new(1.0, 0.0), Some((&g.components, 1))), Some(2));
    assert_eq!(closest_node(&g, Point::new(1.0, 0.0), Some((&g.components, 7))), None);
    assert_eq!(closest_node(&VoronoiGraph::new(), Point::new(0.0, 0.0), None), None);
}

#[test]
fn edge_list_format() {
    let mut g = line_graph(&[0.5]);
    g.regions = connected_components(&g);
    let s = edge_list(&g);
    assert_eq!(
        s,
        "node 0 0.000000 0.000000 1.000000\n\
         node 1 0.500000 0.000000 1.000000\n\
         edge 0 1 0.500000\n\
         region 0 0\n\
         region 1 0\n"
    );
}

fn random_graph(seed: u64, n: u32, extra: usize) -> VoronoiGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = VoronoiGraph::new();
    for i in 0..n {
        g.add_node(
            Point::new(rng.random_range(0.0..0.6), rng.random_range(0.0..0.6)),
            Cell::new(i as i32, 0),
            1.0,
        );
    }
    let link = |g: &mut VoronoiGraph, a: NodeId, b: NodeId| {
        let w = g.node(a).unwrap().position.dist(g.node(b).unwrap().position);
        g.add_edge(a, b, w, Vec::new());
    };
    // Random tree plus a few chords, weighted by straight-line length.
    for i in 1..n {
        let j = rng.random_range(0..i);
        link(&mut g, i, j);
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        link(&mut g, a, b);
    }
    for _ in 0..(n / 10) {
        let a = rng.random_range(0..n);
        let nb: Vec<NodeId> = g.neighbors(a).map(|(m, _)| m).collect();
        if let Some(b) = nb.first() {
            g.remove_edge(a, *b);
        }
    }
    g.components = connected_components(&g);
    g
}

proptest! {
    #[test]
    fn sparsify_invariants(seed in 0u64..10_000, n in 2u32..60, extra in 0usize..20, c in 0.0f64..3.0) {
        let g = random_graph(seed, n, extra);
        let s = sparsify(&g, c);
        check_simple(&s);
        prop_assert_eq!(label_count(&s.components), label_count(&g.components));
        // Soundness: any remaining degree-2 node is either too heavy or guarded.
        for id in s.node_ids() {
            if s.degree(id) == 2 {
                let nb: Vec<(NodeId, f64)> = s.neighbors(id).collect();
                let legal = !s.has_edge(nb[0].0, nb[1].0);
                prop_assert!(nb[0].1 + nb[1].1 >= c || !legal || g.degree(id) != 2);
            }
        }
        let survivors: Vec<NodeId> = s.node_ids().collect();
        if let Some(&a) = survivors.first() {
            let before = dijkstra(&g, a);
            let after = dijkstra(&s, a);
            for b in &survivors {
                match (before.get(b), after.get(b)) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
                    (None, None) => {}
                    _ => prop_assert!(false, "reachability changed"),
                }
            }
        }
    }
}
