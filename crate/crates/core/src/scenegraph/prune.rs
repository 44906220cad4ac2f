use super::types::SceneGraph;

/// The part of the graph in the robot's Voronoi component. The input is left intact,
/// so pruned regions come back as soon as a later rebuild connects them.
pub fn prune_unreachable(graph: &SceneGraph) -> SceneGraph {
    let Some(comp) = graph.robot_component else {
        return graph.clone();
    };
    let mut out = graph.clone();
    out.regions.retain(|_, r| r.component == comp);
    out.objects.retain(|_, o| graph.regions.get(&o.region).is_none_or(|r| r.component == comp));
    out.frontiers.retain(|f| out.regions.contains_key(&f.region));
    out
}
