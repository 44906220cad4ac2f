use std::collections::BTreeSet;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::scenegraph::{ObjectNode, RelationKind, SceneGraph};

use super::backend::{HistoryEntry, Message, RobotSummary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSection {
    pub region: u32,
    pub header: String,
    pub object_lines: Vec<String>,
    pub unexplored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenePrompt {
    pub sections: Vec<RegionSection>,
}

impl ScenePrompt {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for sec in &self.sections {
            writeln!(s, "{}:", sec.header).unwrap();
            for l in &sec.object_lines {
                writeln!(s, "  - {l}").unwrap();
            }
            if sec.unexplored {
                writeln!(s, "  - unexplored area").unwrap();
            }
        }
        s
    }
}

fn attribute_list(o: &ObjectNode) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(st) = &o.state {
        out.push(st.clone());
    }
    out.push(format!("name: {}", o.name));
    for (k, v) in &o.attributes {
        let v = match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        out.push(format!("{k}: {v}"));
    }
    out
}

fn object_line(o: &ObjectNode, attributes: bool, relations: bool) -> String {
    let mut s = o.id.clone();
    if attributes {
        write!(s, " [{}]", attribute_list(o).join(", ")).unwrap();
    }
    if relations && !o.relations.is_empty() {
        let rels: Vec<String> = o
            .relations
            .iter()
            .map(|r| {
                let k = match r.kind {
                    RelationKind::Inside => "inside",
                    RelationKind::Ontop => "ontop",
                };
                format!("{k} {}", r.target)
            })
            .collect();
        write!(s, " ({})", rels.join("; ")).unwrap();
    }
    s
}

/// Regions in id order, objects in instance-id order. Held objects are left out; the
/// robot status reports them.
pub fn serialize_scene(graph: &SceneGraph, include_attributes: bool, include_relations: bool) -> ScenePrompt {
    let sections = graph
        .regions
        .values()
        .map(|r| RegionSection {
            region: r.id,
            header: graph.region_name(r.id),
            object_lines: graph
                .objects_in(r.id)
                .filter(|o| !o.held)
                .map(|o| object_line(o, include_attributes, include_relations))
                .collect(),
            unexplored: r.frontier_count > 0,
        })
        .collect();
    ScenePrompt { sections }
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("task text is empty")]
    EmptyTask,
}

const FILTER_SYSTEM: &str = "You help a household robot decide what matters for its task. \
You receive the rooms the robot knows about and the objects seen in each. \
Drop every object that helps neither to carry out the task nor to locate things the task \
needs but the robot has not seen yet. Keep doors and containers that may lead to or hold \
needed objects.\n\
Answer with one line per room, the room name, a colon, then the ids to keep, like:\n\
kitchen: fridge_A, beer_bottle_A\n\
Use only ids from the scene. List a room with nothing after the colon to keep it for exploration.";

pub fn build_filter_prompt(scene: &ScenePrompt, task: &str) -> Result<Vec<Message>, PromptError> {
    if task.trim().is_empty() {
        return Err(PromptError::EmptyTask);
    }
    Ok(vec![
        Message::system(FILTER_SYSTEM),
        Message::user(format!(
            "Scene:\n{}\nTask: {task}\n\nRelevant rooms and objects:",
            scene.text()
        )),
    ])
}

const SKILL_API: &str = "Skills:\n\
- explore(room): go to the closest unexplored area in the room and look around.\n\
- navigate(room, object): drive to the object.\n\
- go_to_and_open(room, object): go to the object and open it.\n\
- go_to_and_close(room, object): go to the object and close it.\n\
- go_to_and_grasp(room, object): go to the object and pick it up.\n\
- go_to_and_place_inside(room, object): go to the object and put the held object inside it.\n\
- go_to_and_place_ontop(room, object): go to the object and put the held object on top of it.\n\
- done(): the task is complete.";

const PLAN_SYSTEM: &str = "You control a household robot that completes tasks by calling one skill at a time. \
The gripper holds one object at a time. Containers must be open before objects are placed inside. \
Closed doors block the way until opened.";

fn history_line(h: &HistoryEntry) -> String {
    let outcome = if h.success {
        "succeeded".to_string()
    } else if h.feedback.is_empty() {
        "failed".to_string()
    } else {
        format!("failed: {}", h.feedback)
    };
    format!("{}. {} -> {outcome}", h.step, h.call)
}

/// Number of most recent actions shown in the plan prompt.
pub const HISTORY_WINDOW: usize = 5;

pub fn build_plan_prompt(
    scene: &ScenePrompt,
    robot: &RobotSummary,
    task: &str,
    history: &[HistoryEntry],
    feedback: Option<&str>,
) -> Vec<Message> {
    let mut u = String::new();
    writeln!(u, "Task: {task}\n").unwrap();
    writeln!(u, "Scene:\n{}", scene.text()).unwrap();
    writeln!(u, "Robot: in the {}, holding {}.", robot.room, robot.holding.as_deref().unwrap_or("nothing")).unwrap();
    let recent = &history[history.len().saturating_sub(HISTORY_WINDOW)..];
    writeln!(u, "\nPrevious actions:").unwrap();
    if recent.is_empty() {
        writeln!(u, "none").unwrap();
    }
    for h in recent {
        writeln!(u, "{}", history_line(h)).unwrap();
    }
    let failed: Vec<&HistoryEntry> = history.iter().filter(|h| !h.success).collect();
    writeln!(u, "\nFailed actions:").unwrap();
    if failed.is_empty() {
        writeln!(u, "none").unwrap();
    }
    for h in failed {
        writeln!(u, "{}", history_line(h)).unwrap();
    }
    writeln!(u, "\nLast feedback: {}", feedback.filter(|f| !f.is_empty()).unwrap_or("none")).unwrap();
    write!(u, "\nAnswer with the next skill call on the last line, e.g. explore(kitchen).").unwrap();
    vec![
        Message::system(format!("{PLAN_SYSTEM}\n\n{SKILL_API}")),
        Message::user(u),
    ]
}

/// Objects and regions to keep after filtering.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KeepSet {
    pub regions: BTreeSet<u32>,
    pub objects: BTreeSet<String>,
    /// Ids named in the reply that do not exist.
    pub dropped: Vec<String>,
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum FilterParseError {
    #[error("no `room: objects` line in reply")]
    Unparseable,
}

/// Parses `room: id, id` lines. Unknown object ids are dropped (and logged); a known
/// object keeps its own region whatever room the line names.
pub fn parse_filter_response(reply: &str, graph: &SceneGraph) -> Result<KeepSet, FilterParseError> {
    let mut keep = KeepSet::default();
    let mut lines = 0;
    for raw in reply.lines() {
        let line = raw.trim().trim_start_matches(['-', '*']).trim();
        let Some((room, rest)) = line.split_once(':') else {
            continue;
        };
        let room = room.trim().trim_matches('*').trim();
        let region = graph.resolve_region(room);
        let ids: Vec<&str> = rest
            .split(',')
            .map(|s| s.trim().trim_matches(|c| c == '`' || c == '"' || c == '\'' || c == '.'))
            .filter(|s| !s.is_empty() && *s != "none")
            .collect();
        let mut recognized = region.is_some();
        if let Some(r) = region {
            keep.regions.insert(r);
        }
        for id in ids {
            match graph.objects.get(id) {
                Some(o) => {
                    keep.objects.insert(id.to_string());
                    keep.regions.insert(o.region);
                    recognized = true;
                }
                None => {
                    log::info!("filter reply names unknown object {id:?}; dropped");
                    keep.dropped.push(id.to_string());
                }
            }
        }
        if recognized {
            lines += 1;
        }
    }
    if lines == 0 {
        return Err(FilterParseError::Unparseable);
    }
    Ok(keep)
}

/// Subgraph with the kept objects (plus whatever they rest on or in), the kept regions,
/// and every region that still has unexplored area.
pub fn apply_filter(graph: &SceneGraph, keep: &KeepSet) -> SceneGraph {
    let mut objects: BTreeSet<String> = keep.objects.clone();
    loop {
        let extra: Vec<String> = objects
            .iter()
            .filter_map(|id| graph.objects.get(id))
            .flat_map(|o| o.relations.iter().map(|r| r.target.clone()))
            .filter(|t| !objects.contains(t) && graph.objects.contains_key(t))
            .collect();
        if extra.is_empty() {
            break;
        }
        objects.extend(extra);
    }
    if let Some(h) = &graph.holding {
        objects.insert(h.clone());
    }
    let mut regions = keep.regions.clone();
    regions.extend(objects.iter().filter_map(|id| graph.objects.get(id)).map(|o| o.region));
    regions.extend(graph.regions.values().filter(|r| r.frontier_count > 0).map(|r| r.id));
    let mut out = graph.clone();
    out.regions.retain(|id, _| regions.contains(id));
    out.objects
        .retain(|id, o| objects.contains(id) && out.regions.contains_key(&o.region));
    out.frontiers.retain(|f| out.regions.contains_key(&f.region));
    out
}
