use std::collections::BTreeSet;
use std::fmt::Write;

use crate::scenegraph::{classify_rules, ObjectNode, RelationKind, SceneGraph};
use crate::taskspec::{GoalCondition, Predicate, TaskSpec};

use super::backend::{Context, HistoryEntry, LlmBackend, LlmError, LlmRequest, RobotSummary};
use super::call::{Subpolicy, SubpolicyCall};

/// Deterministic stand-in for a language model, driven by the structured context.
#[derive(Clone, Copy, Debug, Default)]
pub struct RulesBackend;

impl LlmBackend for RulesBackend {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        match &request.context {
            Some(Context::Classify { categories }) => Ok(classify_rules(categories).to_string()),
            Some(Context::Filter { scene, task }) => Ok(rules_filter(scene, task)),
            Some(Context::Plan {
                scene,
                task,
                robot,
                history,
            }) => Ok(rules_plan(scene, task, robot, history).to_string()),
            None => Err(LlmError::Unsupported("request without structured context".into())),
        }
    }

    fn name(&self) -> &str {
        "rules"
    }
}

fn mentioned(text: &str, category: &str) -> bool {
    let words: Vec<String> = text
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric() && c != '_')
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect();
    let phrase: Vec<&str> = category.split('_').collect();
    let n = phrase.len();
    words.windows(n).any(|w| {
        w.iter().zip(&phrase).enumerate().all(|(i, (a, b))| {
            a == b || (i == n - 1 && (a.strip_suffix('s') == Some(b) || a.strip_suffix("es") == Some(b)))
        })
    }) || words.iter().any(|w| w == category)
}

/// Categories the goals depend on, as far as the scene reveals them.
pub fn goal_categories(scene: &SceneGraph, task: &TaskSpec) -> BTreeSet<String> {
    let mut cats = task.relevant_categories.clone();
    for name in task.named_ids() {
        if let Some(o) = scene.object_by_name(&name) {
            cats.insert(o.category.clone());
        }
    }
    cats
}

/// Keeps goal categories, categories named in the task text, named objects and doors.
pub fn rules_filter(scene: &SceneGraph, task: &TaskSpec) -> String {
    let cats = goal_categories(scene, task);
    let names = task.named_ids();
    let text = task.description();
    let keep = |o: &ObjectNode| {
        o.is_door
            || o.held
            || cats.contains(&o.category)
            || names.contains(&o.name)
            || mentioned(&text, &o.category)
    };
    let mut out = String::new();
    for r in scene.regions.values() {
        let ids: Vec<&str> = scene
            .objects_in(r.id)
            .filter(|o| keep(o))
            .map(|o| o.id.as_str())
            .collect();
        if !ids.is_empty() || Some(r.id) == scene.robot_region {
            writeln!(out, "{}: {}", r.name, ids.join(", ")).unwrap();
        }
    }
    if out.is_empty() {
        out.push_str("none:\n");
    }
    out
}

fn related(o: &ObjectNode, kind: RelationKind, target: &str) -> bool {
    o.relations.iter().any(|r| r.kind == kind && r.target == target)
}

fn has_state(o: &ObjectNode, state: &str) -> bool {
    o.state.as_deref() == Some(state)
}

fn relation_kind(p: Predicate) -> Option<RelationKind> {
    match p {
        Predicate::Inside => Some(RelationKind::Inside),
        Predicate::Ontop => Some(RelationKind::Ontop),
        _ => None,
    }
}

struct Beliefs<'a> {
    /// (object, state it must reach).
    unary: Vec<(&'a ObjectNode, Predicate)>,
    /// (object, relation, target).
    moves: Vec<(&'a ObjectNode, Predicate, &'a ObjectNode)>,
    /// Some referenced object has not been seen.
    missing: bool,
    quantified: bool,
}

fn beliefs<'a>(scene: &'a SceneGraph, task: &TaskSpec) -> Beliefs<'a> {
    let mut b = Beliefs {
        unary: Vec::new(),
        moves: Vec::new(),
        missing: false,
        quantified: false,
    };
    let check = |b: &mut Beliefs<'a>, o: &'a ObjectNode, pred: Predicate, target: Option<&'a ObjectNode>| {
        match (relation_kind(pred), target) {
            (Some(k), Some(t)) => {
                if !related(o, k, &t.id) {
                    b.moves.push((o, pred, t));
                }
            }
            (Some(_), None) => b.missing = true,
            (None, _) => {
                let want = if pred == Predicate::Open { "open" } else { "closed" };
                if !has_state(o, want) {
                    b.unary.push((o, pred));
                }
            }
        }
    };
    for g in &task.goal_conditions {
        match g {
            GoalCondition::Ground { pred, args } => {
                let Some(o) = scene.object_by_name(&args[0]) else {
                    b.missing = true;
                    continue;
                };
                let t = args.get(1).map(|a| scene.object_by_name(a));
                if let Some(None) = t {
                    b.missing = true;
                    continue;
                }
                check(&mut b, o, *pred, t.flatten());
            }
            GoalCondition::ForAllCategory {
                category,
                pred,
                target,
            } => {
                b.quantified = true;
                let t = target.as_ref().map(|a| scene.object_by_name(a));
                if let Some(None) = t {
                    b.missing = true;
                    continue;
                }
                for o in scene.objects.values().filter(|o| &o.category == category && !o.is_door) {
                    check(&mut b, o, *pred, t.flatten());
                }
            }
        }
    }
    b
}

/// Greedy achiever. Explores first on quantified goals, opens a container before
/// fetching what goes in it, opens closed doors when nothing else is left to try, and
/// never repeats a call that has already failed twice.
pub fn rules_plan(
    scene: &SceneGraph,
    task: &TaskSpec,
    robot: &RobotSummary,
    history: &[HistoryEntry],
) -> SubpolicyCall {
    let failures = |c: &SubpolicyCall| history.iter().filter(|h| !h.success && &h.call == c).count();
    let succeeded = |c: &SubpolicyCall| history.iter().any(|h| h.success && &h.call == c);
    let room = |o: &ObjectNode| scene.region_name(o.region);
    let b = beliefs(scene, task);

    let mut explorable: Vec<u32> = scene
        .regions
        .values()
        .filter(|r| r.frontier_count > 0)
        .map(|r| r.id)
        .collect();
    explorable.sort_by_key(|id| (Some(*id) != scene.robot_region, *id));
    let explore_calls: Vec<SubpolicyCall> = explorable
        .iter()
        .map(|id| SubpolicyCall::explore(scene.region_name(*id)))
        .collect();

    let mut plan: Vec<SubpolicyCall> = Vec::new();
    let holding = robot.holding.as_ref().and_then(|h| scene.objects.get(h));

    if let Some(h) = holding {
        for (o, pred, t) in &b.moves {
            if o.id != h.id {
                continue;
            }
            if *pred == Predicate::Inside && has_state(t, "closed") {
                plan.push(SubpolicyCall::on(Subpolicy::GoToAndPlaceOntop, room(t), &t.id));
            } else {
                let verb = if *pred == Predicate::Inside {
                    Subpolicy::GoToAndPlaceInside
                } else {
                    Subpolicy::GoToAndPlaceOntop
                };
                plan.push(SubpolicyCall::on(verb, room(t), &t.id));
            }
        }
        if plan.is_empty() {
            // Holding something the goals do not need: set it down nearby.
            if let Some(s) = scene
                .objects
                .values()
                .filter(|o| !o.is_door && !o.held && Some(o.region) == scene.robot_region)
                .chain(scene.objects.values().filter(|o| !o.is_door && !o.held))
                .next()
            {
                plan.push(SubpolicyCall::on(Subpolicy::GoToAndPlaceOntop, room(s), &s.id));
            }
        }
    } else {
        if b.quantified {
            plan.extend(explore_calls.iter().cloned());
        }
        for (o, pred) in &b.unary {
            let verb = if *pred == Predicate::Open {
                Subpolicy::GoToAndOpen
            } else {
                Subpolicy::GoToAndClose
            };
            plan.push(SubpolicyCall::on(verb, room(o), &o.id));
        }
        let mut moves = b.moves.clone();
        moves.sort_by_key(|(o, _, _)| (Some(o.region) != scene.robot_region, o.id.clone()));
        for (o, pred, t) in moves {
            if pred == Predicate::Inside && has_state(t, "closed") {
                plan.push(SubpolicyCall::on(Subpolicy::GoToAndOpen, room(t), &t.id));
            }
            for r in &o.relations {
                if r.kind == RelationKind::Inside {
                    if let Some(c) = scene.objects.get(&r.target) {
                        if has_state(c, "closed") {
                            plan.push(SubpolicyCall::on(Subpolicy::GoToAndOpen, room(c), &c.id));
                        }
                    }
                }
            }
            plan.push(SubpolicyCall::on(Subpolicy::GoToAndGrasp, room(o), &o.id));
        }
        let searching = b.missing || b.quantified;
        if searching {
            plan.extend(explore_calls.iter().cloned());
            // Closed doors may hide the rest of the scene.
            for o in scene.objects.values().filter(|o| o.is_door && has_state(o, "closed")) {
                plan.push(SubpolicyCall::on(Subpolicy::GoToAndOpen, room(o), &o.id));
            }
        }
        if b.missing {
            // Look inside closed containers not opened before.
            for o in scene
                .objects
                .values()
                .filter(|o| o.articulated && !o.is_door && has_state(o, "closed"))
            {
                let c = SubpolicyCall::on(Subpolicy::GoToAndOpen, room(o), &o.id);
                if !succeeded(&c) {
                    plan.push(c);
                }
            }
        }
        if b.unary.is_empty() && b.moves.is_empty() && !b.missing {
            plan.push(SubpolicyCall::done());
        }
    }
    plan.into_iter()
        .find(|c| failures(c) < 2)
        .unwrap_or_else(SubpolicyCall::done)
}
