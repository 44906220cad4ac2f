use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use super::episode::filter_scene;
use super::*;
use crate::fixtures::bundled_file;
use crate::geom::Cell;
use crate::gridworld::{load_scene, DoorState, SceneSpec, SimState};
use crate::language::{
    LlmBackend, LlmError, LlmRequest, Message, OracleScript, Purpose, Recorder, RulesBackend,
    Subpolicy, SubpolicyCall,
};
use crate::scenegraph::{prune_unreachable, Layers, SceneGraph};
use crate::taskspec::{parse_task, TaskSpec, Termination};

fn two_room() -> SimState {
    let spec: SceneSpec = serde_json::from_str(bundled_file("scenes/two_room.json").unwrap()).unwrap();
    let mut sim = load_scene(&spec, 0).unwrap();
    sim.robot.position = Cell::new(10, 20).center(sim.resolution);
    sim
}

fn task_src(goal: &str) -> TaskSpec {
    parse_task(&format!(
        r#"{{"name": "t", "description_template": "make sure {goal}", "goal_conditions": ["{goal}"]}}"#
    ))
    .unwrap()
}

/// Rules for everything except planning, which follows a fixed script (last line repeats).
struct Scripted {
    plan: Vec<&'static str>,
    filter: Option<&'static str>,
    plan_calls: AtomicUsize,
    filter_calls: AtomicUsize,
    plan_prompts: Mutex<Vec<Vec<Message>>>,
}

impl Scripted {
    fn new(plan: Vec<&'static str>) -> Self {
        Self {
            plan,
            filter: None,
            plan_calls: AtomicUsize::new(0),
            filter_calls: AtomicUsize::new(0),
            plan_prompts: Mutex::new(Vec::new()),
        }
    }
}

impl LlmBackend for Scripted {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        match request.purpose {
            Purpose::Plan => {
                let i = self.plan_calls.fetch_add(1, Ordering::SeqCst);
                self.plan_prompts.lock().unwrap().push(request.messages.clone());
                Ok(self.plan[i.min(self.plan.len() - 1)].to_string())
            }
            Purpose::Filter => {
                self.filter_calls.fetch_add(1, Ordering::SeqCst);
                match self.filter {
                    Some(r) => Ok(r.to_string()),
                    None => RulesBackend.complete(request),
                }
            }
            Purpose::Classify => RulesBackend.complete(request),
        }
    }

    fn name(&self) -> &str {
        "scripted"
    }
}

#[test]
fn satisfied_task_ends_at_first_step() {
    let t = task_src("ontop(apple_1, table_1)");
    let out = run_episode(two_room(), &t, 0, &RulesBackend, &AgentConfig::default());
    assert_eq!(out.record.terminated_by, Termination::DoneCall);
    assert_eq!(out.record.steps, 1);
    assert!(out.record.all_satisfied());
    assert_eq!(out.log[0].subpolicy, "done");
}

#[test]
fn never_done_hits_step_cap() {
    let b = Scripted::new(vec!["explore(kitchen)"]);
    let t = task_src("open(fridge_1)");
    let out = run_episode(two_room(), &t, 0, &b, &AgentConfig::default());
    assert_eq!(out.record.terminated_by, Termination::StepCap);
    assert_eq!(out.record.steps, 50);
    assert_eq!(out.log.len(), 50);
    assert!(!out.state.done_called);
}

#[test]
fn dithering_after_success_hits_post_completion_cap() {
    let b = Scripted::new(vec!["navigate(kitchen, fridge_A)", "navigate(kitchen, table_A)"]);
    let t = task_src("ontop(apple_1, table_1)");
    let out = run_episode(two_room(), &t, 0, &b, &AgentConfig::default());
    assert_eq!(out.record.terminated_by, Termination::PostCompletionCap);
    assert_eq!(out.record.steps, 5);
    assert!(out.record.all_satisfied());

    // Completing the goal mid-episode starts the count at that step.
    let b = Scripted::new(vec!["go_to_and_open(kitchen, fridge_A)", "navigate(kitchen, table_A)"]);
    let out = run_episode(two_room(), &task_src("open(fridge_1)"), 0, &b, &AgentConfig::default());
    assert_eq!(out.record.terminated_by, Termination::PostCompletionCap);
    assert!(out.log[0].success, "{}", out.log[0].feedback);
    assert_eq!(out.record.steps, 6);
    assert_eq!(out.state.post_completion_steps, 5);
}

#[test]
fn unparseable_plans_fault_after_retries() {
    let b = Scripted::new(vec!["I would rather not."]);
    let out = run_episode(two_room(), &task_src("open(fridge_1)"), 0, &b, &AgentConfig::default());
    assert_eq!(out.record.terminated_by, Termination::Fault);
    assert_eq!(b.plan_calls.load(Ordering::SeqCst), 3);
    assert_eq!(out.record.steps, 0);
    assert!(out.record.fault.as_deref().unwrap().contains("rather not"));
}

#[test]
fn garbage_filter_falls_back_to_unfiltered() {
    let sim = two_room();
    let (_, scene) = omniscient_scene(&sim, &GeometryParams::default(), &RulesBackend);
    let pruned = prune_unreachable(&scene);
    let mut b = Scripted::new(vec!["done()"]);
    b.filter = Some("no idea what you mean");
    let view = filter_scene(&pruned, &task_src("open(fridge_1)"), &b, &AgentConfig::default())
        .unwrap_or_else(|e| panic!("{e}"));
    assert_eq!(view, pruned);
    assert_eq!(b.filter_calls.load(Ordering::SeqCst), 2);

    b.filter = Some("kitchen: fridge_A");
    let view = filter_scene(&pruned, &task_src("open(fridge_1)"), &b, &AgentConfig::default())
        .unwrap_or_else(|e| panic!("{e}"));
    assert_eq!(view.objects.keys().collect::<Vec<_>>(), ["fridge_A"]);
}

#[test]
fn failures_stay_in_the_prompt() {
    let b = Scripted::new(vec!["navigate(kitchen, unicorn_A)", "done()"]);
    let out = run_episode(two_room(), &task_src("open(fridge_1)"), 0, &b, &AgentConfig::default());
    assert_eq!(out.record.terminated_by, Termination::DoneCall);
    assert_eq!(out.log[0].feedback, FEEDBACK_UNKNOWN);
    assert_eq!(out.state.failed_actions().count(), 1);
    let prompts = b.plan_prompts.lock().unwrap();
    let second = &prompts[1][1].content;
    let failed = second.split("Failed actions:").nth(1).unwrap();
    assert!(failed.contains("1. navigate(kitchen, unicorn_A) -> failed: unknown target"), "{second}");
}

/// A workspace-backed harness for calling subpolicies directly.
struct Rig {
    sim: SimState,
    per: Perception,
    blacklist: FrontierBlacklist,
}

impl Rig {
    fn call(&mut self, call: SubpolicyCall) -> Outcome {
        let geometry = build_geometry(&self.per.map, &self.per.tracker.doors(), &GeometryParams::default());
        let scene = self.scene(&geometry);
        let mut ws = Workspace {
            sim: &mut self.sim,
            per: &mut self.per,
            geometry: &geometry,
            scene: &scene,
            blacklist: &mut self.blacklist,
        };
        execute_subpolicy(&mut ws, &call)
    }

    fn scene(&mut self, geometry: &Geometry) -> SceneGraph {
        self.per.tracker.update(
            &Layers {
                map: &self.per.map,
                sparse: &geometry.sparse,
                separated: &geometry.separated,
                frontiers: &geometry.frontiers,
                robot: &self.sim.robot,
            },
            &RulesBackend,
        )
    }
}

#[test]
fn explore_fully_known_region() {
    let sim = two_room();
    let mut rig = Rig {
        per: Perception::omniscient(&sim),
        sim,
        blacklist: FrontierBlacklist::default(),
    };
    let out = rig.call(SubpolicyCall::explore("kitchen"));
    assert!(!out.success);
    assert_eq!(out.feedback, "region fully explored");
    assert_eq!(rig.call(SubpolicyCall::explore("attic")).feedback, FEEDBACK_UNKNOWN);
}

#[test]
fn closed_door_blocks_until_opened() {
    let mut sim = two_room();
    sim.doors[0].state = DoorState::Closed;
    let mut rig = Rig {
        per: Perception::omniscient(&sim),
        sim,
        blacklist: FrontierBlacklist::default(),
    };
    let sofa = rig.per.tracker.instance_of("sofa_1").unwrap().to_string();
    let door = rig.per.tracker.instance_of("door_1").unwrap().to_string();
    let blocked = rig.call(SubpolicyCall::on(Subpolicy::Navigate, "living room", &sofa));
    assert!(!blocked.success);
    assert_eq!(blocked.feedback, FEEDBACK_NO_PATH);

    let opened = rig.call(SubpolicyCall::on(Subpolicy::GoToAndOpen, "kitchen", &door));
    assert!(opened.success, "{}", opened.feedback);
    assert_eq!(rig.sim.doors[0].state, DoorState::Open);

    let through = rig.call(SubpolicyCall::on(Subpolicy::Navigate, "living room", &sofa));
    assert!(through.success, "{}", through.feedback);
    assert_eq!(rig.sim.room_of(rig.sim.robot_cell()), Some("living_room"));
}

#[test]
fn grasp_and_place_round_trip() {
    let sim = two_room();
    let mut rig = Rig {
        per: Perception::omniscient(&sim),
        sim,
        blacklist: FrontierBlacklist::default(),
    };
    let apple = rig.per.tracker.instance_of("apple_1").unwrap().to_string();
    let counter = rig.per.tracker.instance_of("counter_1").unwrap().to_string();
    let g = rig.call(SubpolicyCall::on(Subpolicy::GoToAndGrasp, "kitchen", &apple));
    assert!(g.success, "{}", g.feedback);
    assert_eq!(rig.sim.robot.gripper.as_deref(), Some("apple_1"));
    let again = rig.call(SubpolicyCall::on(Subpolicy::GoToAndGrasp, "kitchen", &counter));
    assert!(!again.success);
    let p = rig.call(SubpolicyCall::on(Subpolicy::GoToAndPlaceOntop, "kitchen", &counter));
    assert!(p.success, "{}", p.feedback);
    assert_eq!(rig.sim.objects["apple_1"].on_top_of.as_deref(), Some("counter_1"));
}

fn bundled(task: &str) -> Episode {
    crate::fixtures::bundled_suite()
        .into_iter()
        .find(|e| e.task.name == task)
        .unwrap()
}

#[test]
fn recorded_run_replays_byte_identical() {
    let ep = bundled("store_beer");
    let config = AgentConfig::default();
    let recorder = Recorder::new(Arc::new(RulesBackend));
    let first = ep.run(&recorder, &config);
    assert!(first.record.all_satisfied());
    let oracle = OracleScript::new(recorder.entries());
    let second = ep.run(&oracle, &config);
    assert_eq!(first.log_jsonl(), second.log_jsonl());
    assert_eq!(first.record, second.record);
}

#[test]
fn frontier_blacklist_covers_majority() {
    let f = crate::mapping::Frontier {
        cells: (0..4).map(|x| Cell::new(x, 0)).collect(),
        centroid: Cell::new(1, 0),
        region: None,
    };
    let mut b = FrontierBlacklist::default();
    assert!(b.is_empty() && !b.covers(&f));
    b.add(&crate::mapping::Frontier {
        cells: vec![Cell::new(0, 0), Cell::new(1, 0)],
        centroid: Cell::new(0, 0),
        region: None,
    });
    assert!(!b.covers(&f));
    b.add(&crate::mapping::Frontier {
        cells: vec![Cell::new(2, 0)],
        centroid: Cell::new(2, 0),
        region: None,
    });
    assert!(b.covers(&f));
}

#[test]
fn config_defaults_and_partial_json() {
    let c: AgentConfig = serde_json::from_str(r#"{"max_steps": 7}"#).unwrap();
    assert_eq!(c.max_steps, 7);
    assert_eq!(c.post_completion_cap, AgentConfig::default().post_completion_cap);
    assert_eq!(AgentConfig::default().max_steps, 50);
    assert_eq!(AgentConfig::default().post_completion_cap, 5);
}
