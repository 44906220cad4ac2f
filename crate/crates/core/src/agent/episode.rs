use std::collections::BTreeSet;
use std::io::{self, Write};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::gridworld::SimState;
use crate::language::{
    apply_filter, build_filter_prompt, build_plan_prompt, parse_filter_response,
    parse_plan_response, serialize_scene, Context, HistoryEntry, LlmBackend, LlmError, LlmRequest,
    Purpose, RobotSummary, SubpolicyCall,
};
use crate::mapping::Frontier;
use crate::scenegraph::{prune_unreachable, Layers, SceneGraph, LAMBDA};
use crate::taskspec::{evaluate_goals, referenced_objects, EpisodeRecord, TaskSpec, Termination};

use super::geometry::{build_geometry, GeometryParams};
use super::motion::{spin, Perception};
use super::subpolicy::{execute_subpolicy, FrontierBlacklist, Workspace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub max_steps: u32,
    pub post_completion_cap: u32,
    pub lambda: f64,
    pub sparsify_c: f64,
    pub tau: Option<f64>,
    /// Ask the backend to filter the scene every step.
    pub filter: bool,
    pub initial_spin: bool,
    /// Extra attempts after an unparseable plan reply.
    pub plan_retries: u32,
    /// Extra attempts after an unparseable filter reply.
    pub filter_retries: u32,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            max_steps: 50,
            post_completion_cap: 5,
            lambda: LAMBDA,
            sparsify_c: crate::voronoi::DEFAULT_SPARSIFY_C,
            tau: None,
            filter: true,
            initial_spin: true,
            plan_retries: 2,
            filter_retries: 1,
        }
    }
}

/// One line of the episode log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: u32,
    pub prompt_sha256: String,
    pub subpolicy: String,
    pub args: Vec<String>,
    pub success: bool,
    pub feedback: String,
    pub satisfied_flags: Vec<bool>,
    pub robot_room: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AgentState {
    pub step: u32,
    pub history: Vec<HistoryEntry>,
    pub post_completion_steps: u32,
    pub done_called: bool,
}

impl AgentState {
    pub fn failed_actions(&self) -> impl Iterator<Item = &HistoryEntry> + '_ {
        self.history.iter().filter(|h| !h.success)
    }
}

#[derive(Clone, Debug)]
pub struct EpisodeOutcome {
    pub record: EpisodeRecord,
    pub log: Vec<StepLog>,
    pub state: AgentState,
    /// Full scene graph at the last step.
    pub scene: SceneGraph,
}

impl EpisodeOutcome {
    pub fn write_log<W: Write>(&self, mut out: W) -> io::Result<()> {
        for l in &self.log {
            serde_json::to_writer(&mut out, l)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn log_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_log(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

pub(crate) enum Fault {
    Backend(LlmError),
    Unparseable(String),
}

impl std::fmt::Display for Fault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Fault::Backend(e) => write!(f, "{e}"),
            Fault::Unparseable(reply) => write!(f, "no valid skill call in reply: {reply:?}"),
        }
    }
}

pub(crate) fn filter_scene(
    pruned: &SceneGraph,
    task: &TaskSpec,
    backend: &dyn LlmBackend,
    config: &AgentConfig,
) -> Result<SceneGraph, Fault> {
    let messages = build_filter_prompt(&serialize_scene(pruned, true, true), &task.description())
        .expect("task descriptions are non-empty");
    let request = LlmRequest {
        purpose: Purpose::Filter,
        messages,
        context: Some(Context::Filter {
            scene: pruned.clone(),
            task: task.clone(),
        }),
    };
    for _ in 0..=config.filter_retries {
        let reply = backend.complete(&request).map_err(Fault::Backend)?;
        match parse_filter_response(&reply, pruned) {
            Ok(keep) => return Ok(apply_filter(pruned, &keep)),
            Err(e) => warn!("filter reply rejected: {e}"),
        }
    }
    info!("filter failed; planning on the unfiltered scene");
    Ok(pruned.clone())
}

fn plan(
    view: &SceneGraph,
    task: &TaskSpec,
    robot: &RobotSummary,
    history: &[HistoryEntry],
    backend: &dyn LlmBackend,
    config: &AgentConfig,
) -> Result<(SubpolicyCall, String), Fault> {
    let feedback = history.last().map(|h| h.feedback.as_str());
    let messages = build_plan_prompt(
        &serialize_scene(view, true, true),
        robot,
        &task.description(),
        history,
        feedback,
    );
    let request = LlmRequest {
        purpose: Purpose::Plan,
        messages,
        context: Some(Context::Plan {
            scene: view.clone(),
            task: task.clone(),
            robot: robot.clone(),
            history: history.to_vec(),
        }),
    };
    let hash = request.hash();
    let mut last = String::new();
    for _ in 0..=config.plan_retries {
        last = backend.complete(&request).map_err(Fault::Backend)?;
        match parse_plan_response(&last) {
            Ok(call) => return Ok((call, hash)),
            Err(e) => warn!("plan reply rejected: {e}"),
        }
    }
    Err(Fault::Unparseable(last))
}

fn observed_flags(task: &TaskSpec, sim: &SimState, seen: &BTreeSet<String>) -> Vec<bool> {
    referenced_objects(task, &sim.catalog())
        .iter()
        .map(|ids| ids.iter().all(|id| seen.contains(id)))
        .collect()
}

/// Runs one episode: initial spin, then observe, rebuild, prune, filter, plan and
/// execute until `done()`, the step cap, the post-completion cap or a backend fault.
pub fn run_episode(
    mut sim: SimState,
    task: &TaskSpec,
    seed: u64,
    backend: &dyn LlmBackend,
    config: &AgentConfig,
) -> EpisodeOutcome {
    let params = GeometryParams {
        sparsify_c: config.sparsify_c,
        tau: config.tau,
        ..GeometryParams::default()
    };
    let mut per = Perception::new(&sim);
    per.tracker.lambda = config.lambda;
    per.sense(&sim);
    if config.initial_spin {
        spin(&mut sim, &mut per);
    }
    let catalog = sim.catalog();
    let mut state = AgentState::default();
    let mut log = Vec::new();
    let mut blacklist = FrontierBlacklist::default();
    let mut satisfied = evaluate_goals(task, &sim.world_relations(), &catalog);
    let mut completed_at: Option<u32> = satisfied.iter().all(|s| *s).then_some(0);
    let mut fault = None;
    let mut scene = SceneGraph::default();

    let terminated_by = loop {
        if state.step >= config.max_steps {
            break Termination::StepCap;
        }
        if let Some(t) = completed_at {
            if state.step - t >= config.post_completion_cap {
                break Termination::PostCompletionCap;
            }
        }
        let geometry = build_geometry(&per.map, &per.tracker.doors(), &params);
        let frontiers: Vec<Frontier> = geometry
            .frontiers
            .iter()
            .filter(|f| !blacklist.covers(f))
            .cloned()
            .collect();
        scene = per.tracker.update(
            &Layers {
                map: &per.map,
                sparse: &geometry.sparse,
                separated: &geometry.separated,
                frontiers: &frontiers,
                robot: &sim.robot,
            },
            backend,
        );
        let pruned = prune_unreachable(&scene);
        let view = if config.filter {
            match filter_scene(&pruned, task, backend, config) {
                Ok(v) => v,
                Err(e) => {
                    fault = Some(e.to_string());
                    break Termination::Fault;
                }
            }
        } else {
            pruned
        };
        let robot = RobotSummary {
            room: scene
                .robot_region
                .map_or_else(|| "unknown".to_string(), |r| scene.region_name(r)),
            holding: scene.holding.clone(),
        };
        let (call, hash) = match plan(&view, task, &robot, &state.history, backend, config) {
            Ok(p) => p,
            Err(e) => {
                fault = Some(e.to_string());
                break Termination::Fault;
            }
        };
        state.step += 1;
        let outcome = {
            let mut ws = Workspace {
                sim: &mut sim,
                per: &mut per,
                geometry: &geometry,
                scene: &scene,
                blacklist: &mut blacklist,
            };
            execute_subpolicy(&mut ws, &call)
        };
        info!("step {}: {call} -> {}", state.step, outcome.feedback);
        satisfied = evaluate_goals(task, &sim.world_relations(), &catalog);
        log.push(StepLog {
            step: state.step,
            prompt_sha256: hash,
            subpolicy: call.name.as_str().to_string(),
            args: call.args(),
            success: outcome.success,
            feedback: outcome.feedback.clone(),
            satisfied_flags: satisfied.clone(),
            robot_room: robot.room.clone(),
        });
        state.history.push(HistoryEntry {
            step: state.step,
            call,
            success: outcome.success,
            feedback: outcome.feedback,
        });
        if outcome.done {
            state.done_called = true;
            break Termination::DoneCall;
        }
        if satisfied.iter().all(|s| *s) {
            let t = *completed_at.get_or_insert(state.step);
            state.post_completion_steps = state.step - t;
        } else {
            completed_at = None;
            state.post_completion_steps = 0;
        }
    };

    let record = EpisodeRecord {
        task: task.name.clone(),
        scene: sim.name.clone(),
        seed,
        terminated_by,
        satisfied,
        observed: observed_flags(task, &sim, &per.observed()),
        steps: state.step,
        log_path: None,
        fault,
    };
    EpisodeOutcome {
        record,
        log,
        state,
        scene,
    }
}
