use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::gridworld::{load_scene, SceneError, SceneSpec};
use crate::language::LlmBackend;
use crate::taskspec::{parse_task, TaskError, TaskSpec};

use super::episode::{run_episode, AgentConfig, EpisodeOutcome};

/// One (scene, task, seed) triple of a suite manifest. Paths are relative to the
/// manifest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub scene: String,
    pub task: String,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub name: String,
    pub entries: Vec<SuiteEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Scene { path: PathBuf, source: SceneError },
    #[error("{path}: {source}")]
    Task { path: PathBuf, source: TaskError },
}

/// A loaded, cross-checked episode definition.
#[derive(Clone, Debug)]
pub struct Episode {
    pub scene: SceneSpec,
    pub task: TaskSpec,
    pub seed: u64,
}

impl Episode {
    pub fn new(scene: SceneSpec, task: TaskSpec, seed: u64) -> Result<Self, SceneError> {
        let sim = load_scene(&scene, seed)?;
        task.check_against(&sim.catalog())
            .map_err(|e| SceneError::Invalid(format!("task {}: {e}", task.name)))?;
        Ok(Self { scene, task, seed })
    }

    pub fn from_sources(scene_json: &str, task_json: &str, seed: u64) -> Result<Self, String> {
        let scene = SceneSpec::from_json(scene_json).map_err(|e| e.to_string())?;
        let task = parse_task(task_json).map_err(|e| e.to_string())?;
        Self::new(scene, task, seed).map_err(|e| e.to_string())
    }

    /// `scene__task__seed`, used for file names and reports.
    pub fn label(&self) -> String {
        format!("{}__{}__{}", self.scene.name, self.task.name, self.seed)
    }

    pub fn run(&self, backend: &dyn LlmBackend, config: &AgentConfig) -> EpisodeOutcome {
        let sim = load_scene(&self.scene, self.seed).expect("validated at load");
        run_episode(sim, &self.task, self.seed, backend, config)
    }
}

fn read(path: &Path) -> Result<String, SuiteError> {
    std::fs::read_to_string(path).map_err(|source| SuiteError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_episode(scene_path: &Path, task_path: &Path, seed: u64) -> Result<Episode, SuiteError> {
    let scene = SceneSpec::from_json(&read(scene_path)?).map_err(|source| SuiteError::Scene {
        path: scene_path.to_path_buf(),
        source,
    })?;
    let task = parse_task(&read(task_path)?).map_err(|source| SuiteError::Task {
        path: task_path.to_path_buf(),
        source,
    })?;
    Episode::new(scene, task, seed).map_err(|source| SuiteError::Scene {
        path: scene_path.to_path_buf(),
        source,
    })
}

pub fn load_suite(manifest_path: &Path) -> Result<(SuiteManifest, Vec<Episode>), SuiteError> {
    let manifest: SuiteManifest =
        serde_json::from_str(&read(manifest_path)?).map_err(|e| SuiteError::Manifest {
            path: manifest_path.to_path_buf(),
            message: e.to_string(),
        })?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let episodes = manifest
        .entries
        .iter()
        .map(|e| load_episode(&base.join(&e.scene), &base.join(&e.task), e.seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((manifest, episodes))
}
