use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use serde::{Deserialize, Serialize};
use sgplan_core::agent::{load_episode, load_suite, AgentConfig, Episode};
use sgplan_core::fixtures;
use sgplan_core::language::HttpConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Rules,
    Oracle,
    Http,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSettings {
    pub kind: BackendKind,
    /// Directory of `{label}.jsonl` transcripts replayed by the oracle backend.
    pub transcripts: Option<PathBuf>,
    pub http: HttpConfig,
}

/// Everything a `run` needs. Loadable from TOML; command-line flags override it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: Option<PathBuf>,
    pub tasks: Vec<PathBuf>,
    /// `bundled` or the path of a suite manifest.
    pub suite: Option<String>,
    /// Single episodes use it as the episode seed; suites add it to each entry's seed.
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// Worker threads; 0 means one per core.
    pub jobs: usize,
    pub backend: BackendSettings,
    pub agent: AgentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: None,
            tasks: Vec::new(),
            suite: None,
            seed: None,
            out: PathBuf::from("out"),
            jobs: 1,
            backend: BackendSettings::default(),
            agent: AgentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Resolves the configured scene/tasks or suite into validated episodes.
    pub fn episodes(&self) -> anyhow::Result<Vec<Episode>> {
        match (&self.suite, &self.scene) {
            (Some(_), Some(_)) => bail!("--suite cannot be combined with --scene"),
            (Some(_), None) if !self.tasks.is_empty() => {
                bail!("--suite cannot be combined with --task")
            }
            (None, None) => bail!("nothing to run: give --suite or --scene with --task"),
            (None, Some(_)) if self.tasks.is_empty() => bail!("--scene needs at least one --task"),
            (None, Some(scene)) => {
                let seed = self.seed.unwrap_or(0);
                self.tasks
                    .iter()
                    .map(|t| load_episode(scene, t, seed).map_err(Into::into))
                    .collect()
            }
            (Some(suite), None) => {
                let mut eps = if suite == "bundled" {
                    fixtures::bundled_suite()
                } else {
                    load_suite(Path::new(suite))?.1
                };
                let offset = self.seed.unwrap_or(0);
                if offset != 0 {
                    eps = eps
                        .into_iter()
                        .map(|e| {
                            let seed = e.seed.checked_add(offset).context("seed overflows")?;
                            let label = e.label();
                            Episode::new(e.scene, e.task, seed)
                                .with_context(|| format!("{label} with seed {seed}"))
                        })
                        .collect::<anyhow::Result<_>>()?;
                }
                Ok(eps)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_match_the_agent_constants() {
        let c = RunConfig::default();
        assert_eq!(c.agent.max_steps, 50);
        assert_eq!(c.agent.post_completion_cap, 5);
        assert_eq!(c.agent.lambda, 1.3);
        assert_eq!(RunConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("sed = 3").is_err());
        assert!(RunConfig::from_toml("[agent]\nmax_step = 3").is_err());
        assert!(RunConfig::from_toml("[backend.http]\nmodle = \"x\"").is_err());
    }

    proptest! {
        #[test]
        fn toml_round_trip(
            scene in proptest::option::of("[a-z_/]{1,12}\\.json"),
            tasks in proptest::collection::vec("[a-z_]{1,8}\\.json", 0..4),
            seed in proptest::option::of(any::<u32>()),
            jobs in 0usize..16,
            kind in prop_oneof![Just(BackendKind::Rules), Just(BackendKind::Oracle), Just(BackendKind::Http)],
            max_steps in 1u32..200,
            lambda in 0.1f64..5.0,
            c in 0.0f64..2.0,
            tau in proptest::option::of(0.0f64..1.0),
            filter in any::<bool>(),
            temperature in 0.0f64..2.0,
        ) {
            let mut cfg = RunConfig {
                scene: scene.map(PathBuf::from),
                tasks: tasks.into_iter().map(PathBuf::from).collect(),
                seed: seed.map(u64::from),
                jobs,
                ..RunConfig::default()
            };
            cfg.backend.kind = kind;
            cfg.agent.max_steps = max_steps;
            cfg.agent.lambda = lambda;
            cfg.agent.sparsify_c = c;
            cfg.agent.tau = tau;
            cfg.agent.filter = filter;
            cfg.backend.http.temperature = temperature;
            let text = cfg.to_toml().unwrap();
            prop_assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        }
    }
}
