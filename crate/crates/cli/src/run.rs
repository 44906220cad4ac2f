use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context as _};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sgplan_core::agent::Episode;
use sgplan_core::language::{HttpBackend, LlmBackend, OracleScript, Recorder, RulesBackend};
use sgplan_core::taskspec::{compute_metrics, EpisodeRecord, MetricsReport, Termination};

use crate::config::{BackendKind, RunConfig};

/// One row of `manifest.json`. Paths are relative to the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: String,
    pub record: String,
    pub log: String,
    pub transcript: String,
    pub terminated_by: Termination,
    pub steps: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub metrics: String,
    pub episodes: Vec<ManifestEntry>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub report: MetricsReport,
    pub records: Vec<EpisodeRecord>,
    pub faults: usize,
}

enum Backends {
    Shared(Arc<dyn LlmBackend>),
    Oracle(PathBuf),
}

impl Backends {
    fn prepare(config: &RunConfig, episodes: &[Episode]) -> anyhow::Result<Self> {
        match config.backend.kind {
            BackendKind::Rules => Ok(Self::Shared(Arc::new(RulesBackend))),
            BackendKind::Http => {
                let mut http = config.backend.http.clone();
                http.apply_env().context("http backend configuration")?;
                let backend = HttpBackend::new(http).context("http backend configuration")?;
                Ok(Self::Shared(Arc::new(backend)))
            }
            BackendKind::Oracle => {
                let dir = config
                    .backend
                    .transcripts
                    .clone()
                    .context("the oracle backend needs --transcripts DIR")?;
                for e in episodes {
                    let p = transcript_path(&dir, e);
                    if !p.is_file() {
                        bail!("missing transcript {}", p.display());
                    }
                }
                Ok(Self::Oracle(dir))
            }
        }
    }

    fn for_episode(&self, episode: &Episode) -> anyhow::Result<Arc<dyn LlmBackend>> {
        match self {
            Self::Shared(b) => Ok(b.clone()),
            Self::Oracle(dir) => {
                let p = transcript_path(dir, episode);
                let script = OracleScript::from_path(&p)
                    .with_context(|| format!("reading {}", p.display()))?;
                Ok(Arc::new(script))
            }
        }
    }
}

fn transcript_path(dir: &Path, episode: &Episode) -> PathBuf {
    dir.join(format!("{}.jsonl", episode.label()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

fn run_one(
    episode: &Episode,
    backends: &Backends,
    config: &RunConfig,
) -> anyhow::Result<(EpisodeRecord, ManifestEntry)> {
    let label = episode.label();
    let out = &config.out;
    let transcript = format!("transcripts/{label}.jsonl");
    let log = format!("logs/{label}.jsonl");
    let record_path = format!("records/{label}.json");

    let tpath = out.join(&transcript);
    if tpath.exists() {
        fs::remove_file(&tpath).with_context(|| format!("removing {}", tpath.display()))?;
    }
    let recorder = Recorder::to_file(backends.for_episode(episode)?, &tpath)
        .with_context(|| format!("opening {}", tpath.display()))?;

    let started = Instant::now();
    let outcome = episode.run(&recorder, &config.agent);
    log::info!(
        "{label}: {:?} after {} steps in {:.2?}",
        outcome.record.terminated_by,
        outcome.record.steps,
        started.elapsed()
    );
    if let Some(f) = &outcome.record.fault {
        log::error!("{label}: {f}");
    }

    write(&out.join(&log), outcome.log_jsonl())?;
    let mut record = outcome.record;
    record.log_path = Some(log.clone());
    write(&out.join(&record_path), to_json(&record))?;
    let entry = ManifestEntry {
        label,
        record: record_path,
        log,
        transcript,
        terminated_by: record.terminated_by,
        steps: record.steps,
    };
    Ok((record, entry))
}

/// Runs every configured episode and writes records, logs, transcripts,
/// `metrics.json` and `manifest.json` under `config.out`.
pub fn run(config: &RunConfig) -> anyhow::Result<RunSummary> {
    let episodes = config.episodes()?;
    let mut labels = std::collections::BTreeSet::new();
    for e in &episodes {
        if !labels.insert(e.label()) {
            bail!("episode {} is listed twice", e.label());
        }
    }
    let backends = Backends::prepare(config, &episodes)?;

    for sub in ["logs", "records", "transcripts"] {
        let d = config.out.join(sub);
        fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .context("building worker pool")?;
    let results: Vec<_> = pool.install(|| {
        episodes
            .par_iter()
            .map(|e| run_one(e, &backends, config))
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    let (records, entries): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let report = compute_metrics(&records)?;
    write(&config.out.join("metrics.json"), to_json(&report))?;
    let manifest = RunManifest {
        config: config.clone(),
        metrics: "metrics.json".into(),
        episodes: entries,
    };
    write(&config.out.join("manifest.json"), to_json(&manifest))?;

    let faults = records
        .iter()
        .filter(|r| r.terminated_by == Termination::Fault)
        .count();
    Ok(RunSummary {
        report,
        records,
        faults,
    })
}
