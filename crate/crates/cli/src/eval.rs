use std::fs;
use std::path::Path;

use anyhow::{bail, Context as _};
use sgplan_core::taskspec::{compute_metrics, EpisodeRecord, MetricsReport};

/// Reads every `*.json` record in `dir/records` (or `dir` itself when it has no
/// `records` subdirectory), in file-name order.
pub fn load_records(dir: &Path) -> anyhow::Result<Vec<EpisodeRecord>> {
    let sub = dir.join("records");
    let dir = if sub.is_dir() { sub } else { dir.to_path_buf() };
    let mut paths = Vec::new();
    for entry in fs::read_dir(&dir).with_context(|| format!("reading {}", dir.display()))? {
        let p = entry?.path();
        if p.extension().is_some_and(|e| e == "json") && p.is_file() {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        bail!("no episode records in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        })
        .collect()
}

pub fn eval(dir: &Path) -> anyhow::Result<MetricsReport> {
    let records = load_records(dir)?;
    Ok(compute_metrics(&records)?)
}
