use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use sgplan_core::fixtures::{generate, Template};

/// Writes `scenes/{scene}.json` and `tasks/{task}.json` under `out` and
/// returns the written paths.
pub fn gen_scene(template: Template, seed: u64, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let generated = generate(template, seed);
    let scenes = out.join("scenes");
    let tasks = out.join("tasks");
    for d in [&scenes, &tasks] {
        fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    let mut written = Vec::new();
    let p = scenes.join(format!("{}.json", generated.scene.name));
    fs::write(&p, generated.scene.to_json_pretty() + "\n")
        .with_context(|| format!("writing {}", p.display()))?;
    written.push(p);
    for task in &generated.tasks {
        let p = tasks.join(format!("{}.json", task.name));
        let text = serde_json::to_string_pretty(task).expect("serializable") + "\n";
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        written.push(p);
    }
    Ok(written)
}
