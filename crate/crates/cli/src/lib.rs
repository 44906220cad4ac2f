//! Library side of the `sgplan` binary: run configuration and the
//! `run`, `eval` and `gen-scene` commands.

pub mod config;
pub mod eval;
pub mod gen;
pub mod run;

pub use config::{BackendKind, BackendSettings, RunConfig};
pub use eval::{eval, load_records};
pub use gen::gen_scene;
pub use run::{run, ManifestEntry, RunManifest, RunSummary};
