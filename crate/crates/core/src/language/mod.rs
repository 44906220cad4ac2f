//! Scene serialization, prompts, reply parsing and the pluggable model backends.

mod backend;
mod call;
mod http;
mod oracle;
mod prompt;
mod rules;

pub use backend::{
    messages_hash, Context, HistoryEntry, LlmBackend, LlmError, LlmRequest, Message, Purpose,
    RobotSummary, Role,
};
pub use call::{parse_plan_response, PlanParseError, Subpolicy, SubpolicyCall};
pub use http::{HttpBackend, HttpConfig, DEFAULT_BASE_URL, DEFAULT_MODEL, DEFAULT_MODEL_AUX};
pub use oracle::{read_transcript, OracleScript, Recorder, TranscriptEntry};
pub use prompt::{
    apply_filter, build_filter_prompt, build_plan_prompt, parse_filter_response, serialize_scene,
    FilterParseError, KeepSet, PromptError, RegionSection, ScenePrompt, HISTORY_WINDOW,
};
pub use rules::{goal_categories, rules_filter, rules_plan, RulesBackend};
