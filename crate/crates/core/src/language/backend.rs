use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scenegraph::SceneGraph;
use crate::taskspec::TaskSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Filter,
    Plan,
    Classify,
}

/// One executed high-level action as seen by the planner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: u32,
    pub call: super::SubpolicyCall,
    pub success: bool,
    pub feedback: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotSummary {
    pub room: String,
    /// Instance id of the held object.
    pub holding: Option<String>,
}

/// Structured view of what a prompt encodes. Text backends ignore it; the rules backend
/// decides from it instead of parsing prose.
#[derive(Clone, Debug, PartialEq)]
pub enum Context {
    Classify {
        categories: Vec<String>,
    },
    Filter {
        scene: SceneGraph,
        task: TaskSpec,
    },
    Plan {
        scene: SceneGraph,
        task: TaskSpec,
        robot: RobotSummary,
        history: Vec<HistoryEntry>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LlmRequest {
    pub purpose: Purpose,
    pub messages: Vec<Message>,
    pub context: Option<Context>,
}

impl LlmRequest {
    /// sha256 of the compact JSON encoding of the message list.
    pub fn hash(&self) -> String {
        messages_hash(&self.messages)
    }
}

pub fn messages_hash(messages: &[Message]) -> String {
    let json = serde_json::to_string(messages).expect("messages serialize");
    hex::encode(Sha256::digest(json.as_bytes()))
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("no recorded reply for request {0}")]
    OracleMiss(String),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("rules backend cannot answer: {0}")]
    Unsupported(String),
    #[error("transcript i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError>;

    fn name(&self) -> &str;
}
