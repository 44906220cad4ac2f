use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::gridworld::MagicVerb;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subpolicy {
    Explore,
    Navigate,
    GoToAndOpen,
    GoToAndClose,
    GoToAndGrasp,
    GoToAndPlaceInside,
    GoToAndPlaceOntop,
    Done,
}

impl Subpolicy {
    pub const ALL: [Subpolicy; 8] = [
        Subpolicy::Explore,
        Subpolicy::Navigate,
        Subpolicy::GoToAndOpen,
        Subpolicy::GoToAndClose,
        Subpolicy::GoToAndGrasp,
        Subpolicy::GoToAndPlaceInside,
        Subpolicy::GoToAndPlaceOntop,
        Subpolicy::Done,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Subpolicy::Explore => "explore",
            Subpolicy::Navigate => "navigate",
            Subpolicy::GoToAndOpen => "go_to_and_open",
            Subpolicy::GoToAndClose => "go_to_and_close",
            Subpolicy::GoToAndGrasp => "go_to_and_grasp",
            Subpolicy::GoToAndPlaceInside => "go_to_and_place_inside",
            Subpolicy::GoToAndPlaceOntop => "go_to_and_place_ontop",
            Subpolicy::Done => "done",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Subpolicy::Explore => 1,
            Subpolicy::Done => 0,
            _ => 2,
        }
    }

    pub fn magic_verb(self) -> Option<MagicVerb> {
        Some(match self {
            Subpolicy::GoToAndOpen => MagicVerb::Open,
            Subpolicy::GoToAndClose => MagicVerb::Close,
            Subpolicy::GoToAndGrasp => MagicVerb::Grasp,
            Subpolicy::GoToAndPlaceInside => MagicVerb::PlaceInside,
            Subpolicy::GoToAndPlaceOntop => MagicVerb::PlaceOntop,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubpolicyCall {
    pub name: Subpolicy,
    pub room: Option<String>,
    pub object: Option<String>,
}

impl SubpolicyCall {
    pub fn done() -> Self {
        Self {
            name: Subpolicy::Done,
            room: None,
            object: None,
        }
    }

    pub fn explore(room: impl Into<String>) -> Self {
        Self {
            name: Subpolicy::Explore,
            room: Some(room.into()),
            object: None,
        }
    }

    pub fn on(name: Subpolicy, room: impl Into<String>, object: impl Into<String>) -> Self {
        Self {
            name,
            room: Some(room.into()),
            object: Some(object.into()),
        }
    }

    /// Argument list in call order.
    pub fn args(&self) -> Vec<String> {
        self.room.iter().chain(self.object.iter()).cloned().collect()
    }
}

impl fmt::Display for SubpolicyCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name.as_str(), self.args().join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PlanParseError {
    #[error("no subpolicy call found in reply")]
    NoCall,
    #[error("{name} takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
}

static CALL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"\b(explore|navigate|go_to_and_open|go_to_and_close|go_to_and_grasp|go_to_and_place_inside|go_to_and_place_ontop|done)\s*\(([^()]*)\)",
    )
    .unwrap()
});

/// The last function-call-shaped match in the reply, arity-checked.
pub fn parse_plan_response(reply: &str) -> Result<SubpolicyCall, PlanParseError> {
    let caps = CALL.captures_iter(reply).last().ok_or(PlanParseError::NoCall)?;
    let name = Subpolicy::parse(&caps[1]).unwrap();
    let args: Vec<String> = caps[2]
        .split(',')
        .map(|a| a.trim().trim_matches(|c| c == '"' || c == '\'' || c == '`').trim().to_string())
        .filter(|a| !a.is_empty())
        .collect();
    if args.len() != name.arity() {
        return Err(PlanParseError::Arity {
            name: name.as_str().into(),
            expected: name.arity(),
            got: args.len(),
        });
    }
    let mut it = args.into_iter();
    Ok(SubpolicyCall {
        name,
        room: it.next(),
        object: it.next(),
    })
}
