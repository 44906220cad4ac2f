use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

use crate::gridworld::Atom;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Inside,
    Ontop,
    Open,
    Closed,
}

impl Predicate {
    pub fn arity(self) -> usize {
        match self {
            Predicate::Inside | Predicate::Ontop => 2,
            Predicate::Open | Predicate::Closed => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Predicate::Inside => "inside",
            Predicate::Ontop => "ontop",
            Predicate::Open => "open",
            Predicate::Closed => "closed",
        }
    }

    fn from_word(w: &str) -> Option<Self> {
        Some(match w {
            "inside" => Predicate::Inside,
            "ontop" | "onto" | "on_top" => Predicate::Ontop,
            "open" => Predicate::Open,
            "closed" => Predicate::Closed,
            _ => return None,
        })
    }

    /// The ground atom this predicate denotes over `args`.
    pub fn atom(self, args: &[String]) -> Atom {
        match self {
            Predicate::Inside => Atom::Inside(args[0].clone(), args[1].clone()),
            Predicate::Ontop => Atom::Ontop(args[0].clone(), args[1].clone()),
            Predicate::Open => Atom::Open(args[0].clone()),
            Predicate::Closed => Atom::Closed(args[0].clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "form")]
pub enum GoalCondition {
    Ground {
        pred: Predicate,
        args: Vec<String>,
    },
    /// Every instance of `category` satisfies `pred`, against `target` for binary predicates.
    ForAllCategory {
        category: String,
        pred: Predicate,
        target: Option<String>,
    },
}

impl GoalCondition {
    /// Object ids named directly by the condition.
    pub fn named_ids(&self) -> Vec<&str> {
        match self {
            GoalCondition::Ground { args, .. } => args.iter().map(String::as_str).collect(),
            GoalCondition::ForAllCategory { target, .. } => target.iter().map(String::as_str).collect(),
        }
    }

    pub fn predicate(&self) -> Predicate {
        match self {
            GoalCondition::Ground { pred, .. } | GoalCondition::ForAllCategory { pred, .. } => *pred,
        }
    }
}

impl fmt::Display for GoalCondition {
    /// Canonical source form, accepted back by the parser.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GoalCondition::Ground { pred, args } => write!(f, "{}({})", pred.as_str(), args.join(", ")),
            GoalCondition::ForAllCategory {
                category,
                pred,
                target,
            } => {
                write!(f, "forall {category} {}", pred.as_str())?;
                if let Some(t) = target {
                    write!(f, " {t}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TaskError {
    #[error("malformed task file: {0}")]
    Json(String),
    #[error("condition {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("condition {line}, column {column}: unknown predicate `{name}`")]
    UnknownPredicate {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("condition {line}, column {column}: `{pred}` takes {expected} argument(s), got {got}")]
    Arity {
        line: usize,
        column: usize,
        pred: String,
        expected: usize,
        got: usize,
    },
    #[error("unbound variable ${name} (condition {line}, column {column})")]
    UnknownVariable {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("task references `{0}`, which is not in the scene")]
    UnknownReference(String),
}

/// On-disk task file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskFile {
    pub name: String,
    pub description_template: String,
    #[serde(default)]
    pub bindings: BTreeMap<String, String>,
    pub goal_conditions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub description_template: String,
    pub bindings: BTreeMap<String, String>,
    pub goal_conditions: Vec<GoalCondition>,
    /// Categories quantified over by the conditions.
    pub relevant_categories: BTreeSet<String>,
}

static VAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\$([A-Za-z_](?:[A-Za-z0-9_.]*[A-Za-z0-9_])?)").unwrap());
static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\$?[A-Za-z_][A-Za-z0-9_.]*$").unwrap());

impl TaskSpec {
    /// The description with every `$var` replaced by its bound object id.
    pub fn description(&self) -> String {
        VAR.replace_all(&self.description_template, |c: &regex::Captures| {
            self.bindings.get(&c[1]).cloned().unwrap_or_else(|| c[0].to_string())
        })
        .into_owned()
    }

    pub fn to_file(&self) -> TaskFile {
        TaskFile {
            name: self.name.clone(),
            description_template: self.description_template.clone(),
            bindings: self.bindings.clone(),
            goal_conditions: self.goal_conditions.iter().map(|g| g.to_string()).collect(),
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).unwrap()
    }

    /// Object ids named by bindings or conditions.
    pub fn named_ids(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.bindings.values().cloned().collect();
        for g in &self.goal_conditions {
            out.extend(g.named_ids().into_iter().map(String::from));
        }
        out
    }

    /// Every named id exists in the scene and every quantified category has an instance.
    pub fn check_against(&self, catalog: &BTreeMap<String, String>) -> Result<(), TaskError> {
        for id in self.named_ids() {
            if !catalog.contains_key(&id) {
                return Err(TaskError::UnknownReference(id));
            }
        }
        let cats: BTreeSet<&String> = catalog.values().collect();
        for c in &self.relevant_categories {
            if !cats.contains(c) {
                return Err(TaskError::UnknownReference(c.clone()));
            }
        }
        Ok(())
    }

    /// Categories of every object the goals depend on.
    pub fn goal_categories(&self, catalog: &BTreeMap<String, String>) -> BTreeSet<String> {
        let mut out = self.relevant_categories.clone();
        for id in self.named_ids() {
            if let Some(c) = catalog.get(&id) {
                out.insert(c.clone());
            }
        }
        out
    }
}

pub fn parse_task(source: &str) -> Result<TaskSpec, TaskError> {
    let file: TaskFile = serde_json::from_str(source).map_err(|e| TaskError::Json(e.to_string()))?;
    parse_task_file(&file)
}

pub fn parse_task_file(file: &TaskFile) -> Result<TaskSpec, TaskError> {
    for c in VAR.captures_iter(&file.description_template) {
        let m = c.get(1).unwrap();
        if !file.bindings.contains_key(m.as_str()) {
            return Err(TaskError::UnknownVariable {
                name: m.as_str().to_string(),
                line: 0,
                column: m.start(),
            });
        }
    }
    let mut goal_conditions = Vec::new();
    let mut relevant_categories = BTreeSet::new();
    for (i, src) in file.goal_conditions.iter().enumerate() {
        let g = parse_condition(src, i + 1, &file.bindings)?;
        if let GoalCondition::ForAllCategory { category, .. } = &g {
            relevant_categories.insert(category.clone());
        }
        goal_conditions.push(g);
    }
    Ok(TaskSpec {
        name: file.name.clone(),
        description_template: file.description_template.clone(),
        bindings: file.bindings.clone(),
        goal_conditions,
        relevant_categories,
    })
}

/// A token and its 1-based column.
type Tok<'a> = (&'a str, usize);

fn tokenize(src: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in src.char_indices() {
        let sep = ch.is_whitespace() || ch == ',' || ch == '(' || ch == ')';
        match (sep, start) {
            (true, Some(s)) => {
                out.push((&src[s..i], s + 1));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((&src[s..], s + 1));
    }
    out
}

fn resolve(tok: Tok<'_>, line: usize, bindings: &BTreeMap<String, String>) -> Result<String, TaskError> {
    let (t, column) = tok;
    if !WORD.is_match(t) {
        return Err(TaskError::Syntax {
            line,
            column,
            message: format!("bad identifier `{t}`"),
        });
    }
    match t.strip_prefix('$') {
        Some(v) => bindings.get(v).cloned().ok_or_else(|| TaskError::UnknownVariable {
            name: v.to_string(),
            line,
            column,
        }),
        None => Ok(t.to_string()),
    }
}

/// Accepts `forall CAT PRED [TARGET]`, `PRED A [B]` and `pred(A[, B])`.
pub fn parse_condition(
    src: &str,
    line: usize,
    bindings: &BTreeMap<String, String>,
) -> Result<GoalCondition, TaskError> {
    let trimmed = src.trim();
    let functional = trimmed.contains('(');
    if functional {
        let open = src.find('(').unwrap();
        let balanced = trimmed.ends_with(')') && src.matches('(').count() == 1 && src.matches(')').count() == 1;
        if !balanced {
            return Err(TaskError::Syntax {
                line,
                column: open + 1,
                message: "unbalanced parentheses".into(),
            });
        }
    }
    let toks = tokenize(src);
    let Some(&(head, head_col)) = toks.first() else {
        return Err(TaskError::Syntax {
            line,
            column: 1,
            message: "empty condition".into(),
        });
    };
    if head == "forall" && !functional {
        if toks.len() < 3 {
            return Err(TaskError::Syntax {
                line,
                column: src.len() + 1,
                message: "expected `forall CATEGORY PREDICATE [TARGET]`".into(),
            });
        }
        let (pw, pc) = toks[2];
        let pred = Predicate::from_word(pw).ok_or_else(|| TaskError::UnknownPredicate {
            line,
            column: pc,
            name: pw.to_string(),
        })?;
        let got = toks.len() - 2;
        if got != pred.arity() {
            return Err(TaskError::Arity {
                line,
                column: pc,
                pred: pred.as_str().into(),
                expected: pred.arity(),
                got,
            });
        }
        let category = resolve(toks[1], line, bindings)?;
        let target = match toks.get(3) {
            Some(t) => Some(resolve(*t, line, bindings)?),
            None => None,
        };
        return Ok(GoalCondition::ForAllCategory {
            category,
            pred,
            target,
        });
    }
    let pred = Predicate::from_word(head).ok_or_else(|| TaskError::UnknownPredicate {
        line,
        column: head_col,
        name: head.to_string(),
    })?;
    let got = toks.len() - 1;
    if got != pred.arity() {
        return Err(TaskError::Arity {
            line,
            column: head_col,
            pred: pred.as_str().into(),
            expected: pred.arity(),
            got,
        });
    }
    let args = toks[1..]
        .iter()
        .map(|t| resolve(*t, line, bindings))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GoalCondition::Ground { pred, args })
}
