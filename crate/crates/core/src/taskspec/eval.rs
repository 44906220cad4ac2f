use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::gridworld::Atom;

use super::parse::{GoalCondition, TaskSpec};

/// Truth of each goal condition against a full set of world atoms.
/// `catalog` maps every object id in the world to its category.
pub fn evaluate_goals(
    spec: &TaskSpec,
    atoms: &BTreeSet<Atom>,
    catalog: &BTreeMap<String, String>,
) -> Vec<bool> {
    spec.goal_conditions
        .iter()
        .map(|g| match g {
            GoalCondition::Ground { pred, args } => atoms.contains(&pred.atom(args)),
            GoalCondition::ForAllCategory {
                category,
                pred,
                target,
            } => catalog
                .iter()
                .filter(|(_, c)| *c == category)
                .all(|(id, _)| {
                    let mut args = vec![id.clone()];
                    args.extend(target.iter().cloned());
                    atoms.contains(&pred.atom(&args))
                }),
        })
        .collect()
}

/// Object ids each condition depends on: its named ids plus, for quantified
/// conditions, every instance of the category.
pub fn referenced_objects(
    spec: &TaskSpec,
    catalog: &BTreeMap<String, String>,
) -> Vec<BTreeSet<String>> {
    spec.goal_conditions
        .iter()
        .map(|g| {
            let mut ids: BTreeSet<String> = g.named_ids().into_iter().map(String::from).collect();
            if let GoalCondition::ForAllCategory { category, .. } = g {
                ids.extend(
                    catalog
                        .iter()
                        .filter(|(_, c)| *c == category)
                        .map(|(id, _)| id.clone()),
                );
            }
            ids
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    DoneCall,
    StepCap,
    PostCompletionCap,
    Fault,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub task: String,
    #[serde(default)]
    pub scene: String,
    #[serde(default)]
    pub seed: u64,
    pub terminated_by: Termination,
    pub satisfied: Vec<bool>,
    /// Per condition: every referenced object was observed during the episode.
    pub observed: Vec<bool>,
    pub steps: u32,
    #[serde(default)]
    pub log_path: Option<String>,
    #[serde(default)]
    pub fault: Option<String>,
}

impl EpisodeRecord {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.satisfied.len() != self.observed.len() {
            return Err(MetricsError::FlagLength {
                task: self.task.clone(),
                satisfied: self.satisfied.len(),
                observed: self.observed.len(),
            });
        }
        if self.satisfied.is_empty() {
            return Err(MetricsError::NoConditions(self.task.clone()));
        }
        Ok(())
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|s| *s)
    }
}

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no episode records")]
    Empty,
    #[error("record for {task}: {satisfied} satisfied flags but {observed} observed flags")]
    FlagLength {
        task: String,
        satisfied: usize,
        observed: usize,
    },
    #[error("record for {0} has no goal conditions")]
    NoConditions(String),
}

pub type Frac = Ratio<i64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactMetrics {
    pub sr: Frac,
    pub ttc: Frac,
    pub tp: Frac,
    pub rtp: Option<Frac>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sr: f64,
    pub ttc: f64,
    pub tp: f64,
    /// Absent when no episode had an eligible condition.
    pub rtp: Option<f64>,
    pub episodes: usize,
    pub rtp_eligible_episodes: usize,
    pub exact: ExactMetrics,
}

fn to_f64(r: Frac) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn compute_metrics(records: &[EpisodeRecord]) -> Result<MetricsReport, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    for r in records {
        r.validate()?;
    }
    let n = records.len() as i64;
    let count = |f: &dyn Fn(&EpisodeRecord) -> bool| records.iter().filter(|r| f(r)).count() as i64;
    let sr = Frac::new(
        count(&|r| r.all_satisfied() && r.terminated_by == Termination::DoneCall),
        n,
    );
    let ttc = Frac::new(count(&|r| r.all_satisfied()), n);
    let mut tp = Frac::from_integer(0);
    let mut rtp_sum = Frac::from_integer(0);
    let mut eligible_eps = 0i64;
    for r in records {
        let sat = r.satisfied.iter().filter(|s| **s).count() as i64;
        tp += Frac::new(sat, r.satisfied.len() as i64);
        let eligible = r.observed.iter().filter(|o| **o).count() as i64;
        if eligible > 0 {
            let both = r
                .satisfied
                .iter()
                .zip(&r.observed)
                .filter(|(s, o)| **s && **o)
                .count() as i64;
            rtp_sum += Frac::new(both, eligible);
            eligible_eps += 1;
        }
    }
    let tp = tp / n;
    let rtp = (eligible_eps > 0).then(|| rtp_sum / eligible_eps);
    Ok(MetricsReport {
        sr: to_f64(sr),
        ttc: to_f64(ttc),
        tp: to_f64(tp),
        rtp: rtp.map(to_f64),
        episodes: records.len(),
        rtp_eligible_episodes: eligible_eps as usize,
        exact: ExactMetrics { sr, ttc, tp, rtp },
    })
}

impl MetricsReport {
    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let rows: [(&str, String, String); 4] = [
            ("SR", format!("{:.4}", self.sr), self.exact.sr.to_string()),
            ("TTC", format!("{:.4}", self.ttc), self.exact.ttc.to_string()),
            ("TP", format!("{:.4}", self.tp), self.exact.tp.to_string()),
            (
                "rTP",
                self.rtp.map_or("-".into(), |v| format!("{v:.4}")),
                self.exact.rtp.map_or("-".into(), |v| v.to_string()),
            ),
        ];
        writeln!(s, "{:<6} {:>8} {:>10}", "metric", "value", "exact").unwrap();
        for (name, v, e) in rows {
            writeln!(s, "{name:<6} {v:>8} {e:>10}").unwrap();
        }
        writeln!(
            s,
            "episodes: {} (rTP-eligible: {})",
            self.episodes, self.rtp_eligible_episodes
        )
        .unwrap();
        s
    }
}
