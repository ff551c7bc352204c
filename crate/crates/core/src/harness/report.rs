use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_with::serde_as;

use super::record::RunRecord;
use crate::env::Framing;
use crate::num::{mean, std_error, Real};

/// Mean and standard error over runs.
#[serde_as]
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    #[serde_as(as = "Real")]
    pub mean: f64,
    #[serde_as(as = "Real")]
    pub std_error: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Option<Stat> {
        (!xs.is_empty()).then(|| Stat { mean: mean(xs), std_error: std_error(xs), n: xs.len() })
    }
}

/// One (env, goal, agent, framing) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub env: String,
    pub goal: String,
    pub agent: String,
    pub framing: Framing,
    pub runs: usize,
    /// Runs left out because they did not complete.
    pub incomplete: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_at_0: Option<Stat>,
    /// At the last checkpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_at_final: Option<Stat>,
    pub final_step: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discovery: Option<Stat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret: Option<Stat>,
}

/// Groups records into cells, sorted by key, so the input order never matters.
pub fn aggregate(records: &[RunRecord]) -> Vec<AggregateRow> {
    let key = |r: &RunRecord| {
        let t = r.trial();
        let agent = match r {
            RunRecord::Discovery(d) => alloc::format!("{}+{}", t.agent.identity, d.novice_agent.identity),
            RunRecord::Trial(_) => t.agent.identity.clone(),
        };
        (String::from(t.goal.env.as_str()), String::from(t.goal.goal.as_str()), agent, t.config.framing)
    };
    let mut keys: Vec<_> = records.iter().map(key).collect();
    keys.sort_by(|a, b| (&a.0, &a.1, &a.2, a.3 as u8).cmp(&(&b.0, &b.1, &b.2, b.3 as u8)));
    keys.dedup();
    keys.into_iter()
        .map(|k| {
            let cell: Vec<&RunRecord> = records.iter().filter(|r| key(r) == k).collect();
            let done: Vec<&RunRecord> = cell.iter().copied().filter(|r| r.is_complete()).collect();
            let e0: Vec<f64> = done.iter().filter_map(|r| r.trial().error_at(0)).collect();
            let ef: Vec<f64> = done.iter().filter_map(|r| r.trial().final_error()).collect();
            let disc: Vec<f64> = done
                .iter()
                .filter_map(|r| match r {
                    RunRecord::Discovery(d) => d.discovery_error(),
                    RunRecord::Trial(_) => None,
                })
                .collect();
            let regret: Vec<f64> = done
                .iter()
                .filter_map(|r| r.trial().eig.as_ref()?.regret.as_ref().map(|g| g.regret))
                .collect();
            let final_step = done.first().and_then(|r| r.trial().checkpoints.last()).map_or(0, |c| c.step);
            AggregateRow {
                env: k.0,
                goal: k.1,
                agent: k.2,
                framing: k.3,
                runs: done.len(),
                incomplete: cell.len() - done.len(),
                error_at_0: Stat::of(&e0),
                error_at_final: Stat::of(&ef),
                final_step,
                discovery: Stat::of(&disc),
                regret: Stat::of(&regret),
            }
        })
        .collect()
}
