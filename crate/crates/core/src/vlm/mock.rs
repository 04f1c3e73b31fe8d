//! Offline backends: an always-correct oracle, a fixed script, and a noisy
//! oracle that corrupts a controlled fraction of its plans.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::QueryError;
use crate::floorplan::{oracle_plan, ConnectivityGraph, NavTask};
use crate::grammar::{serialize_plan, Plan, PlanFormat};

/// Verb emitted by the `undefined_verb` corruption.
pub const UNDEFINED_VERB: &str = "FlyTo";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    /// Remove the final ApproachDoor/OpenDoor/GoThrough triple.
    DropLastTriple,
    /// Replace the first door with one that is not on the start room's boundary.
    SwapDoor,
    UndefinedVerb,
}

impl Corruption {
    pub const ALL: [Corruption; 3] = [Corruption::DropLastTriple, Corruption::SwapDoor, Corruption::UndefinedVerb];
}

pub fn oracle_response(graph: &ConnectivityGraph, task: &NavTask) -> Result<String, QueryError> {
    let plan = oracle_plan(graph, task).map_err(|e| QueryError::Mock(e.to_string()))?;
    Ok(serialize_plan(&plan, PlanFormat::Json))
}

fn trial_rng(seed: u64, task: &NavTask, trial: u32) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(task.key().as_bytes());
    h.update(trial.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn drop_last_triple(plan: &Plan) -> Option<Plan> {
    (plan.len() >= 3).then(|| {
        let mut p = plan.clone();
        p.actions.truncate(plan.len() - 3);
        p
    })
}

fn swap_door(plan: &Plan, graph: &ConnectivityGraph, task: &NavTask, rng: &mut ChaCha8Rng) -> Option<Plan> {
    let first = plan.actions.iter().position(|a| a.verb.targets_door())?;
    let far: Vec<&str> = graph
        .edges
        .iter()
        .filter(|e| !e.touches(&task.start_room))
        .map(|e| e.door_id.as_str())
        .collect();
    let door = far.choose(rng)?;
    let mut p = plan.clone();
    p.actions[first].target = door.to_string();
    Some(p)
}

fn undefined_verb(plan: &Plan) -> Option<String> {
    plan.actions.first()?;
    let actions: Vec<_> = plan
        .actions
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let verb = if i == 0 { UNDEFINED_VERB } else { a.verb.name() };
            json!({"action": verb, "target": a.target})
        })
        .collect();
    Some(json!({ "plan": actions }).to_string())
}

/// Response of the noisy mock for one trial, with the corruption applied if
/// any. Pure in (seed, task, trial). A corruption that cannot apply to this
/// plan (e.g. no door off the start room) falls back to the next one in
/// `allowed` order, wrapping around.
pub fn mock_noisy_respond_detailed(
    task: &NavTask,
    graph: &ConnectivityGraph,
    seed: u64,
    trial: u32,
    p_error: f64,
    allowed: &[Corruption],
) -> Result<(String, Option<Corruption>), QueryError> {
    let plan = oracle_plan(graph, task).map_err(|e| QueryError::Mock(e.to_string()))?;
    let mut rng = trial_rng(seed, task, trial);
    if !rng.random_bool(p_error.clamp(0.0, 1.0)) {
        return Ok((serialize_plan(&plan, PlanFormat::Json), None));
    }
    let allowed = if allowed.is_empty() { &Corruption::ALL[..] } else { allowed };
    let pick = rng.random_range(0..allowed.len());
    for k in 0..allowed.len() {
        let c = allowed[(pick + k) % allowed.len()];
        let text = match c {
            Corruption::DropLastTriple => drop_last_triple(&plan).map(|p| serialize_plan(&p, PlanFormat::Json)),
            Corruption::SwapDoor => swap_door(&plan, graph, task, &mut rng).map(|p| serialize_plan(&p, PlanFormat::Json)),
            Corruption::UndefinedVerb => undefined_verb(&plan),
        };
        if let Some(text) = text {
            return Ok((text, Some(c)));
        }
    }
    Ok((serialize_plan(&plan, PlanFormat::Json), None))
}

pub fn mock_noisy_respond(
    task: &NavTask,
    graph: &ConnectivityGraph,
    seed: u64,
    trial: u32,
    p_error: f64,
) -> Result<String, QueryError> {
    mock_noisy_respond_detailed(task, graph, seed, trial, p_error, &Corruption::ALL).map(|(text, _)| text)
}

/// Responses for the scripted mock: either a list used for every task, or an
/// object mapping task keys (`map|start|goal`) to lists. Trial `n` gets entry
/// `n % len`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Script {
    All(Vec<String>),
    ByTask(BTreeMap<String, Vec<String>>),
}

impl Script {
    pub fn load(path: &Path) -> Result<Self, QueryError> {
        let text = std::fs::read_to_string(path).map_err(|e| QueryError::Mock(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| QueryError::Mock(format!("{}: {e}", path.display())))
    }

    pub fn respond(&self, task: &NavTask, trial: u32) -> Result<String, QueryError> {
        let list = match self {
            Script::All(list) => list,
            Script::ByTask(map) => map
                .get(&task.key())
                .ok_or_else(|| QueryError::Mock(format!("script has no entry for `{}`", task.key())))?,
        };
        if list.is_empty() {
            return Err(QueryError::Mock("script response list is empty".into()));
        }
        Ok(list[trial as usize % list.len()].clone())
    }
}
