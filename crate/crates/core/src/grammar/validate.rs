//! Plan correctness as a decision procedure: only defined actions, every
//! action feasible from the state it runs in, and the final room is the goal.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::parse::ParseError;
use super::plan::{Plan, Verb};
use crate::floorplan::{ConnectivityGraph, NavTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    UnknownAction,
    UnknownTarget,
    InfeasibleAction,
    GoalNotReached,
    Malformed,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Correct => "correct",
            Outcome::UnknownAction => "unknown_action",
            Outcome::UnknownTarget => "unknown_target",
            Outcome::InfeasibleAction => "infeasible_action",
            Outcome::GoalNotReached => "goal_not_reached",
            Outcome::Malformed => "malformed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub failing_index: Option<usize>,
    /// Room occupied before the first action and after each action.
    /// Infeasible actions leave the room unchanged.
    pub trace: Vec<String>,
    pub detail: String,
}

impl Verdict {
    pub fn is_correct(&self) -> bool {
        self.outcome == Outcome::Correct
    }

    /// Verdict for a response that never became a plan.
    pub fn from_parse_error(err: &ParseError, start_room: &str) -> Self {
        Self {
            outcome: err.outcome(),
            failing_index: err.index,
            trace: vec![start_room.to_string()],
            detail: err.to_string(),
        }
    }
}

/// Initial open/closed state per door id. Doors not listed are closed unless
/// the map marks them open by default.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoorStates(pub BTreeMap<String, bool>);

impl DoorStates {
    pub fn all_closed() -> Self {
        Self::default()
    }

    pub fn with_open<I, S>(doors: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(doors.into_iter().map(|d| (d.into(), true)).collect())
    }

    pub fn is_open(&self, door_id: &str) -> bool {
        self.0.get(door_id).copied().unwrap_or(false)
    }

    /// Set of doors open at the start, including open-by-default ones.
    pub fn initially_open(&self, graph: &ConnectivityGraph) -> BTreeSet<String> {
        graph
            .edges
            .iter()
            .filter(|e| match self.0.get(&e.door_id) {
                Some(&open) => open,
                None => e.open_by_default,
            })
            .map(|e| e.door_id.clone())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidateOptions {
    /// Require OpenDoor(d) and GoThrough(d) to happen while standing at `d`,
    /// i.e. after ApproachDoor(d) or GoThrough(d) with no movement in between.
    pub pedantic: bool,
}

pub fn validate_plan(graph: &ConnectivityGraph, task: &NavTask, plan: &Plan, doors: &DoorStates) -> Verdict {
    validate_plan_with(graph, task, plan, doors, &ValidateOptions::default())
}

pub fn validate_plan_with(
    graph: &ConnectivityGraph,
    task: &NavTask,
    plan: &Plan,
    doors: &DoorStates,
    options: &ValidateOptions,
) -> Verdict {
    let start = task.start_room.as_str();
    if !graph.has_room(start) || !graph.has_room(&task.goal_room) {
        return Verdict {
            outcome: Outcome::Malformed,
            failing_index: None,
            trace: vec![start.to_string()],
            detail: format!(
                "task rooms `{}` -> `{}` are not both in map `{}`",
                task.start_room, task.goal_room, graph.map_id
            ),
        };
    }

    let mut open = doors.initially_open(graph);
    let mut room: String = start.to_string();
    let mut at_door: Option<String> = None;
    let mut trace = Vec::with_capacity(plan.len() + 1);
    trace.push(room.clone());
    let mut failure: Option<(usize, Outcome, String)> = None;

    for (i, action) in plan.actions.iter().enumerate() {
        let step = step(graph, &mut open, &mut room, &mut at_door, action.verb, &action.target, options);
        if let Err((outcome, why)) = step {
            if failure.is_none() {
                failure = Some((i, outcome, format!("action {i} `{action}`: {why}")));
            }
        }
        trace.push(room.clone());
    }

    let (outcome, failing_index, detail) = match failure {
        Some((i, outcome, detail)) => (outcome, Some(i), detail),
        None if room == task.goal_room => (Outcome::Correct, None, format!("reached `{room}`")),
        None => (
            Outcome::GoalNotReached,
            None,
            format!("plan ends in `{room}`, goal is `{}`", task.goal_room),
        ),
    };
    Verdict {
        outcome,
        failing_index,
        trace,
        detail,
    }
}

type StepResult = Result<(), (Outcome, String)>;

fn step(
    graph: &ConnectivityGraph,
    open: &mut BTreeSet<String>,
    room: &mut String,
    at_door: &mut Option<String>,
    verb: Verb,
    target: &str,
    options: &ValidateOptions,
) -> StepResult {
    if verb == Verb::GoTo {
        let Some(dest) = graph.resolve_room(target) else {
            return Err((Outcome::UnknownTarget, format!("no room `{target}`")));
        };
        let reachable = dest == room.as_str()
            || graph
                .doors_of(room)
                .any(|e| e.other_side(room) == Some(dest) && open.contains(&e.door_id));
        if !reachable {
            return Err((
                Outcome::InfeasibleAction,
                format!("`{dest}` shares no open door with `{room}`"),
            ));
        }
        *room = dest.to_string();
        *at_door = None;
        return Ok(());
    }

    let Some(edge) = graph.resolve_door(target) else {
        return Err((Outcome::UnknownTarget, format!("no door `{target}`")));
    };
    let door = edge.door_id.as_str();
    if !edge.touches(room) {
        return Err((
            Outcome::InfeasibleAction,
            format!("door `{door}` is not on the boundary of `{room}`"),
        ));
    }
    let standing_at = at_door.as_deref() == Some(door);
    match verb {
        Verb::ApproachDoor => {
            *at_door = Some(door.to_string());
        }
        Verb::OpenDoor => {
            if options.pedantic && !standing_at {
                return Err((Outcome::InfeasibleAction, format!("door `{door}` was not approached")));
            }
            open.insert(door.to_string());
        }
        Verb::GoThrough => {
            if !open.contains(door) {
                return Err((Outcome::InfeasibleAction, format!("door `{door}` is closed")));
            }
            if options.pedantic && !standing_at {
                return Err((Outcome::InfeasibleAction, format!("door `{door}` was not approached")));
            }
            *room = edge.other_side(room).unwrap().to_string();
            *at_door = Some(door.to_string());
        }
        Verb::GoTo => unreachable!(),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::floorplan::{build_connectivity, oracle_plan, Difficulty};
    use crate::grammar::{parse_plan_lines, Action, Profile};

    fn setup() -> (ConnectivityGraph, NavTask) {
        let g = build_connectivity(&fixtures::original_map_1()).unwrap();
        let t = NavTask::classified(&g, "Terrasse Couverte", "Chambre 1").unwrap();
        (g, t)
    }

    fn lines(text: &str) -> Plan {
        parse_plan_lines(text, Profile::Extended).unwrap()
    }

    #[test]
    fn reference_route_is_correct() {
        let (g, t) = setup();
        let plan = oracle_plan(&g, &t).unwrap();
        let v = validate_plan(&g, &t, &plan, &DoorStates::all_closed());
        assert_eq!(v.outcome, Outcome::Correct);
        assert_eq!(v.failing_index, None);
        assert_eq!(v.trace.len(), 10);
        assert_eq!(v.trace.last().unwrap(), "Chambre 1");
        let pedantic = validate_plan_with(&g, &t, &plan, &DoorStates::all_closed(), &ValidateOptions { pedantic: true });
        assert!(pedantic.is_correct());
    }

    #[test]
    fn dropping_last_action_stops_one_room_short() {
        let (g, t) = setup();
        let mut plan = oracle_plan(&g, &t).unwrap();
        plan.actions.pop();
        let v = validate_plan(&g, &t, &plan, &DoorStates::all_closed());
        assert_eq!(v.outcome, Outcome::GoalNotReached);
        assert_eq!(v.trace.last().unwrap(), "Degagement");
    }

    #[test]
    fn opening_a_distant_door_is_infeasible() {
        let (g, t) = setup();
        let plan = lines("ApproachDoor(D8)\nOpenDoor(D3)\nGoThrough(D8)");
        let v = validate_plan(&g, &t, &plan, &DoorStates::all_closed());
        assert_eq!(v.outcome, Outcome::InfeasibleAction);
        assert_eq!(v.failing_index, Some(1));
        assert_eq!(v.trace.len(), 4);
        assert_eq!(v.trace[0], "Terrasse Couverte");
    }

    #[test]
    fn empty_plan_with_start_equal_goal() {
        let (g, _) = setup();
        let t = NavTask::classified(&g, "Hall", "Hall").unwrap();
        assert_eq!(t.difficulty, Difficulty::Degenerate);
        let v = validate_plan(&g, &t, &Plan::empty(Profile::Strict), &DoorStates::all_closed());
        assert!(v.is_correct());
        assert_eq!(v.trace, vec!["Hall"]);
    }

    #[test]
    fn closed_doors_block_and_open_doors_pass() {
        let (g, t) = setup();
        let plan = lines("GoThrough(D8)");
        let hall = NavTask {
            goal_room: "Hall".into(),
            ..t.clone()
        };
        assert_eq!(
            validate_plan(&g, &hall, &plan, &DoorStates::all_closed()).outcome,
            Outcome::InfeasibleAction
        );
        assert!(validate_plan(&g, &hall, &plan, &DoorStates::with_open(["D8"])).is_correct());
    }

    #[test]
    fn unknown_targets() {
        let (g, t) = setup();
        let v = validate_plan(&g, &t, &lines("ApproachDoor(D99)"), &DoorStates::all_closed());
        assert_eq!((v.outcome, v.failing_index), (Outcome::UnknownTarget, Some(0)));
        // A room name given to a door verb is not a door.
        let v = validate_plan(&g, &t, &lines("OpenDoor(Hall)"), &DoorStates::all_closed());
        assert_eq!(v.outcome, Outcome::UnknownTarget);
        let v = validate_plan(&g, &t, &lines("GoTo(Attic)"), &DoorStates::all_closed());
        assert_eq!(v.outcome, Outcome::UnknownTarget);
    }

    #[test]
    fn normalized_targets_resolve() {
        let (g, t) = setup();
        let plan = lines(
            "ApproachDoor(door d8)\nOpenDoor(D8)\nGoThrough(D8)\nOpenDoor( d7 )\nGoThrough(Door D7)\nOpenDoor(D4)\nGoThrough(D4)",
        );
        assert!(validate_plan(&g, &t, &plan, &DoorStates::all_closed()).is_correct());
    }

    #[test]
    fn goto_requires_an_open_shared_door() {
        let (g, t) = setup();
        let plan = lines("GoTo(Hall)");
        let hall = NavTask {
            goal_room: "Hall".into(),
            ..t.clone()
        };
        assert_eq!(
            validate_plan(&g, &hall, &plan, &DoorStates::all_closed()).outcome,
            Outcome::InfeasibleAction
        );
        let plan = lines("OpenDoor(D8)\nGoTo(hall)\nGoTo(Hall)");
        assert!(validate_plan(&g, &hall, &plan, &DoorStates::all_closed()).is_correct());
        // Two rooms away is never a single GoTo.
        let plan = lines("OpenDoor(D8)\nGoTo(Degagement)");
        let v = validate_plan(&g, &t, &plan, &DoorStates::with_open(["D7"]));
        assert_eq!((v.outcome, v.failing_index), (Outcome::InfeasibleAction, Some(1)));
    }

    #[test]
    fn pedantic_mode_requires_the_triple_order() {
        let (g, t) = setup();
        let plan = lines("OpenDoor(D8)\nGoThrough(D8)");
        let hall = NavTask {
            goal_room: "Hall".into(),
            ..t.clone()
        };
        assert!(validate_plan(&g, &hall, &plan, &DoorStates::all_closed()).is_correct());
        let strict = ValidateOptions { pedantic: true };
        let v = validate_plan_with(&g, &hall, &plan, &DoorStates::all_closed(), &strict);
        assert_eq!((v.outcome, v.failing_index), (Outcome::InfeasibleAction, Some(0)));
        // Approaching another door in between breaks the chain.
        let plan = lines("ApproachDoor(D8)\nApproachDoor(D9)\nOpenDoor(D8)\nGoThrough(D8)");
        let v = validate_plan_with(&g, &hall, &plan, &DoorStates::all_closed(), &strict);
        assert_eq!(v.failing_index, Some(2));
    }

    #[test]
    fn duplicates_are_no_ops() {
        let (g, t) = setup();
        let mut plan = oracle_plan(&g, &t).unwrap();
        plan.actions.insert(0, Action::new(Verb::ApproachDoor, "D8"));
        plan.actions.insert(2, Action::new(Verb::OpenDoor, "D8"));
        assert!(validate_plan(&g, &t, &plan, &DoorStates::all_closed()).is_correct());
    }

    #[test]
    fn verdict_json_shape() {
        let (g, t) = setup();
        let v = validate_plan(&g, &t, &lines("OpenDoor(D3)"), &DoorStates::all_closed());
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["outcome"], "infeasible_action");
        assert_eq!(json["failing_index"], 0);
        assert_eq!(json["trace"], serde_json::json!(["Terrasse Couverte", "Terrasse Couverte"]));
        assert!(json["detail"].as_str().unwrap().contains("D3"));
    }
}
