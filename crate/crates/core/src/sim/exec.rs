//! Action state machine over an occupancy grid.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::astar::astar;
use super::grid::{Cell, Occupancy, OccupancyGrid};
use super::SimError;
use crate::floorplan::{NavTask, Orientation};
use crate::grammar::{DoorStates, Plan, Verb};

/// Manhattan distance in cells within which the robot can reach a door.
pub const REACH_CELLS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Cell,
    pub current_room: String,
    pub open_doors: BTreeSet<String>,
    pub action_cursor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecOutcome {
    Success,
    Ok,
    GoalNotReached,
    UnknownTarget,
    NotOnBoundary,
    NotAdjacent,
    DoorClosed,
    NoPath,
    ApproachBlocked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub index: usize,
    pub action: String,
    pub path: Vec<Cell>,
    pub outcome: ExecOutcome,
    /// Distance travelled so far, in map units.
    pub cumulative_length: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionLog {
    pub map_id: String,
    pub start_room: String,
    pub goal_room: String,
    pub records: Vec<ActionRecord>,
    pub outcome: ExecOutcome,
    pub failing_index: Option<usize>,
    pub final_state: RobotState,
    pub total_length: f64,
}

impl ExecutionLog {
    pub fn succeeded(&self) -> bool {
        self.outcome == ExecOutcome::Success
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecOptions {
    /// OpenDoor and GoThrough require the robot to already be within reach of
    /// the door. Otherwise the robot first drives to the door by itself.
    pub pedantic: bool,
}

/// Free cell in front of a door on `from_room`'s side: starting at the door
/// cell nearest the door midpoint, walk across the wall toward the room.
pub fn approach_pose(grid: &OccupancyGrid, door_id: &str, from_room: &str) -> Result<Cell, SimError> {
    let d = grid.door_index(door_id).ok_or_else(|| SimError::UnknownDoor(door_id.to_string()))?;
    let r = grid.room_index(from_room).ok_or_else(|| SimError::UnknownRoom(from_room.to_string()))?;
    approach(grid, d, r)
}

fn approach(grid: &OccupancyGrid, d: usize, r: usize) -> Result<Cell, SimError> {
    let door = &grid.doors[d];
    if !door.rooms.contains(&r) {
        return Err(SimError::NotOnBoundary {
            door: door.id.clone(),
            room: grid.rooms[r].id.clone(),
        });
    }
    let blocked = || SimError::ApproachBlocked {
        door: door.id.clone(),
        room: grid.rooms[r].id.clone(),
    };
    let center = door
        .cells
        .iter()
        .copied()
        .min_by(|a, b| {
            let da = grid.center(*a).distance(door.midpoint);
            let db = grid.center(*b).distance(door.midpoint);
            da.total_cmp(&db).then((a.row, a.col).cmp(&(b.row, b.col)))
        })
        .ok_or_else(blocked)?;
    let steps: [(isize, isize); 2] = match door.orientation {
        Orientation::Vertical => [(0, -1), (0, 1)],
        Orientation::Horizontal => [(-1, 0), (1, 0)],
    };
    for (dr, dc) in steps {
        let mut cell = center;
        while let (Some(row), Some(col)) = (cell.row.checked_add_signed(dr), cell.col.checked_add_signed(dc)) {
            cell = Cell::new(row, col);
            if !grid.contains(cell) {
                break;
            }
            match grid.get(cell) {
                Occupancy::Door(i) if i == d => continue,
                Occupancy::Free if grid.room_index_at(cell) == Some(r) => return Ok(cell),
                _ => break,
            }
        }
    }
    Err(blocked())
}

fn within_reach(grid: &OccupancyGrid, pos: Cell, d: usize) -> bool {
    grid.doors[d].cells.iter().any(|c| c.manhattan(pos) <= REACH_CELLS)
}

fn initial_mask(grid: &OccupancyGrid, doors: &DoorStates) -> Vec<bool> {
    grid.doors
        .iter()
        .map(|d| doors.0.get(&d.id).copied().unwrap_or(d.open_by_default))
        .collect()
}

pub fn execute(grid: &OccupancyGrid, plan: &Plan, task: &NavTask, doors: &DoorStates) -> Result<ExecutionLog, SimError> {
    execute_with(grid, plan, task, doors, &ExecOptions::default())
}

struct Step {
    path: Vec<Cell>,
    result: Result<(), (ExecOutcome, String)>,
}

impl Step {
    fn fail(outcome: ExecOutcome, detail: String) -> Self {
        Self {
            path: Vec::new(),
            result: Err((outcome, detail)),
        }
    }
}

/// Runs the plan from the start room's anchor cell, stopping at the first
/// action that cannot be carried out.
pub fn execute_with(
    grid: &OccupancyGrid,
    plan: &Plan,
    task: &NavTask,
    doors: &DoorStates,
    options: &ExecOptions,
) -> Result<ExecutionLog, SimError> {
    let start = grid
        .room_index(&task.start_room)
        .ok_or_else(|| SimError::UnknownRoom(task.start_room.clone()))?;
    grid.room_index(&task.goal_room)
        .ok_or_else(|| SimError::UnknownRoom(task.goal_room.clone()))?;

    let mut open = initial_mask(grid, doors);
    let mut pos = grid.rooms[start].anchor;
    let mut room = start;
    let mut records = Vec::with_capacity(plan.len());
    let mut total = 0.0;
    let mut failure = None;

    for (i, action) in plan.actions.iter().enumerate() {
        let step = run_action(grid, &mut open, &mut pos, &mut room, action.verb, &action.target, options);
        total += step.path.len().saturating_sub(1) as f64 * grid.resolution;
        let (outcome, detail) = match step.result {
            Ok(()) => (ExecOutcome::Ok, String::new()),
            Err((outcome, detail)) => (outcome, detail),
        };
        records.push(ActionRecord {
            index: i,
            action: action.to_string(),
            path: step.path,
            outcome,
            cumulative_length: total,
            detail,
        });
        if outcome != ExecOutcome::Ok {
            failure = Some((i, outcome));
            break;
        }
    }

    let (outcome, failing_index) = match failure {
        Some((i, outcome)) => (outcome, Some(i)),
        None if grid.rooms[room].id == task.goal_room => (ExecOutcome::Success, None),
        None => (ExecOutcome::GoalNotReached, None),
    };
    let open_doors = grid
        .doors
        .iter()
        .zip(&open)
        .filter(|(_, o)| **o)
        .map(|(d, _)| d.id.clone())
        .collect();
    Ok(ExecutionLog {
        map_id: task.map_id.clone(),
        start_room: task.start_room.clone(),
        goal_room: task.goal_room.clone(),
        final_state: RobotState {
            position: pos,
            current_room: grid.rooms[room].id.clone(),
            open_doors,
            action_cursor: records.len(),
        },
        records,
        outcome,
        failing_index,
        total_length: total,
    })
}

/// Mask allowing only the listed doors, and only while they are open.
fn only(open: &[bool], allowed: &[usize]) -> Vec<bool> {
    (0..open.len()).map(|i| open[i] && allowed.contains(&i)).collect()
}

fn drive(grid: &OccupancyGrid, from: Cell, to: Cell, mask: &[bool], path: &mut Vec<Cell>) -> bool {
    match astar(grid, from, to, mask) {
        Some(p) => {
            if path.is_empty() {
                path.extend(p);
            } else {
                path.extend(p.into_iter().skip(1));
            }
            true
        }
        None => false,
    }
}

fn run_action(
    grid: &OccupancyGrid,
    open: &mut [bool],
    pos: &mut Cell,
    room: &mut usize,
    verb: Verb,
    target: &str,
    options: &ExecOptions,
) -> Step {
    let here = grid.rooms[*room].id.clone();
    let mut path = Vec::new();

    if verb == Verb::GoTo {
        let Some(dest) = grid.resolve_room(target) else {
            return Step::fail(ExecOutcome::UnknownTarget, format!("no room `{target}`"));
        };
        let shared: Vec<usize> = (0..grid.doors.len())
            .filter(|&d| {
                let rooms = grid.doors[d].rooms;
                open[d] && rooms.contains(room) && rooms.contains(&dest)
            })
            .collect();
        if dest != *room && shared.is_empty() {
            return Step::fail(
                ExecOutcome::NotAdjacent,
                format!("`{}` shares no open door with `{here}`", grid.rooms[dest].id),
            );
        }
        let goal = grid.rooms[dest].anchor;
        if !drive(grid, *pos, goal, &only(open, &shared), &mut path) {
            return Step::fail(ExecOutcome::NoPath, format!("no path to `{}`", grid.rooms[dest].id));
        }
        *pos = goal;
        *room = dest;
        return Step { path, result: Ok(()) };
    }

    let Some(d) = grid.resolve_door(target) else {
        return Step::fail(ExecOutcome::UnknownTarget, format!("no door `{target}`"));
    };
    let door = &grid.doors[d];
    if !door.rooms.contains(room) {
        return Step::fail(
            ExecOutcome::NotOnBoundary,
            format!("door `{}` is not on the boundary of `{here}`", door.id),
        );
    }
    let near = match approach(grid, d, *room) {
        Ok(c) => c,
        Err(e) => return Step::fail(ExecOutcome::ApproachBlocked, e.to_string()),
    };
    let in_room = only(open, &[]);

    match verb {
        Verb::ApproachDoor => {
            if !drive(grid, *pos, near, &in_room, &mut path) {
                return Step::fail(ExecOutcome::NoPath, format!("no path to door `{}`", door.id));
            }
            *pos = near;
        }
        Verb::OpenDoor => {
            if !within_reach(grid, *pos, d) {
                if options.pedantic {
                    return Step::fail(ExecOutcome::NotAdjacent, format!("door `{}` is out of reach", door.id));
                }
                if !drive(grid, *pos, near, &in_room, &mut path) {
                    return Step::fail(ExecOutcome::NoPath, format!("no path to door `{}`", door.id));
                }
                *pos = near;
            }
            open[d] = true;
        }
        Verb::GoThrough => {
            if !open[d] {
                return Step::fail(ExecOutcome::DoorClosed, format!("door `{}` is closed", door.id));
            }
            if options.pedantic && !within_reach(grid, *pos, d) {
                return Step::fail(ExecOutcome::NotAdjacent, format!("door `{}` is out of reach", door.id));
            }
            let other = if door.rooms[0] == *room { door.rooms[1] } else { door.rooms[0] };
            let far = match approach(grid, d, other) {
                Ok(c) => c,
                Err(e) => return Step::fail(ExecOutcome::ApproachBlocked, e.to_string()),
            };
            if !drive(grid, *pos, far, &only(open, &[d]), &mut path) {
                return Step::fail(ExecOutcome::NoPath, format!("no path through door `{}`", door.id));
            }
            *pos = far;
            *room = other;
        }
        Verb::GoTo => unreachable!(),
    }
    Step { path, result: Ok(()) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::floorplan::{build_connectivity, oracle_plan};
    use crate::grammar::{parse_plan_lines, Profile};
    use crate::sim::rasterize;

    #[test]
    fn approach_pose_on_two_room_fixture() {
        let grid = rasterize(&fixtures::two_room(), 1.0).unwrap();
        // Cell (r, c) is centered at (c - 0.5, r - 0.5). D1 spans y 4..6 at x = 10.5,
        // so its cells are column 11, rows 5 and 6; the row tie goes to row 5.
        let a = approach_pose(&grid, "D1", "A").unwrap();
        let b = approach_pose(&grid, "D1", "B").unwrap();
        assert_eq!(a, Cell::new(5, 10));
        assert_eq!(b, Cell::new(5, 12));
        assert_eq!(grid.room_at(a), Some("A"));
        assert_eq!(grid.room_at(b), Some("B"));
        assert!(matches!(approach_pose(&grid, "D9", "A"), Err(SimError::UnknownDoor(_))));
    }

    #[test]
    fn blocked_approach_is_an_error() {
        let grid = rasterize(&fixtures::two_room(), 1.0).unwrap();
        let blocked = grid.with_wall(Cell::new(5, 10));
        assert!(matches!(
            approach_pose(&blocked, "D1", "A"),
            Err(SimError::ApproachBlocked { .. })
        ));
    }

    #[test]
    fn oracle_plan_on_two_room_fixture() {
        let plan = fixtures::two_room();
        let g = build_connectivity(&plan).unwrap();
        let grid = rasterize(&plan, 1.0).unwrap();
        let task = NavTask::classified(&g, "A", "B").unwrap();
        let log = execute(&grid, &oracle_plan(&g, &task).unwrap(), &task, &DoorStates::all_closed()).unwrap();
        assert!(log.succeeded());
        assert_eq!(log.records.len(), 3);
        assert_eq!(log.final_state.current_room, "B");
        for rec in &log.records {
            for w in rec.path.windows(2) {
                assert_eq!(w[0].manhattan(w[1]), 1);
            }
            assert!(rec.path.iter().all(|c| grid.get(*c) != Occupancy::Wall));
        }
    }

    #[test]
    fn reference_route_executes() {
        let plan = fixtures::original_map_1();
        let g = build_connectivity(&plan).unwrap();
        let grid = rasterize(&plan, 0.5).unwrap();
        let task = NavTask::classified(&g, "Terrasse Couverte", "Chambre 1").unwrap();
        let oracle = oracle_plan(&g, &task).unwrap();
        for pedantic in [false, true] {
            let log = execute_with(&grid, &oracle, &task, &DoorStates::all_closed(), &ExecOptions { pedantic }).unwrap();
            assert!(log.succeeded());
            assert_eq!(log.records.len(), 9);
            assert_eq!(log.final_state.current_room, "Chambre 1");
            assert_eq!(log.final_state.open_doors.len(), 3);
            let lengths: Vec<f64> = log.records.iter().map(|r| r.cumulative_length).collect();
            assert!(lengths.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(log.total_length, *lengths.last().unwrap());
        }
    }

    #[test]
    fn go_through_before_open_fails_there() {
        let plan = fixtures::original_map_1();
        let g = build_connectivity(&plan).unwrap();
        let grid = rasterize(&plan, 0.5).unwrap();
        let task = NavTask::classified(&g, "Terrasse Couverte", "Hall").unwrap();
        let p = parse_plan_lines("ApproachDoor(D8)\nGoThrough(D8)\nOpenDoor(D8)", Profile::Strict).unwrap();
        let log = execute(&grid, &p, &task, &DoorStates::all_closed()).unwrap();
        assert_eq!((log.outcome, log.failing_index), (ExecOutcome::DoorClosed, Some(1)));
        assert_eq!(log.records.len(), 2);
    }

    #[test]
    fn pedantic_open_needs_reach() {
        let plan = fixtures::two_room();
        let g = build_connectivity(&plan).unwrap();
        let grid = rasterize(&plan, 1.0).unwrap();
        let task = NavTask::classified(&g, "A", "B").unwrap();
        let p = parse_plan_lines("OpenDoor(D1)\nGoThrough(D1)", Profile::Strict).unwrap();
        let relaxed = execute(&grid, &p, &task, &DoorStates::all_closed()).unwrap();
        assert!(relaxed.succeeded());
        let strict = execute_with(&grid, &p, &task, &DoorStates::all_closed(), &ExecOptions { pedantic: true }).unwrap();
        assert_eq!((strict.outcome, strict.failing_index), (ExecOutcome::NotAdjacent, Some(0)));
    }

    #[test]
    fn goto_uses_open_doors_only() {
        let plan = fixtures::two_room();
        let g = build_connectivity(&plan).unwrap();
        let grid = rasterize(&plan, 1.0).unwrap();
        let task = NavTask::classified(&g, "A", "B").unwrap();
        let p = parse_plan_lines("GoTo(B)", Profile::Extended).unwrap();
        let closed = execute(&grid, &p, &task, &DoorStates::all_closed()).unwrap();
        assert_eq!(closed.outcome, ExecOutcome::NotAdjacent);
        let open = execute(&grid, &p, &task, &DoorStates::with_open(["D1"])).unwrap();
        assert!(open.succeeded());
        assert_eq!(open.final_state.position, grid.anchor("B").unwrap());
    }

    #[test]
    fn log_serializes() {
        let plan = fixtures::two_room();
        let g = build_connectivity(&plan).unwrap();
        let grid = rasterize(&plan, 1.0).unwrap();
        let task = NavTask::classified(&g, "A", "B").unwrap();
        let log = execute(&grid, &oracle_plan(&g, &task).unwrap(), &task, &DoorStates::all_closed()).unwrap();
        let json = serde_json::to_value(&log).unwrap();
        assert_eq!(json["outcome"], "success");
        assert_eq!(json["records"][0]["outcome"], "ok");
        assert_eq!(json["records"][0]["path"][0], serde_json::json!({"row": 6, "col": 6}));
        let back: ExecutionLog = serde_json::from_value(json).unwrap();
        assert_eq!(back, log);
    }
}
