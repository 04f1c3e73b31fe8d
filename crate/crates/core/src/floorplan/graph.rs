//! Room connectivity: rooms as nodes, doors as (multi-)edges.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FloorPlan, MapError};
use crate::grammar::{Action, Plan, Profile, Verb};
use crate::ids;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error(transparent)]
    InvalidMap(#[from] MapError),
    #[error("unknown room `{0}`")]
    UnknownRoom(String),
    #[error("no path from `{from}` to `{to}`")]
    NoPath { from: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub door_id: String,
    pub rooms: [String; 2],
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub open_by_default: bool,
}

impl Edge {
    pub fn other_side(&self, room_id: &str) -> Option<&str> {
        match &self.rooms {
            [a, b] if a == room_id => Some(b),
            [a, b] if b == room_id => Some(a),
            _ => None,
        }
    }

    pub fn touches(&self, room_id: &str) -> bool {
        self.rooms.iter().any(|r| r == room_id)
    }
}

/// Immutable after construction. Nodes are sorted by id and edges by door id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConnectivityGraph {
    pub map_id: String,
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
    #[serde(skip)]
    names: BTreeMap<String, String>,
}

pub fn build_connectivity(plan: &FloorPlan) -> Result<ConnectivityGraph, GraphError> {
    plan.validate()?;
    let mut nodes: Vec<String> = plan.rooms.iter().map(|r| r.room_id.clone()).collect();
    nodes.sort();
    let mut edges: Vec<Edge> = plan
        .doors
        .iter()
        .map(|d| Edge {
            door_id: d.door_id.clone(),
            rooms: d.connects.clone(),
            open_by_default: d.is_open_by_default,
        })
        .collect();
    edges.sort_by(|a, b| a.door_id.cmp(&b.door_id));
    let names = plan
        .rooms
        .iter()
        .map(|r| (r.room_id.clone(), r.display_name.clone()))
        .collect();
    Ok(ConnectivityGraph {
        map_id: plan.map_id.clone(),
        nodes,
        edges,
        names,
    })
}

impl ConnectivityGraph {
    /// Builds a graph directly from edges, for callers without geometry.
    pub fn from_edges(map_id: &str, rooms: &[&str], edges: &[(&str, &str, &str)]) -> Self {
        let mut nodes: Vec<String> = rooms.iter().map(|r| r.to_string()).collect();
        nodes.sort();
        nodes.dedup();
        let mut edges: Vec<Edge> = edges
            .iter()
            .map(|(d, a, b)| Edge {
                door_id: d.to_string(),
                rooms: [a.to_string(), b.to_string()],
                open_by_default: false,
            })
            .collect();
        edges.sort_by(|a, b| a.door_id.cmp(&b.door_id));
        let names = nodes.iter().map(|n| (n.clone(), n.clone())).collect();
        Self {
            map_id: map_id.to_string(),
            nodes,
            edges,
            names,
        }
    }

    pub fn has_room(&self, room_id: &str) -> bool {
        self.nodes.binary_search_by(|n| n.as_str().cmp(room_id)).is_ok()
    }

    pub fn edge(&self, door_id: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.door_id == door_id)
    }

    pub fn display_name(&self, room_id: &str) -> Option<&str> {
        self.names.get(room_id).map(String::as_str)
    }

    /// Edges incident to `room_id`, ordered by door id.
    pub fn doors_of<'a>(&'a self, room_id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.touches(room_id))
    }

    /// Case/whitespace-insensitive lookup by room id, then display name.
    pub fn resolve_room(&self, reference: &str) -> Option<&str> {
        let key = ids::room_key(reference);
        self.nodes
            .iter()
            .find(|n| ids::room_key(n) == key)
            .or_else(|| {
                self.names
                    .iter()
                    .find(|(_, name)| ids::room_key(name) == key)
                    .map(|(id, _)| id)
            })
            .map(String::as_str)
    }

    pub fn resolve_door(&self, reference: &str) -> Option<&Edge> {
        let key = ids::door_key(reference);
        self.edges.iter().find(|e| ids::door_key(&e.door_id) == key)
    }

    fn require(&self, room_id: &str) -> Result<(), GraphError> {
        if self.has_room(room_id) {
            Ok(())
        } else {
            Err(GraphError::UnknownRoom(room_id.to_string()))
        }
    }

    /// Breadth-first door-traversal counts from `source` to every reachable room.
    pub fn distances_from(&self, source: &str) -> Result<HashMap<&str, usize>, GraphError> {
        self.require(source)?;
        let source = self.nodes.iter().find(|n| *n == source).unwrap().as_str();
        let mut dist = HashMap::from([(source, 0usize)]);
        let mut queue = VecDeque::from([source]);
        while let Some(room) = queue.pop_front() {
            let d = dist[room];
            for edge in self.doors_of(room) {
                let next = edge.other_side(room).unwrap();
                if !dist.contains_key(next) {
                    dist.insert(next, d + 1);
                    queue.push_back(next);
                }
            }
        }
        Ok(dist)
    }

    pub fn is_connected(&self) -> bool {
        match self.nodes.first() {
            None => true,
            Some(first) => self.distances_from(first).map(|d| d.len()).unwrap_or(0) == self.nodes.len(),
        }
    }
}

/// Minimum number of door traversals from `a` to `b`; `None` when unreachable.
pub fn room_hop_distance(
    graph: &ConnectivityGraph,
    a: &str,
    b: &str,
) -> Result<Option<usize>, GraphError> {
    graph.require(b)?;
    Ok(graph.distances_from(a)?.get(b).copied())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskClass {
    Easy,
    Hard,
    Other,
}

/// Task difficulty as sampled. `Degenerate` is the only class allowed to have
/// `start_room == goal_room`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Hard,
    Other,
    Degenerate,
}

impl From<TaskClass> for Difficulty {
    fn from(c: TaskClass) -> Self {
        match c {
            TaskClass::Easy => Difficulty::Easy,
            TaskClass::Hard => Difficulty::Hard,
            TaskClass::Other => Difficulty::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NavTask {
    pub map_id: String,
    pub start_room: String,
    pub goal_room: String,
    pub difficulty: Difficulty,
}

impl NavTask {
    /// Builds a task whose difficulty is derived from the graph.
    pub fn classified(graph: &ConnectivityGraph, start: &str, goal: &str) -> Result<Self, GraphError> {
        let difficulty = if start == goal {
            graph.require(start)?;
            Difficulty::Degenerate
        } else {
            classify_rooms(graph, start, goal)?.into()
        };
        Ok(Self {
            map_id: graph.map_id.clone(),
            start_room: start.to_string(),
            goal_room: goal.to_string(),
            difficulty,
        })
    }

    /// Stable short key, used to seed per-task randomness and cache paths.
    pub fn key(&self) -> String {
        format!("{}|{}|{}", self.map_id, self.start_room, self.goal_room)
    }
}

/// Easy: adjacent rooms. Hard: exactly two intermediate rooms on the optimal
/// route (four rooms in total).
pub fn classify_task(graph: &ConnectivityGraph, task: &NavTask) -> Result<TaskClass, GraphError> {
    classify_rooms(graph, &task.start_room, &task.goal_room)
}

fn classify_rooms(graph: &ConnectivityGraph, start: &str, goal: &str) -> Result<TaskClass, GraphError> {
    Ok(match room_hop_distance(graph, start, goal)? {
        Some(1) => TaskClass::Easy,
        Some(3) => TaskClass::Hard,
        _ => TaskClass::Other,
    })
}

/// Ground-truth plan: the Approach/Open/GoThrough triple for each door on a
/// shortest room path. Among equal-length paths the lexicographically smallest
/// door-id sequence wins.
pub fn oracle_plan(graph: &ConnectivityGraph, task: &NavTask) -> Result<Plan, GraphError> {
    let (start, goal) = (task.start_room.as_str(), task.goal_room.as_str());
    graph.require(start)?;
    let to_goal = graph.distances_from(goal)?;
    let Some(&hops) = to_goal.get(start) else {
        return Err(GraphError::NoPath {
            from: start.to_string(),
            to: goal.to_string(),
        });
    };

    let mut actions = Vec::with_capacity(3 * hops);
    let mut current = start;
    for remaining in (0..hops).rev() {
        // Edges are sorted by door id, so the first qualifying edge is the
        // smallest; greedy choice yields the smallest sequence because every
        // candidate continuation has the same length.
        let edge = graph
            .doors_of(current)
            .find(|e| to_goal.get(e.other_side(current).unwrap()) == Some(&remaining))
            .expect("BFS layer has a predecessor edge");
        for verb in [Verb::ApproachDoor, Verb::OpenDoor, Verb::GoThrough] {
            actions.push(Action::new(verb, edge.door_id.clone()));
        }
        current = edge.other_side(current).unwrap();
    }
    Ok(Plan::new(actions, Profile::Strict).expect("door actions are valid in the strict profile"))
}
