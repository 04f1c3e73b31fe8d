//! Structured floor-plan maps: rooms as rectangle unions, doors as wall
//! segments, and room labels.

pub mod geometry;
mod graph;
mod io;
mod labeling;
mod transform;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids;
pub use geometry::{Orientation, Point, Rect, Segment, Side};
pub use graph::{
    build_connectivity, classify_task, oracle_plan, room_hop_distance, ConnectivityGraph,
    Difficulty, Edge, GraphError, NavTask, TaskClass,
};
pub use io::{LoadMode, Loaded};
pub use labeling::{apply_labeling, LabelingOptions, LabelingScheme};
pub use transform::{double_map, BridgeSpec, TransformError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("invalid map JSON: {0}")]
    Json(String),
    #[error("unknown keys in map document: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
    #[error("bounds must be finite with positive extent")]
    BadBounds,
    #[error("wall_thickness must be finite and > 0, got {0}")]
    BadWallThickness(f64),
    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),
    #[error("room `{0}` has no rectangles")]
    EmptyRoom(String),
    #[error("room `{0}` has a rectangle with non-positive or non-finite extent")]
    DegenerateRect(String),
    #[error("room `{0}` is not connected (its rectangles do not touch)")]
    DisconnectedRoom(String),
    #[error("room `{0}` extends outside the map bounds")]
    RoomOutOfBounds(String),
    #[error("rooms `{0}` and `{1}` overlap")]
    RoomsOverlap(String, String),
    #[error("door `{0}` must connect two distinct rooms")]
    DoorSelfLoop(String),
    #[error("door `{door}` references unknown room `{room}`")]
    DoorUnknownRoom { door: String, room: String },
    #[error("door `{0}` segment is not axis-aligned")]
    DoorNotAxisAligned(String),
    #[error("door `{0}` width must be > 0")]
    DoorWidth(String),
    #[error("door `{door}` segment does not lie on a wall of room `{room}`")]
    DoorOffBoundary { door: String, room: String },
    #[error("label `{text}` references unknown room `{room}`")]
    LabelUnknownRoom { room: String, text: String },
    #[error("label `{text}` anchor lies outside room `{room}`")]
    LabelOutsideRoom { room: String, text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    #[serde(rename = "id")]
    pub room_id: String,
    #[serde(rename = "name")]
    pub display_name: String,
    pub rects: Vec<Rect>,
}

impl Room {
    pub fn contains(&self, p: Point) -> bool {
        self.rects.iter().any(|r| r.contains(p))
    }

    /// First rectangle with the largest area.
    pub fn largest_rect(&self) -> Option<&Rect> {
        self.rects
            .iter()
            .fold(None, |best: Option<&Rect>, r| match best {
                Some(b) if b.area() >= r.area() => Some(b),
                _ => Some(r),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Door {
    #[serde(rename = "id")]
    pub door_id: String,
    #[serde(rename = "rooms")]
    pub connects: [String; 2],
    pub segment: Segment,
    pub width: f64,
    #[serde(rename = "open_by_default", default, skip_serializing_if = "is_false")]
    pub is_open_by_default: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Door {
    pub fn other_side(&self, room_id: &str) -> Option<&str> {
        match &self.connects {
            [a, b] if a == room_id => Some(b),
            [a, b] if b == room_id => Some(a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Center,
    DecisionPoint,
    OpenSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Label {
    #[serde(rename = "room")]
    pub room_id: String,
    pub text: String,
    pub anchor: Point,
    pub kind: LabelKind,
}

/// One map. Construct through [`FloorPlan::new`] or the JSON loaders so the
/// invariants are checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorPlan {
    pub map_id: String,
    pub bounds: Rect,
    pub wall_thickness: f64,
    pub rooms: Vec<Room>,
    pub doors: Vec<Door>,
    #[serde(default)]
    pub labels: Vec<Label>,
}

impl fmt::Display for FloorPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} rooms, {} doors, {} labels)",
            self.map_id,
            self.rooms.len(),
            self.doors.len(),
            self.labels.len()
        )
    }
}

impl FloorPlan {
    pub fn new(
        map_id: impl Into<String>,
        bounds: Rect,
        wall_thickness: f64,
        rooms: Vec<Room>,
        doors: Vec<Door>,
        labels: Vec<Label>,
    ) -> Result<Self, MapError> {
        let plan = Self {
            map_id: map_id.into(),
            bounds,
            wall_thickness,
            rooms,
            doors,
            labels,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn room(&self, room_id: &str) -> Option<&Room> {
        self.rooms.iter().find(|r| r.room_id == room_id)
    }

    pub fn door(&self, door_id: &str) -> Option<&Door> {
        self.doors.iter().find(|d| d.door_id == door_id)
    }

    /// Resolves a user-supplied room reference against ids and display names
    /// using the normalization rules in [`crate::ids`].
    pub fn resolve_room(&self, reference: &str) -> Option<&Room> {
        let key = ids::room_key(reference);
        self.rooms
            .iter()
            .find(|r| ids::room_key(&r.room_id) == key)
            .or_else(|| self.rooms.iter().find(|r| ids::room_key(&r.display_name) == key))
    }

    /// Room whose geometry contains `p`. Rooms never overlap, so at most one
    /// room matches except on shared edges, where the first wins.
    pub fn room_at(&self, p: Point) -> Option<&Room> {
        self.rooms.iter().find(|r| r.contains(p))
    }

    pub fn doors_of<'a>(&'a self, room_id: &'a str) -> impl Iterator<Item = &'a Door> + 'a {
        self.doors
            .iter()
            .filter(move |d| d.connects.iter().any(|r| r == room_id))
    }

    pub fn validate(&self) -> Result<(), MapError> {
        if !self.bounds.is_finite() || self.bounds.w <= 0.0 || self.bounds.h <= 0.0 {
            return Err(MapError::BadBounds);
        }
        if !(self.wall_thickness.is_finite() && self.wall_thickness > 0.0) {
            return Err(MapError::BadWallThickness(self.wall_thickness));
        }

        let mut seen: HashMap<String, &str> = HashMap::new();
        let all_ids = self
            .rooms
            .iter()
            .map(|r| r.room_id.as_str())
            .chain(self.doors.iter().map(|d| d.door_id.as_str()));
        for id in all_ids {
            if seen.insert(ids::normalize(id), id).is_some() {
                return Err(MapError::DuplicateId(id.to_string()));
            }
        }

        for room in &self.rooms {
            validate_room(room, &self.bounds)?;
        }
        for (i, a) in self.rooms.iter().enumerate() {
            for b in &self.rooms[i + 1..] {
                let overlap = a
                    .rects
                    .iter()
                    .any(|ra| b.rects.iter().any(|rb| ra.overlaps(rb)));
                if overlap {
                    return Err(MapError::RoomsOverlap(a.room_id.clone(), b.room_id.clone()));
                }
            }
        }

        for door in &self.doors {
            self.validate_door(door)?;
        }

        for label in &self.labels {
            let room = self.room(&label.room_id).ok_or_else(|| MapError::LabelUnknownRoom {
                room: label.room_id.clone(),
                text: label.text.clone(),
            })?;
            if !room.contains(label.anchor) {
                return Err(MapError::LabelOutsideRoom {
                    room: label.room_id.clone(),
                    text: label.text.clone(),
                });
            }
        }
        Ok(())
    }

    fn validate_door(&self, door: &Door) -> Result<(), MapError> {
        let [a, b] = &door.connects;
        if a == b {
            return Err(MapError::DoorSelfLoop(door.door_id.clone()));
        }
        if !(door.width.is_finite() && door.width > 0.0) {
            return Err(MapError::DoorWidth(door.door_id.clone()));
        }
        if door.segment.orientation().is_none() {
            return Err(MapError::DoorNotAxisAligned(door.door_id.clone()));
        }
        for room_id in [a, b] {
            let room = self.room(room_id).ok_or_else(|| MapError::DoorUnknownRoom {
                door: door.door_id.clone(),
                room: room_id.clone(),
            })?;
            let on_wall = room
                .rects
                .iter()
                .any(|r| geometry::facing_edge(r, &door.segment, self.wall_thickness).is_some());
            if !on_wall {
                return Err(MapError::DoorOffBoundary {
                    door: door.door_id.clone(),
                    room: room_id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Labels grouped by room, in room order.
    pub fn labels_by_room(&self) -> BTreeMap<&str, Vec<&Label>> {
        let mut out: BTreeMap<&str, Vec<&Label>> = BTreeMap::new();
        for label in &self.labels {
            out.entry(label.room_id.as_str()).or_default().push(label);
        }
        out
    }
}

fn validate_room(room: &Room, bounds: &Rect) -> Result<(), MapError> {
    if room.rects.is_empty() {
        return Err(MapError::EmptyRoom(room.room_id.clone()));
    }
    if room
        .rects
        .iter()
        .any(|r| !r.is_finite() || r.w <= 0.0 || r.h <= 0.0)
    {
        return Err(MapError::DegenerateRect(room.room_id.clone()));
    }
    if !room.rects.iter().all(|r| bounds.contains_rect(r)) {
        return Err(MapError::RoomOutOfBounds(room.room_id.clone()));
    }
    // Flood over the touch relation from the first rectangle.
    let n = room.rects.len();
    let mut reached = vec![false; n];
    let mut stack = vec![0];
    reached[0] = true;
    while let Some(i) = stack.pop() {
        for (j, rect) in room.rects.iter().enumerate() {
            if !reached[j] && room.rects[i].touches(rect) {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    if reached.iter().all(|&r| r) {
        Ok(())
    } else {
        Err(MapError::DisconnectedRoom(room.room_id.clone()))
    }
}
