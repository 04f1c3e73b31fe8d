//! Rasterized floor plans.
//!
//! The grid covers the map bounds plus a one-cell wall margin. Cell
//! `(row, col)` has its center at
//! `origin + ((col + 0.5) * resolution, (row + 0.5) * resolution)`, so rows grow
//! with map y (downward, as in the floor-plan image).

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::floorplan::{FloorPlan, Orientation, Point};
use crate::ids;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Occupancy {
    Free,
    Wall,
    /// Index into [`OccupancyGrid::door_ids`].
    Door(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DoorInfo {
    pub id: String,
    pub rooms: [usize; 2],
    pub orientation: Orientation,
    pub midpoint: Point,
    pub open_by_default: bool,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RoomInfo {
    pub id: String,
    pub name: String,
    pub anchor: Cell,
}

/// Immutable once built; share freely between executions.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    pub origin: Point,
    cells: Vec<Occupancy>,
    room_of: Vec<Option<usize>>,
    pub(crate) doors: Vec<DoorInfo>,
    pub(crate) rooms: Vec<RoomInfo>,
}

impl OccupancyGrid {
    /// Grid without rooms or doors, used for standalone path planning.
    pub fn from_occupancy(width: usize, height: usize, cells: Vec<Occupancy>) -> Self {
        assert_eq!(cells.len(), width * height);
        assert!(cells.iter().all(|c| !matches!(c, Occupancy::Door(_))));
        Self {
            resolution: 1.0,
            width,
            height,
            origin: Point::new(0.0, 0.0),
            cells,
            room_of: vec![None; width * height],
            doors: Vec::new(),
            rooms: Vec::new(),
        }
    }

    fn index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    pub fn get(&self, cell: Cell) -> Occupancy {
        self.cells[self.index(cell)]
    }

    pub fn cells(&self) -> &[Occupancy] {
        &self.cells
    }

    /// Room whose interior holds this cell. Door and wall cells have none.
    pub fn room_at(&self, cell: Cell) -> Option<&str> {
        self.room_of[self.index(cell)].map(|r| self.rooms[r].id.as_str())
    }

    pub(crate) fn room_index_at(&self, cell: Cell) -> Option<usize> {
        self.room_of[self.index(cell)]
    }

    pub fn center(&self, cell: Cell) -> Point {
        Point::new(
            self.origin.x + (cell.col as f64 + 0.5) * self.resolution,
            self.origin.y + (cell.row as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell_at(&self, p: Point) -> Option<Cell> {
        let col = ((p.x - self.origin.x) / self.resolution).floor();
        let row = ((p.y - self.origin.y) / self.resolution).floor();
        if col < 0.0 || row < 0.0 {
            return None;
        }
        let cell = Cell::new(row as usize, col as usize);
        self.contains(cell).then_some(cell)
    }

    pub fn door_ids(&self) -> impl Iterator<Item = &str> {
        self.doors.iter().map(|d| d.id.as_str())
    }

    pub fn door_index(&self, door_id: &str) -> Option<usize> {
        self.doors.iter().position(|d| d.id == door_id)
    }

    pub fn door_cells(&self, door_id: &str) -> &[Cell] {
        self.door_index(door_id).map_or(&[], |i| &self.doors[i].cells)
    }

    pub(crate) fn resolve_door(&self, reference: &str) -> Option<usize> {
        let key = ids::door_key(reference);
        self.doors.iter().position(|d| ids::door_key(&d.id) == key)
    }

    pub(crate) fn resolve_room(&self, reference: &str) -> Option<usize> {
        let key = ids::room_key(reference);
        self.rooms
            .iter()
            .position(|r| ids::room_key(&r.id) == key)
            .or_else(|| self.rooms.iter().position(|r| ids::room_key(&r.name) == key))
    }

    pub(crate) fn room_index(&self, room_id: &str) -> Option<usize> {
        self.rooms.iter().position(|r| r.id == room_id)
    }

    /// Start cell for a room: the cell under its sparse center label.
    pub fn anchor(&self, room_id: &str) -> Option<Cell> {
        self.room_index(room_id).map(|r| self.rooms[r].anchor)
    }

    /// Per-door open flags from a set of open door ids.
    pub fn open_mask(&self, open: &BTreeSet<String>) -> Vec<bool> {
        self.doors.iter().map(|d| open.contains(&d.id)).collect()
    }

    pub fn all_open(&self) -> Vec<bool> {
        vec![true; self.doors.len()]
    }

    pub fn passable(&self, cell: Cell, open: &[bool]) -> bool {
        match self.get(cell) {
            Occupancy::Free => true,
            Occupancy::Wall => false,
            Occupancy::Door(d) => open.get(d).copied().unwrap_or(false),
        }
    }

    /// 4-neighbors in (row, col) order: up, left, right, down.
    pub fn neighbors(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        let Cell { row, col } = cell;
        [
            (row.checked_sub(1), Some(col)),
            (Some(row), col.checked_sub(1)),
            (Some(row), Some(col + 1)),
            (Some(row + 1), Some(col)),
        ]
        .into_iter()
        .filter_map(|(r, c)| Some(Cell::new(r?, c?)))
        .filter(|c| self.contains(*c))
    }

    /// Copy with one cell turned into a wall, e.g. to model an obstacle.
    pub fn with_wall(&self, cell: Cell) -> Self {
        let mut grid = self.clone();
        let i = grid.index(cell);
        grid.cells[i] = Occupancy::Wall;
        grid.room_of[i] = None;
        for door in &mut grid.doors {
            door.cells.retain(|c| *c != cell);
        }
        grid
    }

    /// Binary PGM: wall 0, door 128, free 255. Row 0 is written first.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .cells
            .iter()
            .map(|c| match c {
                Occupancy::Wall => 0,
                Occupancy::Door(_) => 128,
                Occupancy::Free => 255,
            })
            .collect();
        out.write_all(&bytes)
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_pgm(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    /// Connected components of passable cells under `open`.
    pub fn component_count(&self, open: &[bool]) -> usize {
        let mut seen = vec![false; self.cells.len()];
        let mut count = 0;
        for start in 0..self.cells.len() {
            let cell = Cell::new(start / self.width, start % self.width);
            if seen[start] || !self.passable(cell, open) {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut stack = vec![cell];
            while let Some(c) = stack.pop() {
                for n in self.neighbors(c) {
                    let i = self.index(n);
                    if !seen[i] && self.passable(n, open) {
                        seen[i] = true;
                        stack.push(n);
                    }
                }
            }
        }
        count
    }
}

const EPS: f64 = 1e-9;

pub fn rasterize(plan: &FloorPlan, resolution: f64) -> Result<OccupancyGrid, SimError> {
    plan.validate()?;
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(SimError::BadResolution(resolution));
    }
    if let Some(door) = plan.doors.iter().find(|d| resolution > d.width / 2.0 + EPS) {
        return Err(SimError::DoorSealed(door.door_id.clone()));
    }
    if resolution > plan.wall_thickness + EPS {
        return Err(SimError::WallsTooThin {
            resolution,
            wall_thickness: plan.wall_thickness,
        });
    }

    let width = (plan.bounds.w / resolution - EPS).ceil() as usize + 2;
    let height = (plan.bounds.h / resolution - EPS).ceil() as usize + 2;
    let origin = Point::new(plan.bounds.x - resolution, plan.bounds.y - resolution);
    let mut grid = OccupancyGrid {
        resolution,
        width,
        height,
        origin,
        cells: vec![Occupancy::Wall; width * height],
        room_of: vec![None; width * height],
        doors: Vec::new(),
        rooms: Vec::new(),
    };

    for row in 0..height {
        for col in 0..width {
            let cell = Cell::new(row, col);
            let p = grid.center(cell);
            if let Some(r) = plan.rooms.iter().position(|room| room.contains(p)) {
                let i = grid.index(cell);
                grid.cells[i] = Occupancy::Free;
                grid.room_of[i] = Some(r);
            }
        }
    }

    for (d, door) in plan.doors.iter().enumerate() {
        let orientation = door.segment.orientation().expect("validated doors are axis-aligned");
        let mid = door.segment.midpoint();
        let (along_mid, across) = match orientation {
            Orientation::Horizontal => (mid.x, mid.y),
            Orientation::Vertical => (mid.y, mid.x),
        };
        let half = door.width / 2.0;
        let mut cells = Vec::new();
        for row in 0..height {
            for col in 0..width {
                let cell = Cell::new(row, col);
                let i = grid.index(cell);
                if grid.cells[i] != Occupancy::Wall {
                    continue;
                }
                let p = grid.center(cell);
                let (a, c) = match orientation {
                    Orientation::Horizontal => (p.x, p.y),
                    Orientation::Vertical => (p.y, p.x),
                };
                if (a - along_mid).abs() < half - EPS && (c - across).abs() <= plan.wall_thickness + EPS {
                    grid.cells[i] = Occupancy::Door(d);
                    cells.push(cell);
                }
            }
        }
        let rooms = door
            .connects
            .clone()
            .map(|r| plan.rooms.iter().position(|room| room.room_id == r).unwrap());
        grid.doors.push(DoorInfo {
            id: door.door_id.clone(),
            rooms,
            orientation,
            midpoint: mid,
            open_by_default: door.is_open_by_default,
            cells,
        });
    }

    for (r, room) in plan.rooms.iter().enumerate() {
        let members: Vec<Cell> = (0..width * height)
            .filter(|&i| grid.room_of[i] == Some(r))
            .map(|i| Cell::new(i / width, i % width))
            .collect();
        if members.is_empty() {
            return Err(SimError::RoomVanished(room.room_id.clone()));
        }
        let target = room.largest_rect().unwrap().centroid();
        let anchor = grid
            .cell_at(target)
            .filter(|c| grid.room_of[grid.index(*c)] == Some(r))
            .unwrap_or_else(|| {
                let guess = grid.cell_at(target).unwrap_or(members[0]);
                *members
                    .iter()
                    .min_by_key(|c| (c.manhattan(guess), c.row, c.col))
                    .unwrap()
            });
        grid.rooms.push(RoomInfo {
            id: room.room_id.clone(),
            name: room.display_name.clone(),
            anchor,
        });
    }

    check_separation(&grid)?;
    for door in &grid.doors {
        for r in door.rooms {
            let reaches = door.cells.iter().any(|c| grid.neighbors(*c).any(|n| grid.room_of[grid.index(n)] == Some(r)));
            if !reaches {
                return Err(SimError::DoorSealed(door.id.clone()));
            }
        }
    }
    Ok(grid)
}

/// Free cells of different rooms must never be 4-adjacent.
fn check_separation(grid: &OccupancyGrid) -> Result<(), SimError> {
    for row in 0..grid.height {
        for col in 0..grid.width {
            let cell = Cell::new(row, col);
            let Some(a) = grid.room_index_at(cell) else { continue };
            for n in [Cell::new(row, col + 1), Cell::new(row + 1, col)] {
                if !grid.contains(n) {
                    continue;
                }
                if let Some(b) = grid.room_index_at(n) {
                    if a != b {
                        return Err(SimError::RoomsMerged(grid.rooms_pair(a, b)));
                    }
                }
            }
        }
    }
    Ok(())
}

impl OccupancyGrid {
    fn rooms_pair(&self, a: usize, b: usize) -> (String, String) {
        let name = |i: usize| self.rooms.get(i).map_or_else(|| i.to_string(), |r| r.id.clone());
        (name(a), name(b))
    }
}
