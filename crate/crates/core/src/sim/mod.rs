//! Grid-level execution of navigation plans: rasterization, A* path
//! planning, an action state machine and image export.

mod astar;
mod exec;
mod grid;
mod render;

use thiserror::Error;

use crate::floorplan::MapError;
pub use astar::{astar, bfs_distance};
pub use exec::{approach_pose, execute, execute_with, ActionRecord, ExecOptions, ExecOutcome, ExecutionLog, RobotState};
pub use grid::{rasterize, Cell, Occupancy, OccupancyGrid};
pub use render::{render_png, RenderOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("resolution must be finite and > 0, got {0}")]
    BadResolution(f64),
    #[error("door `{0}` is sealed at this resolution (needs resolution <= width / 2)")]
    DoorSealed(String),
    #[error("resolution {resolution} exceeds wall thickness {wall_thickness}; walls would vanish")]
    WallsTooThin { resolution: f64, wall_thickness: f64 },
    #[error("room `{0}` covers no cell centers at this resolution")]
    RoomVanished(String),
    #[error("rooms `{}` and `{}` touch without a wall between them", .0.0, .0.1)]
    RoomsMerged((String, String)),
    #[error("no door `{0}` in grid")]
    UnknownDoor(String),
    #[error("no room `{0}` in grid")]
    UnknownRoom(String),
    #[error("door `{door}` is not on the boundary of `{room}`")]
    NotOnBoundary { door: String, room: String },
    #[error("no free cell in front of door `{door}` on the `{room}` side")]
    ApproachBlocked { door: String, room: String },
    #[error("png encoding failed: {0}")]
    Png(String),
}
