//! Maps shipped with the crate, used by tests, examples and the benchmark
//! defaults.
//!
//! `original_map_1` is a 9-room, 9-door house whose unique shortest route from
//! "Terrasse Couverte" to "Chambre 1" crosses D8, D7 and D4.

use crate::floorplan::{FloorPlan, LoadMode};

pub const ORIGINAL_MAP_1: &str = include_str!("../fixtures/original_map_1.json");
pub const ORIGINAL_MAP_2: &str = include_str!("../fixtures/original_map_2.json");
pub const TWO_ROOM: &str = include_str!("../fixtures/two_room.json");

fn parse(text: &str) -> FloorPlan {
    FloorPlan::from_json_str(text, LoadMode::Strict)
        .expect("shipped fixture is valid")
        .plan
}

pub fn original_map_1() -> FloorPlan {
    parse(ORIGINAL_MAP_1)
}

pub fn original_map_2() -> FloorPlan {
    parse(ORIGINAL_MAP_2)
}

pub fn two_room() -> FloorPlan {
    parse(TWO_ROOM)
}

/// Looks up a shipped map by file stem.
pub fn by_name(name: &str) -> Option<FloorPlan> {
    match name {
        "original_map_1" => Some(original_map_1()),
        "original_map_2" => Some(original_map_2()),
        "two_room" => Some(two_room()),
        _ => None,
    }
}

pub fn all() -> Vec<FloorPlan> {
    vec![original_map_1(), original_map_2(), two_room()]
}
