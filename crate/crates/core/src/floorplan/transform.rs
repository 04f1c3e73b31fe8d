//! Map doubling: two side-by-side copies of a map joined by one extra door.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geometry::{facing_edge, Point, Rect, Segment, EPS};
use super::{Door, FloorPlan, Label, MapError, Room};
use crate::ids;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("bridge room `{0}` is not in the map")]
    UnknownBridgeRoom(String),
    #[error("bridge door between `{left}` and `{right}` does not lie on the seam shared by both copies")]
    BridgeOffBoundary { left: String, right: String },
    #[error(transparent)]
    InvalidMap(#[from] MapError),
}

/// Where to put the added door. The second copy is translated right by the
/// map width plus one wall thickness, so the door sits on the vertical seam
/// between the copies: `left_room` of the first copy must reach the right
/// edge of the bounds and `right_room` of the second copy its left edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub left_room: String,
    pub right_room: String,
    /// Door extent along the seam. When absent the door is centered on the
    /// first overlap of the two rooms' seam-facing walls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<[f64; 2]>,
    /// Defaults to the narrowest existing door (or two wall thicknesses).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

impl BridgeSpec {
    pub fn new(left_room: impl Into<String>, right_room: impl Into<String>) -> Self {
        Self {
            left_room: left_room.into(),
            right_room: right_room.into(),
            span: None,
            width: None,
        }
    }
}

const COPY_SUFFIXES: [(&str, &str); 2] = [("_1", " (1)"), ("_2", " (2)")];

fn copy_plan(plan: &FloorPlan, dx: f64, id_suffix: &str, name_suffix: &str) -> (Vec<Room>, Vec<Door>, Vec<Label>) {
    let rooms = plan
        .rooms
        .iter()
        .map(|r| Room {
            room_id: format!("{}{id_suffix}", r.room_id),
            display_name: format!("{}{name_suffix}", r.display_name),
            rects: r.rects.iter().map(|rect| rect.translated(dx, 0.0)).collect(),
        })
        .collect();
    let doors = plan
        .doors
        .iter()
        .map(|d| Door {
            door_id: format!("{}{id_suffix}", d.door_id),
            connects: d.connects.clone().map(|r| format!("{r}{id_suffix}")),
            segment: d.segment.translated(dx, 0.0),
            width: d.width,
            is_open_by_default: d.is_open_by_default,
        })
        .collect();
    let labels = plan
        .labels
        .iter()
        .map(|l| Label {
            room_id: format!("{}{id_suffix}", l.room_id),
            text: format!("{}{name_suffix}", l.text),
            anchor: l.anchor.translated(dx, 0.0),
            kind: l.kind,
        })
        .collect();
    (rooms, doors, labels)
}

/// Id for the added door: `D` followed by one more than the largest number
/// used by any `D<number>` door id.
fn next_door_id(plan: &FloorPlan) -> String {
    let max = plan.doors.iter().filter_map(|d| ids::door_number(&d.door_id)).max().unwrap_or(0);
    format!("D{}", max + 1)
}

fn seam_span(left: &Room, right: &Room, bounds: &Rect, wall: f64, width: f64) -> Option<[f64; 2]> {
    let near = |a: f64, b: f64| (a - b).abs() <= wall / 2.0 + EPS;
    for l in left.rects.iter().filter(|r| near(r.max_x(), bounds.max_x())) {
        for r in right.rects.iter().filter(|r| near(r.x, bounds.x)) {
            let lo = l.y.max(r.y);
            let hi = l.max_y().min(r.max_y());
            if hi - lo >= width - EPS {
                let mid = (lo + hi) / 2.0;
                return Some([mid - width / 2.0, mid + width / 2.0]);
            }
        }
    }
    None
}

pub fn double_map(plan: &FloorPlan, bridge: &BridgeSpec) -> Result<FloorPlan, TransformError> {
    plan.validate()?;
    let left = plan
        .resolve_room(&bridge.left_room)
        .ok_or_else(|| TransformError::UnknownBridgeRoom(bridge.left_room.clone()))?;
    let right = plan
        .resolve_room(&bridge.right_room)
        .ok_or_else(|| TransformError::UnknownBridgeRoom(bridge.right_room.clone()))?;
    let off_boundary = || TransformError::BridgeOffBoundary {
        left: left.room_id.clone(),
        right: right.room_id.clone(),
    };

    let wall = plan.wall_thickness;
    let width = bridge.width.unwrap_or_else(|| {
        plan.doors
            .iter()
            .map(|d| d.width)
            .reduce(f64::min)
            .unwrap_or(2.0 * wall)
    });
    let span = match bridge.span {
        Some(span) => span,
        None => seam_span(left, right, &plan.bounds, wall, width).ok_or_else(off_boundary)?,
    };

    let dx = plan.bounds.w + wall;
    let seam_x = plan.bounds.max_x() + wall / 2.0;
    let segment = Segment::new(Point::new(seam_x, span[0]), Point::new(seam_x, span[1]));

    let (first_id, first_name) = COPY_SUFFIXES[0];
    let (second_id, second_name) = COPY_SUFFIXES[1];
    let (mut rooms, mut doors, mut labels) = copy_plan(plan, 0.0, first_id, first_name);
    let (rooms_b, doors_b, labels_b) = copy_plan(plan, dx, second_id, second_name);

    let left_id = format!("{}{first_id}", left.room_id);
    let right_id = format!("{}{second_id}", right.room_id);
    let on_seam = |room: &Room| room.rects.iter().any(|r| facing_edge(r, &segment, wall).is_some());
    let left_copy = rooms.iter().find(|r| r.room_id == left_id).unwrap();
    let right_copy = rooms_b.iter().find(|r| r.room_id == right_id).unwrap();
    if !on_seam(left_copy) || !on_seam(right_copy) {
        return Err(off_boundary());
    }

    rooms.extend(rooms_b);
    doors.extend(doors_b);
    labels.extend(labels_b);
    doors.push(Door {
        door_id: next_door_id(plan),
        connects: [left_id, right_id],
        segment,
        width,
        is_open_by_default: false,
    });

    let bounds = Rect::new(plan.bounds.x, plan.bounds.y, 2.0 * plan.bounds.w + wall, plan.bounds.h);
    Ok(FloorPlan::new(
        format!("{}_doubled", plan.map_id),
        bounds,
        wall,
        rooms,
        doors,
        labels,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::floorplan::{build_connectivity, room_hop_distance};

    fn bridge() -> BridgeSpec {
        BridgeSpec::new("Degagement", "Terrasse Couverte")
    }

    #[test]
    fn doubling_counts_and_bridge_id() {
        let plan = fixtures::original_map_1();
        assert_eq!((plan.rooms.len(), plan.doors.len()), (9, 9));
        let doubled = double_map(&plan, &bridge()).unwrap();
        assert_eq!(doubled.rooms.len(), 18);
        assert_eq!(doubled.doors.len(), 19);
        let added = doubled.doors.last().unwrap();
        assert_eq!(added.door_id, "D10");
        assert_eq!(added.connects, ["Degagement_1".to_string(), "Terrasse Couverte_2".to_string()]);
        assert!(build_connectivity(&doubled).unwrap().is_connected());
    }

    #[test]
    fn doubling_twice() {
        let plan = fixtures::original_map_1();
        let once = double_map(&plan, &bridge()).unwrap();
        let twice = double_map(&once, &BridgeSpec::new("Degagement_2", "Terrasse Couverte_1")).unwrap();
        assert_eq!(twice.rooms.len(), 4 * 9);
        assert_eq!(twice.doors.len(), 4 * 9 + 3);
        assert_eq!(twice.doors.last().unwrap().door_id, "D11");
        assert!(build_connectivity(&twice).unwrap().is_connected());
    }

    #[test]
    fn hop_distance_across_bridge_decomposes() {
        let plan = fixtures::original_map_1();
        let g = build_connectivity(&plan).unwrap();
        let doubled = build_connectivity(&double_map(&plan, &bridge()).unwrap()).unwrap();
        for a in &g.nodes {
            for b in &g.nodes {
                let via = room_hop_distance(&g, a, "Degagement").unwrap().unwrap()
                    + 1
                    + room_hop_distance(&g, "Terrasse Couverte", b).unwrap().unwrap();
                let direct = room_hop_distance(&doubled, &format!("{a}_1"), &format!("{b}_2"))
                    .unwrap()
                    .unwrap();
                assert_eq!(direct, via, "{a} -> {b}'");
            }
        }
    }

    #[test]
    fn graph_is_two_copies_plus_one_edge() {
        let plan = fixtures::original_map_1();
        let g = build_connectivity(&plan).unwrap();
        let doubled = build_connectivity(&double_map(&plan, &bridge()).unwrap()).unwrap();
        for (suffix, _) in COPY_SUFFIXES {
            for e in &g.edges {
                let copy = doubled.edge(&format!("{}{suffix}", e.door_id)).unwrap();
                assert_eq!(copy.rooms, e.rooms.clone().map(|r| format!("{r}{suffix}")));
            }
        }
        assert_eq!(doubled.edges.len(), 2 * g.edges.len() + 1);
    }

    #[test]
    fn bridge_errors() {
        let plan = fixtures::original_map_1();
        assert_eq!(
            double_map(&plan, &BridgeSpec::new("Attic", "Hall")),
            Err(TransformError::UnknownBridgeRoom("Attic".into()))
        );
        // Hall is in the middle column and cannot reach the seam.
        assert!(matches!(
            double_map(&plan, &BridgeSpec::new("Hall", "Terrasse Couverte")),
            Err(TransformError::BridgeOffBoundary { .. })
        ));
        let mut explicit = bridge();
        explicit.span = Some([2.0, 4.0]);
        assert!(matches!(double_map(&plan, &explicit), Err(TransformError::BridgeOffBoundary { .. })));
        explicit.span = Some([15.0, 17.0]);
        double_map(&plan, &explicit).unwrap();
    }

    #[test]
    fn labels_follow_their_rooms() {
        let plan = fixtures::original_map_1();
        let doubled = double_map(&plan, &bridge()).unwrap();
        assert_eq!(doubled.labels.len(), 2 * plan.labels.len());
        doubled.validate().unwrap();
        assert!(doubled.labels.iter().any(|l| l.text == "Chambre 1 (2)"));
    }
}
