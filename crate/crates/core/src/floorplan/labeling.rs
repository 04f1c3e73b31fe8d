//! Sparse and dense room-labeling schemes.
//!
//! Sparse: one `center` label per room at the centroid of its largest
//! rectangle. Dense: the sparse label, plus one `decision_point` label next to
//! every door of the room, plus one `open_space` label at the centroid of every
//! rectangle larger than a fraction of the map's bounding-box area.

use serde::{Deserialize, Serialize};

use super::geometry::{facing_edge, Point};
use super::{FloorPlan, Label, LabelKind, Room};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelingScheme {
    Sparse,
    Dense,
}

impl LabelingScheme {
    pub fn tag(self) -> &'static str {
        match self {
            LabelingScheme::Sparse => "sparse",
            LabelingScheme::Dense => "dense",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelingOptions {
    /// A rectangle gets an `open_space` label when its area exceeds this
    /// fraction of the bounding-box area.
    pub open_area_fraction: f64,
}

impl Default for LabelingOptions {
    fn default() -> Self {
        Self {
            open_area_fraction: 0.25,
        }
    }
}

/// Replaces all labels of `plan` with the given scheme.
pub fn apply_labeling(plan: &FloorPlan, scheme: LabelingScheme, options: &LabelingOptions) -> FloorPlan {
    let mut labels = Vec::new();
    let open_threshold = options.open_area_fraction * plan.bounds.area();
    for room in &plan.rooms {
        labels.push(center_label(room));
        if scheme == LabelingScheme::Sparse {
            continue;
        }
        for door in plan.doors_of(&room.room_id) {
            if let Some(anchor) = decision_point(room, &door.segment, plan.wall_thickness) {
                labels.push(Label {
                    room_id: room.room_id.clone(),
                    text: room.display_name.clone(),
                    anchor,
                    kind: LabelKind::DecisionPoint,
                });
            }
        }
        for rect in room.rects.iter().filter(|r| r.area() > open_threshold) {
            labels.push(Label {
                room_id: room.room_id.clone(),
                text: room.display_name.clone(),
                anchor: rect.centroid(),
                kind: LabelKind::OpenSpace,
            });
        }
    }
    FloorPlan {
        labels,
        ..plan.clone()
    }
}

fn center_label(room: &Room) -> Label {
    let rect = room.largest_rect().expect("validated rooms have rectangles");
    Label {
        room_id: room.room_id.clone(),
        text: room.display_name.clone(),
        anchor: rect.centroid(),
        kind: LabelKind::Center,
    }
}

/// Point inside `room`, opposite the door midpoint, pushed inward from the wall
/// by at most one wall thickness. Its distance to the door segment is at most
/// twice the wall thickness.
fn decision_point(room: &Room, segment: &super::Segment, wall: f64) -> Option<Point> {
    room.rects.iter().find_map(|rect| {
        let side = facing_edge(rect, segment, wall)?;
        let mid = segment.midpoint();
        let (ix, iy) = side.inward();
        let depth = if ix != 0.0 { rect.w } else { rect.h };
        let inset = wall.min(depth / 2.0);
        let edge_point = if ix != 0.0 {
            let x = if ix > 0.0 { rect.x } else { rect.max_x() };
            Point::new(x, mid.y)
        } else {
            let y = if iy > 0.0 { rect.y } else { rect.max_y() };
            Point::new(mid.x, y)
        };
        Some(edge_point.translated(ix * inset, iy * inset))
    })
}
