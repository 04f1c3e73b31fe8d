//! Axis-aligned primitives in map units.

use serde::{Deserialize, Serialize};

/// Absolute tolerance for floating-point comparisons of map coordinates.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn translated(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn distance(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self::new(x, y)
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Rectangle stored as origin plus extent, serialized as `[x, y, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for Rect {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        Self { x, y, w, h }
    }
}

impl From<Rect> for [f64; 4] {
    fn from(r: Rect) -> Self {
        [r.x, r.y, r.w, r.h]
    }
}

impl Rect {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn max_x(&self) -> f64 {
        self.x + self.w
    }

    pub fn max_y(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn centroid(&self) -> Point {
        Point::new(self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x - EPS && p.x <= self.max_x() + EPS && p.y >= self.y - EPS && p.y <= self.max_y() + EPS
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x - EPS
            && other.y >= self.y - EPS
            && other.max_x() <= self.max_x() + EPS
            && other.max_y() <= self.max_y() + EPS
    }

    /// True when the interiors intersect (positive-area overlap).
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.max_x() - EPS
            && other.x < self.max_x() - EPS
            && self.y < other.max_y() - EPS
            && other.y < self.max_y() - EPS
    }

    /// True when the closed rectangles share at least a boundary segment or overlap.
    /// Corner-only contact does not count.
    pub fn touches(&self, other: &Rect) -> bool {
        let x_overlap = self.x.max(other.x) <= self.max_x().min(other.max_x()) + EPS;
        let y_overlap = self.y.max(other.y) <= self.max_y().min(other.max_y()) + EPS;
        let x_len = self.max_x().min(other.max_x()) - self.x.max(other.x);
        let y_len = self.max_y().min(other.max_y()) - self.y.max(other.y);
        x_overlap && y_overlap && (x_len > EPS || y_len > EPS)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Rect {
        Rect::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// The four edges as (side, segment), in the order left, right, top, bottom.
    pub fn edges(&self) -> [(Side, Segment); 4] {
        let (x0, y0, x1, y1) = (self.x, self.y, self.max_x(), self.max_y());
        [
            (Side::Left, Segment::new(Point::new(x0, y0), Point::new(x0, y1))),
            (Side::Right, Segment::new(Point::new(x1, y0), Point::new(x1, y1))),
            (Side::Top, Segment::new(Point::new(x0, y0), Point::new(x1, y0))),
            (Side::Bottom, Segment::new(Point::new(x0, y1), Point::new(x1, y1))),
        ]
    }
}

/// Which edge of a rectangle. Map y grows downward, as in image coordinates,
/// so `Top` is the edge at the smallest y.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

impl Side {
    /// Unit vector pointing from this edge into the rectangle.
    pub fn inward(self) -> (f64, f64) {
        match self {
            Side::Left => (1.0, 0.0),
            Side::Right => (-1.0, 0.0),
            Side::Top => (0.0, 1.0),
            Side::Bottom => (0.0, -1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[Point; 2]", into = "[Point; 2]")]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl From<[Point; 2]> for Segment {
    fn from([a, b]: [Point; 2]) -> Self {
        Self { a, b }
    }
}

impl From<Segment> for [Point; 2] {
    fn from(s: Segment) -> Self {
        [s.a, s.b]
    }
}

impl Segment {
    pub const fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }

    pub fn midpoint(&self) -> Point {
        Point::new((self.a.x + self.b.x) / 2.0, (self.a.y + self.b.y) / 2.0)
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// `None` for diagonal or degenerate segments.
    pub fn orientation(&self) -> Option<Orientation> {
        let dx = (self.a.x - self.b.x).abs();
        let dy = (self.a.y - self.b.y).abs();
        if dy <= EPS && dx > EPS {
            Some(Orientation::Horizontal)
        } else if dx <= EPS && dy > EPS {
            Some(Orientation::Vertical)
        } else {
            None
        }
    }

    /// Interval covered along the segment's own axis.
    pub fn span(&self) -> (f64, f64) {
        match self.orientation() {
            Some(Orientation::Horizontal) => (self.a.x.min(self.b.x), self.a.x.max(self.b.x)),
            _ => (self.a.y.min(self.b.y), self.a.y.max(self.b.y)),
        }
    }

    /// Constant coordinate perpendicular to the segment's axis.
    pub fn offset(&self) -> f64 {
        match self.orientation() {
            Some(Orientation::Horizontal) => self.a.y,
            _ => self.a.x,
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Segment {
        Segment::new(self.a.translated(dx, dy), self.b.translated(dx, dy))
    }

    /// Shortest distance from `p` to any point of the segment.
    pub fn distance_to(&self, p: Point) -> f64 {
        let (vx, vy) = (self.b.x - self.a.x, self.b.y - self.a.y);
        let len2 = vx * vx + vy * vy;
        if len2 <= EPS {
            return p.distance(self.a);
        }
        let t = (((p.x - self.a.x) * vx + (p.y - self.a.y) * vy) / len2).clamp(0.0, 1.0);
        p.distance(Point::new(self.a.x + t * vx, self.a.y + t * vy))
    }
}

/// Finds an edge of `rect` that is parallel to `seg`, lies within `tolerance`
/// of it, and whose extent covers the segment's span.
pub fn facing_edge(rect: &Rect, seg: &Segment, tolerance: f64) -> Option<Side> {
    let orientation = seg.orientation()?;
    let (s0, s1) = seg.span();
    rect.edges().into_iter().find_map(|(side, edge)| {
        if edge.orientation() != Some(orientation) {
            return None;
        }
        let (e0, e1) = edge.span();
        let covers = s0 >= e0 - EPS && s1 <= e1 + EPS;
        let near = (edge.offset() - seg.offset()).abs() <= tolerance + EPS;
        (covers && near).then_some(side)
    })
}
