//! Box and polygon arithmetic in continuous pixel coordinates.
//!
//! Pixel `(col, row)` covers the unit square `[col, col + 1) x [row, row + 1)`
//! and its center sits at `(col + 0.5, row + 0.5)`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for boundary tests and zero-area checks.
pub const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned box given by its min and max corners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct HBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl HBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        if !(x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite()) {
            return Err(Error::InvalidBox("non-finite coordinate"));
        }
        if x_min > x_max || y_min > y_max {
            return Err(Error::InvalidBox("min corner exceeds max corner"));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Box `[0, width] x [0, height]`.
    pub fn from_dims(width: u32, height: u32) -> Self {
        Self {
            x_min: 0.0,
            y_min: 0.0,
            x_max: f64::from(width),
            y_max: f64::from(height),
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    /// Closed containment: points on the boundary are inside.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn intersection(&self, other: &HBox) -> Option<HBox> {
        let x_min = self.x_min.max(other.x_min);
        let y_min = self.y_min.max(other.y_min);
        let x_max = self.x_max.min(other.x_max);
        let y_max = self.y_max.min(other.y_max);
        (x_min <= x_max && y_min <= y_max).then_some(HBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn translate(&self, dx: f64, dy: f64) -> HBox {
        HBox {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
        }
    }

    /// Corners in counter-clockwise order (in y-down image space: clockwise).
    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x_min, self.y_min),
            Point::new(self.x_max, self.y_min),
            Point::new(self.x_max, self.y_max),
            Point::new(self.x_min, self.y_max),
        ]
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

impl TryFrom<[f64; 4]> for HBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        HBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<HBox> for [f64; 4] {
    fn from(b: HBox) -> Self {
        b.to_array()
    }
}

/// Rotated box stored as a simple polygon.
///
/// Parsed annotations always carry four corners. Clipping to a tile window
/// can produce up to eight vertices, so the type admits 3..=8.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct RBox {
    vertices: Vec<Point>,
}

impl RBox {
    pub const MAX_VERTICES: usize = 8;

    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 || vertices.len() > Self::MAX_VERTICES {
            return Err(Error::InvalidBox("polygon must have 3 to 8 vertices"));
        }
        if !vertices.iter().all(|p| p.is_finite()) {
            return Err(Error::InvalidBox("non-finite coordinate"));
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if (a.x - b.x).abs() <= EPS && (a.y - b.y).abs() <= EPS {
                return Err(Error::InvalidBox("repeated vertex"));
            }
        }
        if self_intersects(&vertices) {
            return Err(Error::InvalidBox("self-intersecting polygon"));
        }
        let area = polygon_area(&vertices).abs();
        if area <= EPS {
            return Err(Error::DegeneratePolygon { area });
        }
        Ok(Self { vertices })
    }

    pub fn quad(corners: [Point; 4]) -> Result<Self> {
        Self::new(corners.to_vec())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices).abs()
    }

    /// Arithmetic mean of the vertices.
    pub fn vertex_mean(&self) -> Point {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point::new(sx / n, sy / n)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> RBox {
        RBox {
            vertices: self
                .vertices
                .iter()
                .map(|p| Point::new(p.x + dx, p.y + dy))
                .collect(),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(p, &self.vertices)
    }

    /// True when the polygon is exactly the rectangle of its own bounds.
    pub fn is_axis_aligned(&self) -> bool {
        if self.vertices.len() != 4 {
            return false;
        }
        let hb = rbox_to_rhbox(self);
        let corners = hb.corners();
        hb.area() > 0.0
            && corners.iter().all(|c| self.vertices.iter().any(|v| v == c))
    }
}

impl TryFrom<Vec<[f64; 2]>> for RBox {
    type Error = Error;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        RBox::new(v.into_iter().map(|[x, y]| Point::new(x, y)).collect())
    }
}

impl From<RBox> for Vec<[f64; 2]> {
    fn from(r: RBox) -> Self {
        r.vertices.into_iter().map(|p| [p.x, p.y]).collect()
    }
}

/// A region that prompts and oracles can rasterize.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Box(HBox),
    Polygon(RBox),
}

impl Shape {
    pub fn contains(&self, p: Point) -> bool {
        match self {
            Shape::Box(b) => b.contains(p),
            Shape::Polygon(r) => r.contains(p),
        }
    }

    pub fn bounds(&self) -> HBox {
        match self {
            Shape::Box(b) => *b,
            Shape::Polygon(r) => rbox_to_rhbox(r),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Box(b) => b.area(),
            Shape::Polygon(r) => r.area(),
        }
    }
}

/// Minimum circumscribed horizontal rectangle of a rotated box.
pub fn rbox_to_rhbox(r: &RBox) -> HBox {
    let first = r.vertices[0];
    let init = HBox {
        x_min: first.x,
        y_min: first.y,
        x_max: first.x,
        y_max: first.y,
    };
    r.vertices[1..].iter().fold(init, |b, p| HBox {
        x_min: b.x_min.min(p.x),
        y_min: b.y_min.min(p.y),
        x_max: b.x_max.max(p.x),
        y_max: b.y_max.max(p.y),
    })
}

/// Signed shoelace area; positive for counter-clockwise order in y-up axes.
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let twice: f64 = (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum();
    twice / 2.0
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let scale = ((b.x - a.x).abs() + (b.y - a.y).abs()).max(1.0);
    if cross(a, b, p).abs() > EPS * scale {
        return false;
    }
    p.x >= a.x.min(b.x) - EPS
        && p.x <= a.x.max(b.x) + EPS
        && p.y >= a.y.min(b.y) - EPS
        && p.y <= a.y.max(b.y) + EPS
}

/// Crossing-number test with points on the boundary counted as inside.
pub fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(p1, q1, q2) || on_segment(p2, q1, q2) || on_segment(q1, p1, p2) || on_segment(q2, p1, p2)
}

fn self_intersects(poly: &[Point]) -> bool {
    let n = poly.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

#[derive(Clone, Copy)]
enum Edge {
    Left(f64),
    Right(f64),
    Top(f64),
    Bottom(f64),
}

impl Edge {
    fn inside(self, p: Point) -> bool {
        match self {
            Edge::Left(x) => p.x >= x,
            Edge::Right(x) => p.x <= x,
            Edge::Top(y) => p.y >= y,
            Edge::Bottom(y) => p.y <= y,
        }
    }

    fn cut(self, a: Point, b: Point) -> Point {
        match self {
            Edge::Left(x) | Edge::Right(x) => {
                let t = (x - a.x) / (b.x - a.x);
                Point::new(x, a.y + t * (b.y - a.y))
            }
            Edge::Top(y) | Edge::Bottom(y) => {
                let t = (y - a.y) / (b.y - a.y);
                Point::new(a.x + t * (b.x - a.x), y)
            }
        }
    }
}

/// Sutherland-Hodgman clipping of a polygon against an axis-aligned window.
///
/// Returns an empty vector when the overlap has no area.
pub fn clip_polygon_to_rect(poly: &[Point], rect: &HBox) -> Vec<Point> {
    let edges = [
        Edge::Left(rect.x_min),
        Edge::Right(rect.x_max),
        Edge::Top(rect.y_min),
        Edge::Bottom(rect.y_max),
    ];
    let mut out: Vec<Point> = poly.to_vec();
    for edge in edges {
        if out.is_empty() {
            break;
        }
        let input = core::mem::take(&mut out);
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            match (edge.inside(prev), edge.inside(cur)) {
                (true, true) => out.push(cur),
                (true, false) => out.push(edge.cut(prev, cur)),
                (false, true) => {
                    out.push(edge.cut(prev, cur));
                    out.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    out.dedup_by(|a, b| (a.x - b.x).abs() <= EPS && (a.y - b.y).abs() <= EPS);
    if out.len() > 1 {
        let (first, last) = (out[0], out[out.len() - 1]);
        if (first.x - last.x).abs() <= EPS && (first.y - last.y).abs() <= EPS {
            out.pop();
        }
    }
    if out.len() < 3 || polygon_area(&out).abs() <= EPS {
        return Vec::new();
    }
    out
}

/// Floor of a finite float as an integer, without `std`.
pub(crate) fn floor_i64(v: f64) -> i64 {
    let t = v as i64;
    if (t as f64) > v {
        t - 1
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn quad(c: [(f64, f64); 4]) -> RBox {
        RBox::quad(c.map(|(x, y)| Point::new(x, y))).unwrap()
    }

    #[test]
    fn rhbox_of_diamond() {
        let r = quad([(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]);
        assert_eq!(rbox_to_rhbox(&r), HBox::new(-1.0, -1.0, 1.0, 1.0).unwrap());
    }

    #[test]
    fn rhbox_of_axis_aligned_quad() {
        let r = quad([(0.0, 0.0), (4.0, 0.0), (4.0, 2.0), (0.0, 2.0)]);
        assert_eq!(rbox_to_rhbox(&r), HBox::new(0.0, 0.0, 4.0, 2.0).unwrap());
        assert!(r.is_axis_aligned());
    }

    #[test]
    fn rhbox_of_skewed_quad() {
        // x: {2,5,3,0}, y: {1,3,6,4}
        let r = quad([(2.0, 1.0), (5.0, 3.0), (3.0, 6.0), (0.0, 4.0)]);
        assert_eq!(rbox_to_rhbox(&r), HBox::new(0.0, 1.0, 5.0, 6.0).unwrap());
        assert!(!r.is_axis_aligned());
    }

    #[test]
    fn rejects_bad_quads() {
        let bowtie = RBox::quad([
            Point::new(0.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 2.0),
        ]);
        assert!(matches!(bowtie, Err(Error::InvalidBox(_))));

        let flat = RBox::quad([
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(3.0, 0.0),
        ]);
        assert!(flat.is_err());

        let nan = RBox::quad([
            Point::new(f64::NAN, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]);
        assert!(nan.is_err());
    }

    #[test]
    fn hbox_validation() {
        assert!(HBox::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(HBox::new(0.0, 0.0, f64::INFINITY, 1.0).is_err());
        assert!(HBox::new(3.0, 3.0, 3.0, 3.0).is_ok());
    }

    #[test]
    fn point_in_polygon_counts_boundary() {
        let sq = HBox::new(0.0, 0.0, 2.0, 2.0).unwrap().corners();
        assert!(point_in_polygon(Point::new(1.0, 1.0), &sq));
        assert!(point_in_polygon(Point::new(0.0, 1.0), &sq));
        assert!(point_in_polygon(Point::new(2.0, 2.0), &sq));
        assert!(!point_in_polygon(Point::new(2.0 + 1e-6, 1.0), &sq));
        let diamond = [
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(-1.0, 0.0),
            Point::new(0.0, -1.0),
        ];
        assert!(point_in_polygon(Point::new(0.5, 0.5), &diamond));
        assert!(!point_in_polygon(Point::new(0.6, 0.6), &diamond));
    }

    #[test]
    fn clip_inside_outside_and_partial() {
        let rect = HBox::new(0.0, 0.0, 4.0, 4.0).unwrap();
        let inside = HBox::new(1.0, 1.0, 2.0, 3.0).unwrap().corners();
        assert_eq!(clip_polygon_to_rect(&inside, &rect), inside.to_vec());

        let outside = HBox::new(5.0, 5.0, 6.0, 6.0).unwrap().corners();
        assert!(clip_polygon_to_rect(&outside, &rect).is_empty());

        let straddle = HBox::new(-2.0, -2.0, 2.0, 2.0).unwrap().corners();
        let clipped = clip_polygon_to_rect(&straddle, &rect);
        let r = RBox::new(clipped).unwrap();
        assert_eq!(rbox_to_rhbox(&r), HBox::new(0.0, 0.0, 2.0, 2.0).unwrap());
        assert!((r.area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn clip_rotated_square_gives_octagon() {
        // Diamond of radius 3 clipped to [-2, 2]^2 cuts all four tips.
        let diamond = vec![
            Point::new(3.0, 0.0),
            Point::new(0.0, 3.0),
            Point::new(-3.0, 0.0),
            Point::new(0.0, -3.0),
        ];
        let rect = HBox::new(-2.0, -2.0, 2.0, 2.0).unwrap();
        let clipped = clip_polygon_to_rect(&diamond, &rect);
        assert_eq!(clipped.len(), 8);
        // 18 minus four tip triangles of area 1
        assert!((polygon_area(&clipped).abs() - 14.0).abs() < 1e-12);
        assert!(clipped.iter().all(|p| rect.contains(*p)));
    }

    #[test]
    fn edge_touching_is_empty() {
        let rect = HBox::new(0.0, 0.0, 4.0, 4.0).unwrap();
        let touching = HBox::new(4.0, 0.0, 6.0, 4.0).unwrap().corners();
        assert!(clip_polygon_to_rect(&touching, &rect).is_empty());
    }

    #[test]
    fn floor_helper() {
        assert_eq!(floor_i64(1.5), 1);
        assert_eq!(floor_i64(-1.5), -2);
        assert_eq!(floor_i64(-2.0), -2);
        assert_eq!(floor_i64(0.0), 0);
    }
}
