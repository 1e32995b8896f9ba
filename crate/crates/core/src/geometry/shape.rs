use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point2 = [f64; 2];

/// Planar outline (or an axis-aligned wire) in millimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Rect { min: Point2, max: Point2 },
    Polygon { vertices: Vec<Point2> },
    /// Axis-aligned segment; rasterizes to a line of PEC edges.
    Wire { start: [f64; 3], end: [f64; 3] },
}

impl Shape {
    pub fn rect_centered(center: Point2, width_x: f64, length_y: f64) -> Shape {
        Shape::Rect {
            min: [center[0] - width_x / 2.0, center[1] - length_y / 2.0],
            max: [center[0] + width_x / 2.0, center[1] + length_y / 2.0],
        }
    }

    /// Builds a polygon, checking simplicity and normalizing to
    /// counter-clockwise winding.
    pub fn polygon(mut vertices: Vec<Point2>) -> Result<Shape> {
        if vertices.len() < 3 {
            return Err(Error::geometry("polygon needs at least three vertices"));
        }
        if !is_simple(&vertices) {
            return Err(Error::geometry("polygon is self-intersecting"));
        }
        let signed = signed_area(&vertices);
        if signed.abs() <= f64::EPSILON {
            return Err(Error::geometry("polygon has zero area"));
        }
        if signed < 0.0 {
            vertices.reverse();
        }
        Ok(Shape::Polygon { vertices })
    }

    /// Point membership, half-open on the max edges so that abutting shapes
    /// never both claim a sample on their shared boundary.
    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Shape::Rect { min, max } => {
                p[0] >= min[0] && p[0] < max[0] && p[1] >= min[1] && p[1] < max[1]
            }
            Shape::Polygon { vertices } => crossing_number(vertices, p),
            Shape::Wire { .. } => false,
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Shape::Rect { min, max } => (max[0] - min[0]) * (max[1] - min[1]),
            Shape::Polygon { vertices } => signed_area(vertices).abs(),
            Shape::Wire { .. } => 0.0,
        }
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        match self {
            Shape::Rect { min, max } => (*min, *max),
            Shape::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for a in 0..2 {
                        lo[a] = lo[a].min(v[a]);
                        hi[a] = hi[a].max(v[a]);
                    }
                }
                (lo, hi)
            }
            Shape::Wire { start, end } => (
                [start[0].min(end[0]), start[1].min(end[1])],
                [start[0].max(end[0]), start[1].max(end[1])],
            ),
        }
    }

    /// Smallest edge length of the outline; used to judge grid resolution.
    pub fn min_feature(&self) -> f64 {
        match self {
            Shape::Rect { min, max } => (max[0] - min[0]).min(max[1] - min[1]),
            Shape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| dist(vertices[i], vertices[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
            Shape::Wire { .. } => f64::INFINITY,
        }
    }

    pub fn translated(&self, d: Point2) -> Shape {
        match self {
            Shape::Rect { min, max } => Shape::Rect {
                min: [min[0] + d[0], min[1] + d[1]],
                max: [max[0] + d[0], max[1] + d[1]],
            },
            Shape::Polygon { vertices } => Shape::Polygon {
                vertices: vertices.iter().map(|v| [v[0] + d[0], v[1] + d[1]]).collect(),
            },
            Shape::Wire { start, end } => Shape::Wire {
                start: [start[0] + d[0], start[1] + d[1], start[2]],
                end: [end[0] + d[0], end[1] + d[1], end[2]],
            },
        }
    }

    /// Scales about `center`.
    pub fn scaled(&self, center: Point2, k: f64) -> Shape {
        let s = |v: Point2| [center[0] + k * (v[0] - center[0]), center[1] + k * (v[1] - center[1])];
        match self {
            Shape::Rect { min, max } => Shape::Rect { min: s(*min), max: s(*max) },
            Shape::Polygon { vertices } => Shape::Polygon {
                vertices: vertices.iter().map(|&v| s(v)).collect(),
            },
            Shape::Wire { .. } => self.clone(),
        }
    }

    /// Counter-clockwise rotation by `deg` about `center`. Quarter turns are
    /// applied exactly so that axis-aligned rectangles stay rectangles.
    pub fn rotated(&self, center: Point2, deg: f64) -> Shape {
        let deg = normalize_degrees(deg);
        if deg == 0.0 {
            return self.clone();
        }
        let quarter = quarter_turns(deg);
        let rot = |v: Point2| -> Point2 {
            let (x, y) = (v[0] - center[0], v[1] - center[1]);
            let (rx, ry) = match quarter {
                Some(1) => (-y, x),
                Some(2) => (-x, -y),
                Some(3) => (y, -x),
                _ => {
                    let (s, c) = deg.to_radians().sin_cos();
                    (c * x - s * y, s * x + c * y)
                }
            };
            [center[0] + rx, center[1] + ry]
        };
        match self {
            Shape::Rect { min, max } => {
                if quarter.is_some() {
                    let a = rot(*min);
                    let b = rot(*max);
                    Shape::Rect {
                        min: [a[0].min(b[0]), a[1].min(b[1])],
                        max: [a[0].max(b[0]), a[1].max(b[1])],
                    }
                } else {
                    let corners = [*min, [max[0], min[1]], *max, [min[0], max[1]]];
                    Shape::Polygon { vertices: corners.iter().map(|&v| rot(v)).collect() }
                }
            }
            Shape::Polygon { vertices } => Shape::Polygon {
                vertices: vertices.iter().map(|&v| rot(v)).collect(),
            },
            Shape::Wire { .. } => self.clone(),
        }
    }

    pub fn is_planar(&self) -> bool {
        !matches!(self, Shape::Wire { .. })
    }

    /// True when `other`'s bounding box lies inside this shape's bounding box.
    pub fn bbox_contains(&self, other: &Shape, tol: f64) -> bool {
        let (a0, a1) = self.bbox();
        let (b0, b1) = other.bbox();
        b0[0] >= a0[0] - tol && b0[1] >= a0[1] - tol && b1[0] <= a1[0] + tol && b1[1] <= a1[1] + tol
    }
}

pub fn normalize_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

fn quarter_turns(deg: f64) -> Option<u8> {
    match deg {
        d if d == 90.0 => Some(1),
        d if d == 180.0 => Some(2),
        d if d == 270.0 => Some(3),
        _ => None,
    }
}

fn dist(a: Point2, b: Point2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub(crate) fn signed_area(v: &[Point2]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    acc / 2.0
}

fn crossing_number(v: &[Point2], p: Point2) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point2, b: Point2, c: Point2, d: f64| {
        d == 0.0
            && c[0] >= a[0].min(b[0])
            && c[0] <= a[0].max(b[0])
            && c[1] >= a[1].min(b[1])
            && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn is_simple(v: &[Point2]) -> bool {
    let n = v.len();
    for i in 0..n {
        let (a1, a2) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (b1, b2) = (v[j], v[(j + 1) % n]);
            if segments_cross(a1, a2, b1, b2) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn polygon_normalizes_winding_and_rejects_bowtie() {
        let cw = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        let Shape::Polygon { vertices } = Shape::polygon(cw).unwrap() else { unreachable!() };
        assert!(signed_area(&vertices) > 0.0);
        let bowtie = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(Shape::polygon(bowtie).is_err());
    }

    #[test]
    fn quarter_turn_keeps_rectangles() {
        let r = Shape::rect_centered([1.0, 2.0], 4.0, 2.0);
        let q = r.rotated([1.0, 2.0], 90.0);
        match q {
            Shape::Rect { min, max } => {
                assert_eq!(max[0] - min[0], 2.0);
                assert_eq!(max[1] - min[1], 4.0);
            }
            _ => panic!("expected rect"),
        }
        assert!(matches!(r.rotated([0.0, 0.0], 9.0), Shape::Polygon { .. }));
    }

    #[test]
    fn full_turn_is_identity() {
        let t = Shape::polygon(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.2, 1.0], [1.2, 3.0], [0.8, 3.0], [0.8, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(t.rotated([0.3, 0.4], 360.0), t);
        assert_eq!(t.rotated([0.3, 0.4], -720.0), t);
    }

    proptest! {
        #[test]
        fn rotation_preserves_membership(deg in 0.0f64..360.0, px in -3.0f64..3.0, py in -3.0f64..3.0) {
            let t = Shape::polygon(vec![[-1.0, -1.0], [1.5, -1.0], [1.5, 0.5], [0.2, 0.5], [0.2, 2.0], [-0.2, 2.0], [-0.2, 0.5], [-1.0, 0.5]]).unwrap();
            let c = [0.25, 0.1];
            let rotated = t.rotated(c, deg);
            let (s, co) = deg.to_radians().sin_cos();
            let q = [c[0] + co * (px - c[0]) - s * (py - c[1]), c[1] + s * (px - c[0]) + co * (py - c[1])];
            // skip points within rounding distance of an edge
            let near_edge = {
                let Shape::Polygon { vertices } = &t else { unreachable!() };
                let n = vertices.len();
                (0..n).any(|i| {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    let l = dist(a, b);
                    let t = (((px - a[0]) * (b[0] - a[0]) + (py - a[1]) * (b[1] - a[1])) / (l * l)).clamp(0.0, 1.0);
                    dist([px, py], [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]) < 1e-9
                })
            };
            if !near_edge {
                prop_assert_eq!(t.contains([px, py]), rotated.contains(q));
            }
            prop_assert!((rotated.area() - t.area()).abs() < 1e-9);
        }
    }
}
