//! Polygons, circle footprints and signed distances.

use thiserror::Error;

use crate::control_space::{Point, Pose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon vertices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),
    #[error("polygon is not counter-clockwise (signed area {0})")]
    NotCounterClockwise(f64),
    #[error("polygon has a non-finite coordinate")]
    NonFinite,
    #[error("footprint needs at least one circle")]
    EmptyFootprint,
    #[error("footprint circle {0} has non-positive radius")]
    BadRadius(usize),
    #[error("footprint circles do not cover the {length} x {width} vehicle rectangle")]
    Uncovered { length: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn of(points: &[Point]) -> Self {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Self { min, max }
    }

    /// Euclidean distance from `p` to the box, zero inside.
    pub fn distance(&self, p: Point) -> f64 {
        self.distance_sq(p).sqrt()
    }

    fn distance_sq(&self, p: Point) -> f64 {
        let dx = (self.min.x - p.x).max(p.x - self.max.x).max(0.0);
        let dy = (self.min.y - p.y).max(p.y - self.max.y).max(0.0);
        dx * dx + dy * dy
    }
}

/// Edges per bounding box in the edge index of large polygons.
const EDGE_CHUNK: usize = 8;

/// Bounding boxes of consecutive runs of `EDGE_CHUNK` edges; empty for small
/// polygons where a plain scan is faster.
fn edge_chunks(vertices: &[Point]) -> Vec<Aabb> {
    let n = vertices.len();
    if n <= 2 * EDGE_CHUNK {
        return Vec::new();
    }
    (0..n)
        .step_by(EDGE_CHUNK)
        .map(|start| {
            let end = (start + EDGE_CHUNK).min(n);
            let mut run: Vec<Point> = vertices[start..end].to_vec();
            run.push(vertices[end % n]);
            Aabb::of(&run)
        })
        .collect()
}

/// A simple polygon with counter-clockwise vertex order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
    aabb: Aabb,
    chunks: Vec<Aabb>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let n = vertices.len();
        for i in 0..n {
            let j = (i + 1) % n;
            if vertices[i] == vertices[j] {
                return Err(GeometryError::DuplicateVertex(i, j));
            }
        }
        let area = signed_area(&vertices);
        if !(area > 0.0) {
            return Err(GeometryError::NotCounterClockwise(area));
        }
        let aabb = Aabb::of(&vertices);
        let chunks = edge_chunks(&vertices);
        Ok(Self { vertices, aabb, chunks })
    }

    /// Like [`Polygon::new`] but accepts clockwise rings by reversing them.
    pub fn from_ring(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() >= 3 && signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Self::new(vertices)
    }

    pub fn rectangle(min: Point, max: Point) -> Result<Self, GeometryError> {
        Self::new(vec![
            min,
            Point::new(max.x, min.y),
            max,
            Point::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn aabb(&self) -> &Aabb {
        &self.aabb
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
            a2 += w;
        }
        Point::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Rigidly moves a body-frame polygon to `pose`.
    pub fn transformed(&self, pose: &Pose) -> Polygon {
        let vertices: Vec<Point> = self.vertices.iter().map(|&v| pose.transform_point(v)).collect();
        let aabb = Aabb::of(&vertices);
        let chunks = edge_chunks(&vertices);
        Polygon { vertices, aabb, chunks }
    }

    fn edge(&self, i: usize) -> (Point, Point) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    /// Calls `f` on every edge, skipping runs of edges whose bounding box
    /// fails `keep`.
    fn scan_edges(&self, keep: impl Fn(&Aabb) -> bool, mut f: impl FnMut(Point, Point)) {
        let n = self.vertices.len();
        if self.chunks.is_empty() {
            (0..n).for_each(|i| {
                let (a, b) = self.edge(i);
                f(a, b)
            });
            return;
        }
        for (k, chunk) in self.chunks.iter().enumerate() {
            if keep(chunk) {
                for i in k * EDGE_CHUNK..((k + 1) * EDGE_CHUNK).min(n) {
                    let (a, b) = self.edge(i);
                    f(a, b);
                }
            }
        }
    }

    /// Nonzero winding number of the polygon around `p`.
    pub fn winding_number(&self, p: Point) -> i32 {
        let mut wn = 0;
        // only edges straddling the horizontal ray to the right of `p` can count
        let straddles = |b: &Aabb| b.min.y <= p.y && p.y < b.max.y && b.max.x >= p.x;
        self.scan_edges(straddles, |a, b| {
            if a.y <= p.y {
                if b.y > p.y && (b - a).cross(p - a) > 0.0 {
                    wn += 1;
                }
            } else if b.y <= p.y && (b - a).cross(p - a) < 0.0 {
                wn -= 1;
            }
        });
        wn
    }

    pub fn contains(&self, p: Point) -> bool {
        self.winding_number(p) != 0
    }

    /// Unsigned distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.boundary_distance_within(p, f64::INFINITY)
    }

    /// Boundary distance if it is below `cutoff`, otherwise `cutoff`.
    fn boundary_distance_within(&self, p: Point, cutoff: f64) -> f64 {
        let limit_sq = if cutoff.is_finite() { cutoff * cutoff } else { f64::INFINITY };
        let best = std::cell::Cell::new(limit_sq);
        self.scan_edges(
            |b| b.distance_sq(p) < best.get(),
            |a, b| best.set(best.get().min(segment_distance_sq(p, a, b))),
        );
        if best.get() >= limit_sq {
            cutoff
        } else {
            best.get().sqrt()
        }
    }

    /// Signed distance: negative inside, positive outside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        self.signed_distance_bounded(p, f64::INFINITY)
    }

    /// Signed distance, exact while its magnitude is below `cutoff`. Beyond
    /// that the sign is exact and the magnitude a lower bound `>= cutoff`.
    pub fn signed_distance_bounded(&self, p: Point, cutoff: f64) -> f64 {
        let box_distance = self.aabb.distance(p);
        if box_distance >= cutoff {
            return box_distance;
        }
        let d = self.boundary_distance_within(p, cutoff);
        if d == 0.0 {
            0.0
        } else if self.contains(p) {
            -d
        } else {
            d
        }
    }
}

pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
}

pub fn segment_distance_sq(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.dot(ab);
    let t = if len_sq > 0.0 {
        ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let closest = a + ab * t;
    let d = p - closest;
    d.dot(d)
}

/// Closest-point parameter and distance of `p` on the segment `a -> b`.
pub fn project_onto_segment(p: Point, a: Point, b: Point) -> (f64, f64) {
    let ab = b - a;
    let len_sq = ab.dot(ab);
    let t = if len_sq > 0.0 {
        ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (t, (p - (a + ab * t)).norm())
}

/// Whether the closed segments `a1-a2` and `b1-b2` intersect.
pub fn segments_intersect(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let d1 = (b2 - b1).cross(a1 - b1);
    let d2 = (b2 - b1).cross(a2 - b1);
    let d3 = (a2 - a1).cross(b1 - a1);
    let d4 = (a2 - a1).cross(b2 - a1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (d1 == 0.0 && on(b1, b2, a1))
        || (d2 == 0.0 && on(b1, b2, a2))
        || (d3 == 0.0 && on(a1, a2, b1))
        || (d4 == 0.0 && on(a1, a2, b2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    /// Center in the vehicle body frame.
    pub offset: Point,
    pub radius: f64,
}

/// The ego collision model: a union of circles in the body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FootprintModel {
    circles: Vec<Circle>,
    length: f64,
    width: f64,
}

impl FootprintModel {
    /// Builds a footprint and checks that the circles cover the
    /// `length x width` rectangle centered on the body origin.
    pub fn new(circles: Vec<Circle>, length: f64, width: f64) -> Result<Self, GeometryError> {
        if circles.is_empty() {
            return Err(GeometryError::EmptyFootprint);
        }
        if let Some(i) = circles.iter().position(|c| !(c.radius > 0.0)) {
            return Err(GeometryError::BadRadius(i));
        }
        const SAMPLES: usize = 24;
        let covered = (0..=SAMPLES).all(|i| {
            (0..=SAMPLES).all(|j| {
                let p = Point::new(
                    length * (i as f64 / SAMPLES as f64 - 0.5),
                    width * (j as f64 / SAMPLES as f64 - 0.5),
                );
                circles
                    .iter()
                    .any(|c| p.distance(c.offset) <= c.radius * (1.0 + 1e-9))
            })
        });
        if !covered {
            return Err(GeometryError::Uncovered { length, width });
        }
        Ok(Self {
            circles,
            length,
            width,
        })
    }

    /// `count` equal circles spread along the longitudinal axis, each covering
    /// one `length/count x width` slice of the rectangle.
    pub fn covering_rectangle(length: f64, width: f64, count: usize) -> Result<Self, GeometryError> {
        if count == 0 {
            return Err(GeometryError::EmptyFootprint);
        }
        let slice = length / count as f64;
        let radius = (0.5 * slice).hypot(0.5 * width);
        let circles = (0..count)
            .map(|i| Circle {
                offset: Point::new(-0.5 * length + slice * (i as f64 + 0.5), 0.0),
                radius,
            })
            .collect();
        Self::new(circles, length, width)
    }

    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn max_radius(&self) -> f64 {
        self.circles.iter().map(|c| c.radius).fold(0.0, f64::max)
    }

    pub fn world_circles<'a>(&'a self, pose: &'a Pose) -> impl Iterator<Item = (Point, f64)> + 'a {
        self.circles
            .iter()
            .map(move |c| (pose.transform_point(c.offset), c.radius))
    }
}

/// Smallest gap between any footprint circle and any obstacle; negative on
/// penetration, `+∞` without obstacles.
pub fn footprint_clearance(pose: &Pose, fp: &FootprintModel, obstacles: &[Polygon]) -> f64 {
    footprint_clearance_bounded(pose, fp, obstacles, f64::INFINITY)
}

/// [`footprint_clearance`] that may stop refining once the gap is known to be
/// at least `cutoff`. Values below `cutoff` are exact.
pub fn footprint_clearance_bounded(
    pose: &Pose,
    fp: &FootprintModel,
    obstacles: &[Polygon],
    cutoff: f64,
) -> f64 {
    let mut best = f64::INFINITY;
    for (center, radius) in fp.world_circles(pose) {
        for obstacle in obstacles {
            let limit = best.min(cutoff) + radius;
            let d = obstacle.signed_distance_bounded(center, limit) - radius;
            best = best.min(d);
        }
    }
    best
}

/// How far every footprint circle stays inside `area`; negative when any
/// circle pokes out.
pub fn containment_margin(pose: &Pose, fp: &FootprintModel, area: &Polygon) -> f64 {
    containment_margin_bounded(pose, fp, area, f64::INFINITY)
}

/// [`containment_margin`], exact below `cutoff` and a lower bound `>= cutoff`
/// above it.
pub fn containment_margin_bounded(pose: &Pose, fp: &FootprintModel, area: &Polygon, cutoff: f64) -> f64 {
    fp.world_circles(pose)
        .map(|(center, radius)| -area.signed_distance_bounded(center, cutoff + radius) - radius)
        .fold(f64::INFINITY, f64::min)
}
