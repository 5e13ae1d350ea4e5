//! Planar polygon primitives for zone shapes.

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    fn union(self, o: BBox) -> BBox {
        BBox {
            min: Point::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Point::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("ring has {0} distinct vertices, need at least 3")]
    TooFewVertices(usize),
    #[error("ring has non-finite coordinates")]
    NonFinite,
    #[error("ring has zero area")]
    ZeroArea,
    #[error("ring edges {0} and {1} intersect")]
    SelfIntersection(usize, usize),
    #[error("multipolygon has no parts")]
    Empty,
}

/// Closed ring; the closing vertex is implicit (not repeated).
#[derive(Debug, Clone, PartialEq)]
pub struct Ring(Vec<Point>);

impl Ring {
    /// Builds a ring, dropping a repeated closing vertex and validating it.
    pub fn new(mut points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.len() > 1 && points.first() == points.last() {
            points.pop();
        }
        if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(GeometryError::NonFinite);
        }
        points.dedup();
        if points.len() < 3 {
            return Err(GeometryError::TooFewVertices(points.len()));
        }
        let ring = Ring(points);
        if ring.signed_area() == 0.0 {
            return Err(GeometryError::ZeroArea);
        }
        ring.check_simple()?;
        Ok(ring)
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.0.len();
        (0..n).map(move |i| (self.0[i], self.0[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a.x * b.y - b.x * a.y).sum::<f64>() / 2.0
    }

    fn bbox(&self) -> BBox {
        let mut b = BBox { min: self.0[0], max: self.0[0] };
        for p in &self.0[1..] {
            b = b.union(BBox { min: *p, max: *p });
        }
        b
    }

    /// Even-odd crossing test; points on the boundary may go either way.
    fn crosses(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn check_simple(&self) -> Result<(), GeometryError> {
        let n = self.0.len();
        let edges: Vec<(Point, Point)> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // adjacent edges may only share their common vertex
                    if collinear_overlap(edges[i], edges[j]) {
                        return Err(GeometryError::SelfIntersection(i, j));
                    }
                    continue;
                }
                if segments_intersect(edges[i], edges[j]) {
                    return Err(GeometryError::SelfIntersection(i, j));
                }
            }
        }
        Ok(())
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect((p1, p2): (Point, Point), (q1, q2): (Point, Point)) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Adjacent edges `a -> b`, `b -> c` folding back onto each other.
fn collinear_overlap(e1: (Point, Point), e2: (Point, Point)) -> bool {
    let (a, b, c) = if e1.1 == e2.0 { (e1.0, e1.1, e2.1) } else { (e2.0, e2.1, e1.1) };
    if orient(a, b, c) != 0.0 {
        return false;
    }
    // collinear: overlap iff c lies back toward a
    (c.x - b.x) * (a.x - b.x) + (c.y - b.y) * (a.y - b.y) > 0.0
}

/// Polygon with an exterior ring and optional holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> Self {
        Polygon { exterior, holes }
    }

    pub fn area(&self) -> f64 {
        self.exterior.signed_area().abs() - self.holes.iter().map(|h| h.signed_area().abs()).sum::<f64>()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.exterior.crosses(p) && !self.holes.iter().any(|h| h.crosses(p))
    }

    /// Area-weighted centroid moment `(sum A*cx, sum A*cy, sum A)`.
    fn moments(&self) -> (f64, f64, f64) {
        let ring_moments = |r: &Ring| {
            let mut cx = 0.0;
            let mut cy = 0.0;
            let mut a = 0.0;
            for (p, q) in r.edges() {
                let cross = p.x * q.y - q.x * p.y;
                a += cross;
                cx += (p.x + q.x) * cross;
                cy += (p.y + q.y) * cross;
            }
            // signed area a/2, centroid (cx, cy)/(3a)
            let area = a / 2.0;
            let sign = if area < 0.0 { -1.0 } else { 1.0 };
            (sign * cx / 6.0, sign * cy / 6.0, area.abs())
        };
        let (mut mx, mut my, mut ma) = ring_moments(&self.exterior);
        for h in &self.holes {
            let (hx, hy, ha) = ring_moments(h);
            mx -= hx;
            my -= hy;
            ma -= ha;
        }
        (mx, my, ma)
    }
}

/// One or more disjoint polygons.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPolygon(pub Vec<Polygon>);

impl MultiPolygon {
    pub fn new(parts: Vec<Polygon>) -> Result<Self, GeometryError> {
        if parts.is_empty() {
            return Err(GeometryError::Empty);
        }
        Ok(MultiPolygon(parts))
    }

    /// Axis-aligned rectangle, handy for synthetic fixtures.
    pub fn rectangle(min: Point, max: Point) -> Result<Self, GeometryError> {
        let ring = Ring::new(alloc::vec![
            min,
            Point::new(max.x, min.y),
            max,
            Point::new(min.x, max.y),
        ])?;
        Self::new(alloc::vec![Polygon::new(ring, Vec::new())])
    }

    pub fn parts(&self) -> &[Polygon] {
        &self.0
    }

    pub fn area(&self) -> f64 {
        self.0.iter().map(Polygon::area).sum()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.0.iter().any(|poly| poly.contains(p))
    }

    pub fn bbox(&self) -> BBox {
        self.0.iter().map(|p| p.exterior.bbox()).reduce(BBox::union).expect("non-empty multipolygon")
    }

    /// Area-weighted geometric centroid.
    pub fn centroid(&self) -> Point {
        let (mut mx, mut my, mut ma) = (0.0, 0.0, 0.0);
        for p in &self.0 {
            let (x, y, a) = p.moments();
            mx += x;
            my += y;
            ma += a;
        }
        Point::new(mx / ma, my / ma)
    }

    /// A point guaranteed to be inside: midpoint of the widest interior run
    /// along the horizontal line through the bounding-box middle (or, failing
    /// that, through other sample heights).
    pub fn interior_point(&self) -> Point {
        let b = self.bbox();
        let h = b.max.y - b.min.y;
        for frac in [0.5, 0.25, 0.75, 0.125, 0.375, 0.625, 0.875] {
            let y = b.min.y + frac * h;
            if let Some(p) = self.widest_run_midpoint(y) {
                return p;
            }
        }
        self.centroid()
    }

    fn widest_run_midpoint(&self, y: f64) -> Option<Point> {
        let mut xs = Vec::new();
        for poly in &self.0 {
            for ring in core::iter::once(&poly.exterior).chain(poly.holes.iter()) {
                for (a, b) in ring.edges() {
                    if (a.y > y) != (b.y > y) {
                        xs.push(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
                    }
                }
            }
        }
        xs.sort_by(f64::total_cmp);
        let mut best: Option<(f64, f64)> = None;
        for pair in xs.chunks_exact(2) {
            let w = pair[1] - pair[0];
            if w > 0.0 && best.is_none_or(|(bw, _)| w > bw) {
                best = Some((w, (pair[0] + pair[1]) / 2.0));
            }
        }
        best.map(|(_, x)| Point::new(x, y)).filter(|p| self.contains(*p))
    }

    /// Centroid if it is inside the shape, otherwise an interior point.
    pub fn anchor_point(&self) -> Point {
        let c = self.centroid();
        if self.contains(c) { c } else { self.interior_point() }
    }
}
