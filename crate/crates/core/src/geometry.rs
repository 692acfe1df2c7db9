//! Small 2D vector and triangle helpers used throughout the crate.

use std::ops::{Add, Mul, Sub};

/// A point (or vector) in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product `self x other`.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Signed area of the triangle `(a, b, c)`; positive for counterclockwise order.
pub fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * (b - a).cross(c - a)
}

/// Interior angles of the triangle, one per vertex, in radians.
pub fn triangle_angles(a: Point2, b: Point2, c: Point2) -> [f64; 3] {
    let ang = |p: Point2, q: Point2, r: Point2| {
        let u = q - p;
        let v = r - p;
        let cosv = (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0);
        cosv.acos()
    };
    [ang(a, b, c), ang(b, c, a), ang(c, a, b)]
}

/// Diameter (longest edge) of the triangle.
pub fn triangle_diameter(a: Point2, b: Point2, c: Point2) -> f64 {
    a.dist(b).max(b.dist(c)).max(c.dist(a))
}

/// Diameter of the inscribed circle, `4|K| / perimeter`.
pub fn inscribed_diameter(a: Point2, b: Point2, c: Point2) -> f64 {
    let area = signed_area(a, b, c).abs();
    let perim = a.dist(b) + b.dist(c) + c.dist(a);
    4.0 * area / perim
}

/// Barycentric coordinates of `p` with respect to the triangle `(a, b, c)`.
pub fn barycentric(a: Point2, b: Point2, c: Point2, p: Point2) -> [f64; 3] {
    let total = (b - a).cross(c - a);
    let la = (b - p).cross(c - p) / total;
    let lb = (c - p).cross(a - p) / total;
    let lc = (a - p).cross(b - p) / total;
    [la, lb, lc]
}

/// Constant gradients of the three P1 barycentric basis functions on the triangle.
pub fn p1_gradients(a: Point2, b: Point2, c: Point2) -> [Point2; 3] {
    let twice_area = (b - a).cross(c - a);
    // grad(lambda_a) is perpendicular to the opposite edge b->c, scaled by 1/(2|K|).
    let g = |p: Point2, q: Point2| Point2::new(p.y - q.y, q.x - p.x) * (1.0 / twice_area);
    [g(b, c), g(c, a), g(a, b)]
}

/// Distance from `p` to the segment `[a, b]`.
pub fn dist_point_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Convex hull of a point set (monotone chain), counterclockwise, no repeated endpoint.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|p, q| {
        p.x.partial_cmp(&q.x)
            .unwrap()
            .then(p.y.partial_cmp(&q.y).unwrap())
    });
    pts.dedup_by(|p, q| p.x == q.x && p.y == q.y);
    if pts.len() < 3 {
        return pts;
    }
    let chain = |iter: &mut dyn Iterator<Item = Point2>| {
        let mut out: Vec<Point2> = Vec::new();
        for p in iter {
            while out.len() >= 2 {
                let r = out[out.len() - 1] - out[out.len() - 2];
                let s = p - out[out.len() - 2];
                if r.cross(s) <= 0.0 {
                    out.pop();
                } else {
                    break;
                }
            }
            out.push(p);
        }
        out
    };
    let mut lower = chain(&mut pts.iter().copied());
    let mut upper = chain(&mut pts.iter().rev().copied());
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    lower
}

/// Distance from an interior point to the boundary of a convex polygon;
/// returns `None` when `p` is not strictly inside.
pub fn dist_to_hull_boundary(p: Point2, hull: &[Point2]) -> Option<f64> {
    if hull.len() < 3 {
        return None;
    }
    let mut dist = f64::INFINITY;
    for k in 0..hull.len() {
        let a = hull[k];
        let b = hull[(k + 1) % hull.len()];
        if (b - a).cross(p - a) <= 0.0 {
            return None; // on or outside this edge
        }
        dist = dist.min(dist_point_segment(p, a, b));
    }
    Some(dist)
}
