//! Plane primitives, domain descriptions and corner bookkeeping.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Points closer than this to the boundary count as outside; trajectories
/// must live strictly inside the domain.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A point of the plane, identified with the complex number `x1 + i x2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x1: f64,
    pub x2: f64,
}

impl Point {
    pub const fn new(x1: f64, x2: f64) -> Self {
        Point { x1, x2 }
    }

    pub const ORIGIN: Point = Point::new(0.0, 0.0);

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn norm_sq(self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    /// Counterclockwise perpendicular `(-x2, x1)`.
    pub fn perp(self) -> Point {
        Point::new(-self.x2, self.x1)
    }

    /// Reflection across the `x1`-axis.
    pub fn reflect(self) -> Point {
        Point::new(self.x1, -self.x2)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }
}

impl From<Complex64> for Point {
    fn from(z: Complex64) -> Self {
        Point::new(z.re, z.im)
    }
}

impl From<Point> for Complex64 {
    fn from(p: Point) -> Self {
        Complex64::new(p.x1, p.x2)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x1 * s, self.x2 * s)
    }
}

impl std::ops::Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x1, -self.x2)
    }
}

/// A boundary corner: its location, interior angle and (once a map has been
/// built) its image on the unit circle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CornerInfo {
    pub location: Point,
    /// Interior angle in radians, in `(0, 2*pi]`.
    pub angle: f64,
    /// Filled by the conformal module; lies on the unit circle.
    pub image_on_circle: Option<Point>,
}

/// The shape of the domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum DomainVariant {
    /// The open unit disk.
    Disk,
    /// Circular sector of aperture `theta`, apex at the origin, bisector
    /// along the positive `x1`-axis: `{ 0 < |z| < radius, |arg z| < theta/2 }`.
    Sector { theta: f64, radius: f64 },
    /// Simple counterclockwise polygon.
    Polygon { vertices: Vec<Point> },
}

/// A validated domain together with its corner list.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainSpec {
    pub variant: DomainVariant,
    pub corners: Vec<CornerInfo>,
}

impl DomainSpec {
    pub fn disk() -> Self {
        DomainSpec {
            variant: DomainVariant::Disk,
            corners: Vec::new(),
        }
    }

    pub fn sector(theta: f64, radius: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 2.0 * PI) {
            return Err(Error::InvalidDomain(format!(
                "sector aperture must lie in (0, 2*pi), got {theta}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "sector radius must be positive and finite, got {radius}"
            )));
        }
        let half = theta / 2.0;
        let corners = vec![
            CornerInfo {
                location: Point::ORIGIN,
                angle: theta,
                image_on_circle: None,
            },
            CornerInfo {
                location: Point::new(radius * half.cos(), radius * half.sin()),
                angle: PI / 2.0,
                image_on_circle: None,
            },
            CornerInfo {
                location: Point::new(radius * half.cos(), -radius * half.sin()),
                angle: PI / 2.0,
                image_on_circle: None,
            },
        ];
        Ok(DomainSpec {
            variant: DomainVariant::Sector { theta, radius },
            corners,
        })
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidDomain(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(Error::InvalidDomain(
                "polygon vertices must be counterclockwise".into(),
            ));
        }
        if self_intersects(&vertices) {
            return Err(Error::InvalidDomain("polygon is self-intersecting".into()));
        }
        let n = vertices.len();
        let mut corners = Vec::new();
        for k in 0..n {
            let prev = vertices[(k + n - 1) % n];
            let here = vertices[k];
            let next = vertices[(k + 1) % n];
            let angle = interior_angle(prev, here, next);
            if angle <= 0.0 {
                return Err(Error::InvalidDomain(format!(
                    "zero interior angle (exterior cusp) at vertex {k}"
                )));
            }
            // A vertex with angle exactly pi is a smooth boundary point.
            if (angle - PI).abs() < 1e-12 {
                continue;
            }
            corners.push(CornerInfo {
                location: here,
                angle,
                image_on_circle: None,
            });
        }
        Ok(DomainSpec {
            variant: DomainVariant::Polygon { vertices },
            corners,
        })
    }

    /// Each corner with its interior angle; smooth boundary points excluded.
    pub fn corner_angles(&self) -> Vec<(Point, f64)> {
        self.corners.iter().map(|c| (c.location, c.angle)).collect()
    }

    /// Signed distance proxy: minimum distance from `p` to the boundary.
    /// Meaningful for points inside or near the domain.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match &self.variant {
            DomainVariant::Disk => 1.0 - p.norm(),
            DomainVariant::Sector { theta, radius } => {
                let half = theta / 2.0;
                let ray_hi = Point::new(radius * half.cos(), radius * half.sin());
                let ray_lo = ray_hi.reflect();
                let d_arc = (radius - p.norm()).abs();
                let d_hi = dist_to_segment(p, Point::ORIGIN, ray_hi);
                let d_lo = dist_to_segment(p, Point::ORIGIN, ray_lo);
                d_arc.min(d_hi).min(d_lo)
            }
            DomainVariant::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|k| dist_to_segment(p, vertices[k], vertices[(k + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// True iff `p` is strictly inside the domain; points within
    /// [`BOUNDARY_TOL`] of the boundary count as outside.
    pub fn contains(&self, p: Point) -> bool {
        if !p.is_finite() {
            return false;
        }
        let inside = match &self.variant {
            DomainVariant::Disk => p.norm() < 1.0,
            DomainVariant::Sector { theta, radius } => {
                let r = p.norm();
                r > 0.0 && r < *radius && p.x2.atan2(p.x1).abs() < theta / 2.0
            }
            DomainVariant::Polygon { vertices } => winding_inside(vertices, p),
        };
        inside && self.boundary_distance(p) > BOUNDARY_TOL
    }

    /// True iff `p` lies in the closed domain, up to a small tolerance used
    /// for boundary evaluations of the continuous extension of the map.
    pub fn in_closure(&self, p: Point, tol: f64) -> bool {
        if self.contains(p) {
            return true;
        }
        self.boundary_distance(p) <= tol && {
            match &self.variant {
                DomainVariant::Disk => p.norm() <= 1.0 + tol,
                DomainVariant::Sector { theta, radius } => {
                    p.norm() <= radius + tol
                        && (p.x2.atan2(p.x1).abs() <= theta / 2.0 + tol || p.norm() <= tol)
                }
                DomainVariant::Polygon { .. } => true,
            }
        }
    }

    /// Domains symmetric under `x2 -> -x2` (used by the odd-reflection mode).
    pub fn is_conjugation_symmetric(&self) -> bool {
        matches!(
            self.variant,
            DomainVariant::Disk | DomainVariant::Sector { .. }
        )
    }

    pub fn diameter(&self) -> f64 {
        match &self.variant {
            DomainVariant::Disk => 2.0,
            DomainVariant::Sector { theta, radius } => {
                if *theta >= PI {
                    2.0 * radius
                } else {
                    // chord between the two arc corners vs radius
                    let chord = 2.0 * radius * (theta / 2.0).sin();
                    chord.max(*radius)
                }
            }
            DomainVariant::Polygon { vertices } => {
                let mut d: f64 = 0.0;
                for i in 0..vertices.len() {
                    for j in i + 1..vertices.len() {
                        d = d.max(vertices[i].dist(vertices[j]));
                    }
                }
                d
            }
        }
    }
}

fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let mut a = 0.0;
    for k in 0..n {
        let p = vertices[k];
        let q = vertices[(k + 1) % n];
        a += p.x1 * q.x2 - q.x1 * p.x2;
    }
    a / 2.0
}

/// Interior angle at `here` for a counterclockwise polygon.
pub(crate) fn interior_angle(prev: Point, here: Point, next: Point) -> f64 {
    let e_in = here - prev;
    let e_out = next - here;
    let turn = (e_in.x1 * e_out.x2 - e_in.x2 * e_out.x1).atan2(e_in.dot(e_out));
    PI - turn
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let cross = |u: Point, v: Point| u.x1 * v.x2 - u.x2 * v.x1;
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn self_intersects(vertices: &[Point]) -> bool {
    let n = vertices.len();
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        for j in i + 1..n {
            // skip adjacent edges, which share an endpoint
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

fn winding_inside(vertices: &[Point], p: Point) -> bool {
    let n = vertices.len();
    let mut winding = 0i32;
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        if a.x2 <= p.x2 {
            if b.x2 > p.x2 && cross_side(a, b, p) > 0.0 {
                winding += 1;
            }
        } else if b.x2 <= p.x2 && cross_side(a, b, p) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

fn cross_side(a: Point, b: Point, p: Point) -> f64 {
    (b.x1 - a.x1) * (p.x2 - a.x2) - (p.x1 - a.x1) * (b.x2 - a.x2)
}

pub(crate) fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}
