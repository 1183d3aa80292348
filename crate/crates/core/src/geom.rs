//! 2-D geometry primitives shared by the map model, simulator, and monitors.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// A 2-D vector or point, in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector pointing along `heading` (radians, CCW from +x).
    pub fn from_heading(heading: f64) -> Self {
        Vec2::new(heading.cos(), heading.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product (positive when `other` is CCW of self).
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Right-hand normal of the direction (points to the right of travel).
    pub fn right_normal(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n < 1e-12 {
            Vec2::ZERO
        } else {
            self * (1.0 / n)
        }
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Position plus heading (radians, CCW from +x).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose { x, y, heading }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

/// Result of projecting a point onto a polyline.
#[derive(Clone, Copy, Debug)]
pub struct Projection {
    /// Arc-length position of the foot point.
    pub s: f64,
    /// Signed lateral offset: positive to the left of travel direction.
    pub lateral: f64,
    /// Unsigned distance from the point to the polyline.
    pub dist: f64,
}

/// Polyline with precomputed cumulative arc lengths.
#[derive(Clone, Debug)]
pub struct Polyline {
    pts: Vec<Vec2>,
    cum: Vec<f64>,
}

impl Polyline {
    /// Panics if fewer than 2 points or consecutive points coincide; callers
    /// validate user-supplied geometry before constructing.
    pub fn new(pts: Vec<Vec2>) -> Self {
        assert!(pts.len() >= 2, "polyline needs at least 2 points");
        let mut cum = Vec::with_capacity(pts.len());
        cum.push(0.0);
        for w in pts.windows(2) {
            let d = w[0].dist(w[1]);
            assert!(d > 1e-9, "consecutive polyline points must be distinct");
            cum.push(cum.last().unwrap() + d);
        }
        Polyline { pts, cum }
    }

    pub fn points(&self) -> &[Vec2] {
        &self.pts
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn segment_index(&self, s: f64) -> usize {
        // Last segment whose start is <= s.
        match self.cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(self.pts.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.pts.len() - 2),
        }
    }

    /// Point at arc length `s`, clamped to the ends.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_index(s);
        let seg_len = self.cum[i + 1] - self.cum[i];
        let t = ((s - self.cum[i]) / seg_len).clamp(0.0, 1.0);
        self.pts[i] + (self.pts[i + 1] - self.pts[i]) * t
    }

    /// Travel heading at arc length `s` (heading of the containing segment).
    pub fn heading_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_index(s);
        (self.pts[i + 1] - self.pts[i]).heading()
    }

    /// Nearest point on the polyline, with signed lateral offset.
    pub fn project(&self, p: Vec2) -> Projection {
        let mut best = Projection {
            s: 0.0,
            lateral: 0.0,
            dist: f64::INFINITY,
        };
        for i in 0..self.pts.len() - 1 {
            let a = self.pts[i];
            let b = self.pts[i + 1];
            let ab = b - a;
            let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
            let foot = a + ab * t;
            let d = p.dist(foot);
            if d < best.dist {
                let side = ab.cross(p - a);
                best = Projection {
                    s: self.cum[i] + ab.norm() * t,
                    lateral: if side >= 0.0 { d } else { -d },
                    dist: d,
                };
            }
        }
        best
    }

    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.project(p).dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_and_heading_along_straight_line() {
        let pl = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)]);
        assert_eq!(pl.length(), 10.0);
        assert_eq!(pl.point_at(4.0), Vec2::new(4.0, 0.0));
        assert_eq!(pl.heading_at(4.0), 0.0);
        // Clamped beyond ends.
        assert_eq!(pl.point_at(15.0), Vec2::new(10.0, 0.0));
    }

    #[test]
    fn projection_reports_signed_lateral() {
        let pl = Polyline::new(vec![Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0)]);
        let left = pl.project(Vec2::new(3.0, 2.0));
        assert!((left.s - 3.0).abs() < 1e-12);
        assert!((left.lateral - 2.0).abs() < 1e-12);
        let right = pl.project(Vec2::new(3.0, -2.0));
        assert!((right.lateral + 2.0).abs() < 1e-12);
        assert!((right.dist - 2.0).abs() < 1e-12);
    }

    #[test]
    fn projection_on_bent_polyline_picks_nearest_segment() {
        let pl = Polyline::new(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(10.0, 10.0),
        ]);
        let p = pl.project(Vec2::new(12.0, 5.0));
        assert!((p.s - 15.0).abs() < 1e-12);
        assert!((p.dist - 2.0).abs() < 1e-12);
        // Right of the northbound segment.
        assert!(p.lateral < 0.0);
    }
}
