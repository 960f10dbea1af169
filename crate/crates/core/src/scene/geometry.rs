//! Plan-view primitives and the segment crossing test used for occlusion.

use crate::error::SceneError;

/// Distance (meters) within which a sight line touching a segment endpoint
/// is treated as grazing rather than blocked.
pub const GRAZE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn sub(self, other: Point2) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }
}

/// An opaque, full-height vertical plane seen from above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSegment {
    pub a: Point2,
    pub b: Point2,
}

fn cross(u: (f64, f64), v: (f64, f64)) -> f64 {
    u.0 * v.1 - u.1 * v.0
}

impl WallSegment {
    pub fn new(a: Point2, b: Point2) -> Result<Self, SceneError> {
        if !a.is_finite() || !b.is_finite() {
            return Err(SceneError::NonFinite);
        }
        if a == b {
            return Err(SceneError::ZeroLengthWall { x: a.x, y: a.y });
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    /// True when the open segment `from`–`to` crosses the interior of this
    /// segment. Touching an endpoint of either segment (within
    /// [`GRAZE_TOLERANCE`]) and collinear overlap do not count.
    pub fn blocks(&self, from: Point2, to: Point2) -> bool {
        let r = to.sub(from);
        let s = self.b.sub(self.a);
        let r_len = r.0.hypot(r.1);
        let s_len = s.0.hypot(s.1);
        if r_len == 0.0 || s_len == 0.0 {
            return false;
        }
        let denom = cross(r, s);
        if denom.abs() <= 1e-12 * r_len * s_len {
            return false;
        }
        let qp = self.a.sub(from);
        let t = cross(qp, s) / denom;
        let u = cross(qp, r) / denom;
        t * r_len > GRAZE_TOLERANCE
            && (1.0 - t) * r_len > GRAZE_TOLERANCE
            && u * s_len > GRAZE_TOLERANCE
            && (1.0 - u) * s_len > GRAZE_TOLERANCE
    }

    /// Shortest distance from `p` to any point of the segment.
    pub fn distance_to(&self, p: Point2) -> f64 {
        let s = self.b.sub(self.a);
        let ap = p.sub(self.a);
        let len2 = s.0 * s.0 + s.1 * s.1;
        let t = ((ap.0 * s.0 + ap.1 * s.1) / len2).clamp(0.0, 1.0);
        let closest = Point2::new(self.a.x + t * s.0, self.a.y + t * s.1);
        p.distance(closest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> WallSegment {
        WallSegment::new(Point2::new(ax, ay), Point2::new(bx, by)).unwrap()
    }

    #[test]
    fn zero_length_rejected() {
        let p = Point2::new(1.0, 1.0);
        assert!(matches!(
            WallSegment::new(p, p),
            Err(SceneError::ZeroLengthWall { .. })
        ));
    }

    #[test]
    fn proper_crossing_blocks() {
        let wall = seg(1.0, -1.0, 1.0, 1.0);
        assert!(wall.blocks(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)));
        assert!(!wall.blocks(Point2::new(0.0, 0.0), Point2::new(0.5, 0.0)));
    }

    #[test]
    fn endpoint_graze_is_unobstructed() {
        let wall = seg(1.0, 0.0, 1.0, 1.0);
        assert!(!wall.blocks(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)));
        // sight line ending on the wall itself
        assert!(!wall.blocks(Point2::new(0.0, 0.5), Point2::new(1.0, 0.5)));
    }

    #[test]
    fn parallel_and_collinear_do_not_block() {
        let wall = seg(0.0, 1.0, 2.0, 1.0);
        assert!(!wall.blocks(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0)));
        assert!(!wall.blocks(Point2::new(-1.0, 1.0), Point2::new(3.0, 1.0)));
    }

    #[test]
    fn distance_to_segment() {
        let wall = seg(0.0, 0.0, 2.0, 0.0);
        assert!((wall.distance_to(Point2::new(1.0, 3.0)) - 3.0).abs() < 1e-12);
        assert!((wall.distance_to(Point2::new(5.0, 4.0)) - 5.0).abs() < 1e-12);
    }
}
