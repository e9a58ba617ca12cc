//! Exact 2D ray intersection primitives shared by the LiDAR and the renderer.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self {
            a: Vec2::new(x1, y1),
            b: Vec2::new(x2, y2),
        }
    }

    pub fn length(&self) -> f64 {
        self.b.sub(self.a).norm()
    }

    /// Euclidean distance from `p` to the closest point of the segment.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let d = self.b.sub(self.a);
        let len2 = d.dot(d);
        let t = if len2 == 0.0 {
            0.0
        } else {
            (p.sub(self.a).dot(d) / len2).clamp(0.0, 1.0)
        };
        p.sub(self.a.add(d.scale(t))).norm()
    }
}

/// Ray parameter `t > 0` at which `origin + t·dir` meets the segment.
///
/// `dir` need not be unit length; the returned `t` is in units of `dir`.
/// Rays parallel to the segment never hit it.
pub fn ray_segment(origin: Vec2, dir: Vec2, seg: &Segment) -> Option<f64> {
    let e = seg.b.sub(seg.a);
    let denom = dir.cross(e);
    if denom == 0.0 {
        return None;
    }
    let w = seg.a.sub(origin);
    let t = w.cross(e) / denom;
    let u = w.cross(dir) / denom;
    if t > 0.0 && (0.0..=1.0).contains(&u) {
        Some(t)
    } else {
        None
    }
}

/// Smallest `t > 0` at which the ray enters the disk. A ray starting inside
/// the disk reports its exit point.
pub fn ray_circle(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let m = origin.sub(center);
    let a = dir.dot(dir);
    let b = m.dot(dir);
    let c = m.dot(m) - radius * radius;
    let disc = b * b - a * c;
    if disc < 0.0 || a == 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Numerically stable root pair.
    let q = if b > 0.0 { -(b + sq) } else { -b + sq };
    let (r1, r2) = if q == 0.0 {
        (0.0, 0.0)
    } else {
        let x1 = q / a;
        let x2 = c / q;
        (x1.min(x2), x1.max(x2))
    };
    if r1 > 0.0 {
        Some(r1)
    } else if r2 > 0.0 {
        Some(r2)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_perpendicular_segment() {
        let seg = Segment::new(1.0, -1.0, 1.0, 1.0);
        let t = ray_segment(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), &seg).unwrap();
        assert_eq!(t, 1.0);
        assert!(ray_segment(Vec2::new(0.0, 0.0), Vec2::new(-1.0, 0.0), &seg).is_none());
    }

    #[test]
    fn ray_scales_with_direction_length() {
        let seg = Segment::new(2.0, -1.0, 2.0, 1.0);
        let t = ray_segment(Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), &seg).unwrap();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn ray_circle_front_and_inside() {
        let t = ray_circle(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), 0.2).unwrap();
        assert!((t - 0.8).abs() < 1e-15);
        let t = ray_circle(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), 0.2).unwrap();
        assert!((t - 0.2).abs() < 1e-15);
        assert!(ray_circle(Vec2::new(0.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0), 0.2).is_none());
        assert!(ray_circle(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0), 0.2).is_none());
    }

    #[test]
    fn segment_distance() {
        let seg = Segment::new(0.0, 0.0, 2.0, 0.0);
        assert_eq!(seg.distance_to(Vec2::new(1.0, 1.0)), 1.0);
        assert_eq!(seg.distance_to(Vec2::new(3.0, 0.0)), 1.0);
    }
}
