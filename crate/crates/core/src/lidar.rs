//! Planar 360-beam laser scanner modelled after the LDS-01.

use crate::geom::{ray_circle, ray_segment, Vec2};
use crate::kinematics::Pose2;
use crate::rng::SplitMix64;
use crate::world::{agent_pose_at, World};

pub const BEAMS: usize = 360;
pub const MIN_RANGE: f64 = 0.12;
pub const MAX_RANGE: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarConfig {
    pub min_range: f64,
    pub max_range: f64,
    /// Standard deviation of additive range noise, meters. Zero keeps scans exact.
    pub noise_sigma: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            min_range: MIN_RANGE,
            max_range: MAX_RANGE,
            noise_sigma: 0.0,
        }
    }
}

/// One sweep. `ranges[i]` is the return at bearing `i` degrees counterclockwise
/// from the heading; `f64::INFINITY` marks no return.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub t_ns: u64,
    pub ranges: Vec<f64>,
}

impl Scan {
    /// Bearing of beam `i` in radians, in `(-π, π]`.
    pub fn bearing(i: usize) -> f64 {
        let deg = if i <= 180 { i as f64 } else { i as f64 - 360.0 };
        deg.to_radians()
    }
}

pub fn ns_to_secs(t_ns: u64) -> f64 {
    t_ns as f64 * 1e-9
}

/// Distance along the unit ray `origin + s·dir` to the nearest wall or agent
/// disk at time `t`, or `None` when nothing is hit.
pub fn cast_ray(world: &World, origin: Vec2, dir: Vec2, t: f64) -> Option<f64> {
    let walls = world
        .walls
        .iter()
        .filter_map(|w| ray_segment(origin, dir, w));
    let agents = world.agents.iter().filter_map(|a| {
        let p = agent_pose_at(a, t);
        ray_circle(origin, dir, Vec2::new(p.x, p.y), a.radius)
    });
    walls.chain(agents).reduce(f64::min)
}

/// Noise-free scan with default sensor limits.
pub fn scan(world: &World, pose: Pose2, t_ns: u64) -> Scan {
    scan_with(world, pose, t_ns, &LidarConfig::default(), None)
}

pub fn scan_with(
    world: &World,
    pose: Pose2,
    t_ns: u64,
    cfg: &LidarConfig,
    mut noise: Option<&mut SplitMix64>,
) -> Scan {
    let t = ns_to_secs(t_ns);
    let origin = Vec2::new(pose.x, pose.y);
    let ranges = (0..BEAMS)
        .map(|i| {
            let th = pose.yaw + (i as f64).to_radians();
            let dir = Vec2::new(th.cos(), th.sin());
            let mut r = cast_ray(world, origin, dir, t).unwrap_or(f64::INFINITY);
            if cfg.noise_sigma > 0.0 {
                if let Some(rng) = noise.as_deref_mut() {
                    r += cfg.noise_sigma * rng.gaussian();
                }
            }
            if r < cfg.min_range || r > cfg.max_range {
                f64::INFINITY
            } else {
                r
            }
        })
        .collect();
    Scan { t_ns, ranges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{box_room, generate_world, Agent, Behavior, WorldParams};
    use proptest::prelude::*;

    fn unit_room() -> World {
        box_room(Vec2::new(-1.0, -1.0), Vec2::new(1.0, 1.0), Pose2::default())
    }

    fn standing(x: f64, y: f64, r: f64) -> Agent {
        Agent {
            radius: r,
            height: 1.7,
            behavior: Behavior::Stand,
            waypoints: vec![Vec2::new(x, y)],
            speed: 0.0,
            phase: 0.0,
            color_id: 0,
        }
    }

    #[test]
    fn square_room_box_geometry() {
        let s = scan(&unit_room(), Pose2::default(), 0);
        assert_eq!(s.ranges.len(), BEAMS);
        assert!((s.ranges[0] - 1.0).abs() < 1e-9);
        assert!((s.ranges[90] - 1.0).abs() < 1e-9);
        assert!((s.ranges[45] - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn agent_disk_dead_ahead() {
        let mut w = box_room(Vec2::new(-3.0, -3.0), Vec2::new(3.0, 3.0), Pose2::default());
        w.agents.push(standing(1.0, 0.0, 0.2));
        let s = scan(&w, Pose2::default(), 0);
        assert!((s.ranges[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_is_no_hit() {
        let w = box_room(Vec2::new(-5.0, -0.1), Vec2::new(5.0, 0.1), Pose2::default());
        let s = scan(&w, Pose2::default(), 0);
        // Beam 0 travels 5 m (> max range); beam 90 hits at 0.1 m (< min range).
        assert!(s.ranges[0].is_infinite());
        assert!(s.ranges[90].is_infinite());
    }

    #[test]
    fn returns_lie_on_geometry() {
        let p = WorldParams::default();
        let w = generate_world(5, &p).unwrap();
        let t_ns = 2_000_000_000;
        let s = scan(&w, w.spawn, t_ns);
        let t = ns_to_secs(t_ns);
        for (i, r) in s.ranges.iter().enumerate() {
            if !r.is_finite() {
                continue;
            }
            let th = w.spawn.yaw + (i as f64).to_radians();
            let q = Vec2::new(w.spawn.x + r * th.cos(), w.spawn.y + r * th.sin());
            let on_wall = w.wall_clearance(q);
            let on_agent = w
                .agents
                .iter()
                .map(|a| {
                    let ap = agent_pose_at(a, t);
                    (Vec2::new(ap.x, ap.y).sub(q).norm() - a.radius).abs()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(on_wall.min(on_agent) < 1e-9, "beam {i}");
        }
    }

    proptest! {
        #[test]
        fn yaw_rotation_shifts_beams(k in 0usize..360, x in -0.5f64..0.5, y in -0.5f64..0.5) {
            let mut w = box_room(Vec2::new(-1.5, -1.0), Vec2::new(2.0, 1.2), Pose2::default());
            w.agents.push(standing(0.9, 0.6, 0.15));
            let p0 = Pose2::new(x, y, 0.3);
            let base = scan(&w, p0, 0);
            let rotated = scan(&w, Pose2::new(x, y, 0.3 + (k as f64).to_radians()), 0);
            for i in 0..BEAMS {
                let a = rotated.ranges[i];
                let b = base.ranges[(i + k) % BEAMS];
                prop_assert!(a == b || (a - b).abs() < 1e-9, "i={} {} vs {}", i, a, b);
            }
        }

        #[test]
        fn adding_obstacle_never_increases_range(ax in -1.0f64..1.5, ay in -0.8f64..1.0, r in 0.05f64..0.4) {
            let w = box_room(Vec2::new(-1.5, -1.0), Vec2::new(2.0, 1.2), Pose2::default());
            let mut w2 = w.clone();
            w2.agents.push(standing(ax, ay, r));
            let p = Pose2::new(-1.2, -0.7, 0.4);
            let a = scan(&w, p, 0);
            let b = scan(&w2, p, 0);
            for i in 0..BEAMS {
                // A newly hit obstacle closer than the minimum range reads as no-hit,
                // which is the sensor's behavior, not the geometry's.
                if b.ranges[i].is_infinite() && a.ranges[i].is_finite() {
                    continue;
                }
                prop_assert!(b.ranges[i] <= a.ranges[i]);
            }
        }
    }
}
