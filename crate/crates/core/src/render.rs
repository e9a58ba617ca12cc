//! Column raycaster for stereo ego-vision frames and z-depth.
//!
//! Each image column casts one ray in the floor plane. Walls span floor to
//! ceiling, agents are upright cylinders of their behavior's height, and
//! everything is flat-shaded. Rows are placed by pinhole projection with the
//! same focal length on both axes, so a point at height `h` and z-depth `z`
//! lands at normalized image height `(h − camera_height) / z`.

use crate::error::{Error, Result};
use crate::geom::{ray_circle, ray_segment, Vec2};
use crate::kinematics::Pose2;
use crate::raster::{DepthMap, Frame};
use crate::world::{agent_pose_at, World};

pub const WALL_HEIGHT: f64 = 2.5;
/// Walls farther than this (Euclidean, along the ray) are not drawn.
pub const MAX_RENDER_DISTANCE: f64 = 20.0;

const fn rgb(r: u8, g: u8, b: u8) -> [f32; 3] {
    [r as f32 / 255.0, g as f32 / 255.0, b as f32 / 255.0]
}

const FLOOR: [f32; 3] = rgb(96, 88, 80);
const CEILING: [f32; 3] = rgb(214, 214, 206);

const WALL_PALETTE: [[f32; 3]; 12] = [
    rgb(176, 64, 56),
    rgb(70, 130, 180),
    rgb(222, 184, 90),
    rgb(60, 140, 90),
    rgb(150, 110, 170),
    rgb(230, 230, 220),
    rgb(120, 90, 60),
    rgb(40, 60, 110),
    rgb(200, 120, 40),
    rgb(110, 160, 160),
    rgb(180, 180, 70),
    rgb(90, 90, 90),
];

const AGENT_PALETTE: [[f32; 3]; 6] = [
    rgb(20, 20, 200),
    rgb(220, 30, 120),
    rgb(250, 120, 0),
    rgb(0, 170, 0),
    rgb(140, 0, 180),
    rgb(10, 10, 10),
];

pub fn wall_color(index: usize) -> [f32; 3] {
    // Stride co-prime with the palette so neighbouring panels differ.
    WALL_PALETTE[(index * 5) % WALL_PALETTE.len()]
}

pub fn agent_color(color_id: u8) -> [f32; 3] {
    AGENT_PALETTE[color_id as usize % AGENT_PALETTE.len()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, radians.
    pub hfov: f64,
    /// Stereo baseline, meters.
    pub baseline: f64,
    pub height_above_floor: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            hfov: std::f64::consts::FRAC_PI_2,
            baseline: 0.063,
            height_above_floor: 0.15,
        }
    }
}

impl CameraConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(Error::InvalidParameter(format!(
                "camera must be at least 8x8, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.hfov > 0.0 && self.hfov < std::f64::consts::PI) {
            return Err(Error::InvalidParameter(format!("hfov must be in (0, π), got {}", self.hfov)));
        }
        if !(self.baseline > 0.0) {
            return Err(Error::InvalidParameter("baseline must be positive".into()));
        }
        if !(self.height_above_floor > 0.0 && self.height_above_floor < WALL_HEIGHT) {
            return Err(Error::InvalidParameter("camera height must be between floor and ceiling".into()));
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.hfov / 2.0).tan()
    }

    /// Normalized horizontal image coordinate of column `c` (positive to the right).
    pub fn column_x(&self, c: usize) -> f64 {
        (c as f64 + 0.5 - self.width as f64 / 2.0) / self.focal()
    }

    /// Normalized vertical image coordinate of row `r` (positive up).
    pub fn row_y(&self, r: usize) -> f64 {
        (self.height as f64 / 2.0 - r as f64 - 0.5) / self.focal()
    }

    /// Bearing of column `c` relative to the optical axis (positive left).
    pub fn column_bearing(&self, c: usize) -> f64 {
        (-self.column_x(c)).atan()
    }
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    z: f64,
    color: [f32; 3],
    /// Vertical extent above the floor.
    top: f64,
}

fn render_view(world: &World, origin: Vec2, yaw: f64, t: f64, cam: &CameraConfig, want_depth: bool) -> (Frame, Option<DepthMap>) {
    let fwd = Vec2::new(yaw.cos(), yaw.sin());
    let left = Vec2::new(-yaw.sin(), yaw.cos());
    let agents: Vec<(Vec2, f64, f64, [f32; 3])> = world
        .agents
        .iter()
        .map(|a| {
            let p = agent_pose_at(a, t);
            (Vec2::new(p.x, p.y), a.radius, a.height, agent_color(a.color_id))
        })
        .collect();
    let hcam = cam.height_above_floor;
    let mut frame = Frame::filled(cam.width, cam.height, 0.0);
    let mut depth = want_depth.then(|| DepthMap::filled(cam.width, cam.height, f32::INFINITY));
    let mut hits: Vec<Hit> = Vec::with_capacity(agents.len());

    for c in 0..cam.width {
        // Forward component is 1, so the ray parameter is the z-depth.
        let dir = fwd.sub(left.scale(cam.column_x(c)));
        let dir_len = dir.norm();
        let wall = world
            .walls
            .iter()
            .enumerate()
            .filter_map(|(i, s)| ray_segment(origin, dir, s).map(|z| (z, i)))
            .filter(|(z, _)| z * dir_len <= MAX_RENDER_DISTANCE)
            .min_by(|a, b| a.0.total_cmp(&b.0));

        hits.clear();
        for &(center, radius, height, color) in &agents {
            if let Some(z) = ray_circle(origin, dir, center, radius) {
                if wall.is_none_or(|(zw, _)| z < zw) {
                    hits.push(Hit { z, color, top: height });
                }
            }
        }
        // Nearest first; the first agent covering a pixel wins.
        hits.sort_by(|a, b| a.z.total_cmp(&b.z));

        for r in 0..cam.height {
            let y = cam.row_y(r);
            let (mut color, mut z) = match wall {
                Some((zw, i)) if y >= -hcam / zw && y <= (WALL_HEIGHT - hcam) / zw => (wall_color(i), zw),
                _ if y < 0.0 => (FLOOR, hcam / -y),
                _ => (CEILING, (WALL_HEIGHT - hcam) / y),
            };
            for h in &hits {
                if h.z < z && y >= -hcam / h.z && y <= (h.top - hcam) / h.z {
                    color = h.color;
                    z = h.z;
                    break;
                }
            }
            frame.set_pixel(r, c, color);
            if let Some(d) = depth.as_mut() {
                d.data[r * cam.width + c] = z as f32;
            }
        }
    }
    (frame, depth)
}

/// Renders the left frame, the right frame and the left camera's z-depth.
///
/// The left camera sits at the robot origin looking along the heading; the
/// right camera is offset by `baseline` along the camera-right axis.
pub fn render_ego(world: &World, pose: Pose2, t: f64, cam: &CameraConfig) -> (Frame, Frame, DepthMap) {
    let origin = Vec2::new(pose.x, pose.y);
    let (lx, ly) = pose.left();
    let right_origin = origin.sub(Vec2::new(lx, ly).scale(cam.baseline));
    let (left, depth) = render_view(world, origin, pose.yaw, t, cam, true);
    let (right, _) = render_view(world, right_origin, pose.yaw, t, cam, false);
    (left, right, depth.expect("left view renders depth"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lidar::scan;
    use crate::world::{box_room, generate_world, Agent, Behavior, WorldParams, AGENT_HEIGHT};

    fn standing(x: f64, y: f64, r: f64, behavior: Behavior) -> Agent {
        Agent {
            radius: r,
            height: crate::world::agent_height(behavior),
            behavior,
            waypoints: vec![Vec2::new(x, y)],
            speed: 0.0,
            phase: 0.0,
            color_id: 0,
        }
    }

    #[test]
    fn fronto_parallel_wall_has_constant_depth() {
        // Wide wall at x = 1, spanning the whole field of view.
        let w = box_room(Vec2::new(-1.0, -50.0), Vec2::new(1.0, 50.0), Pose2::default());
        let cam = CameraConfig::default();
        let (_, _, d) = render_ego(&w, Pose2::default(), 0.0, &cam);
        let mut wall_pixels = 0;
        for r in 0..cam.height {
            let y = cam.row_y(r);
            if y >= -cam.height_above_floor && y <= WALL_HEIGHT - cam.height_above_floor {
                for c in 0..cam.width {
                    assert!((d.at(r, c) as f64 - 1.0).abs() < 1e-9);
                    wall_pixels += 1;
                }
            }
        }
        assert!(wall_pixels > 0);
    }

    #[test]
    fn empty_direction_shows_floor_and_ceiling() {
        // Corridor 60 m long: looking down it, nothing within 20 m.
        let w = box_room(Vec2::new(-1.0, -30.0), Vec2::new(60.0, 30.0), Pose2::default());
        let cam = CameraConfig::default();
        let (f, _, d) = render_ego(&w, Pose2::default(), 0.0, &cam);
        let c = cam.width / 2;
        for r in 0..cam.height {
            let expected = if cam.row_y(r) < 0.0 { FLOOR } else { CEILING };
            assert_eq!(f.pixel(r, c), expected);
            assert!(d.at(r, c).is_finite() && d.at(r, c) > 0.0);
        }
    }

    #[test]
    fn frames_are_in_unit_range_and_deterministic() {
        let world = generate_world(2, &WorldParams::default()).unwrap();
        let cam = CameraConfig::default();
        let a = render_ego(&world, world.spawn, 1.5, &cam);
        let b = render_ego(&world, world.spawn, 1.5, &cam);
        assert_eq!(a, b);
        for f in [&a.0, &a.1] {
            assert!(f.data.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert!(a.2.data.iter().all(|z| !z.is_finite() || *z > 0.0));
    }

    #[test]
    fn seated_agent_is_shorter() {
        let cam = CameraConfig::default();
        let count_rows = |behavior| {
            let mut w = box_room(Vec2::new(-1.0, -3.0), Vec2::new(8.0, 3.0), Pose2::default());
            w.agents.push(standing(4.0, 0.0, 0.2, behavior));
            let (f, _, _) = render_ego(&w, Pose2::default(), 0.0, &cam);
            (0..cam.height)
                .filter(|&r| f.pixel(r, cam.width / 2) == agent_color(0))
                .count()
        };
        let stand = count_rows(Behavior::Stand);
        let sit = count_rows(Behavior::Sit);
        assert!(sit < stand && sit > 0, "sit {sit} stand {stand}");
        assert!(AGENT_HEIGHT > 0.0);
    }

    #[test]
    fn depth_matches_lidar_on_centerline() {
        let world = generate_world(4, &WorldParams::default()).unwrap();
        let cam = CameraConfig::default();
        let t = 0.8;
        let (_, _, d) = render_ego(&world, world.spawn, t, &cam);
        let row = cam.height / 2;
        let t_ns = (t * 1e9).round() as u64;
        for c in 0..cam.width {
            let b = cam.column_bearing(c);
            // Point beam 0 of the scanner along this column's ray.
            let probe = Pose2::new(world.spawn.x, world.spawn.y, world.spawn.yaw + b);
            let lidar = scan(&world, probe, t_ns).ranges[0];
            if !lidar.is_finite() {
                continue;
            }
            let range = d.at(row, c) as f64 / b.cos();
            // Depth is stored as f32.
            assert!((range - lidar).abs() < 1e-6, "col {c}: {range} vs {lidar}");
        }
    }

    #[test]
    fn stereo_disparity_of_near_agent() {
        let mut w = box_room(Vec2::new(-1.0, -5.0), Vec2::new(10.0, 5.0), Pose2::default());
        w.agents.push(standing(1.0, 0.0, 0.15, Behavior::Stand));
        let cam = CameraConfig::default();
        let (l, r, _) = render_ego(&w, Pose2::default(), 0.0, &cam);
        let row = cam.height / 2;
        let center = |f: &Frame| {
            let cols: Vec<f64> = (0..cam.width)
                .filter(|&c| f.pixel(row, c) == agent_color(0))
                .map(|c| c as f64)
                .collect();
            cols.iter().sum::<f64>() / cols.len() as f64
        };
        let disparity = center(&l) - center(&r);
        let expected = cam.focal() * cam.baseline / 1.0;
        assert!((disparity - expected).abs() <= 1.0, "{disparity} vs {expected}");
    }
}
