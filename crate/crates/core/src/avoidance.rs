//! Collision-cone reactive controller.
//!
//! Every finite return within `horizon` is an obstacle point. A point at
//! distance `d` blocks all headings within `asin(min(1, r_safe / d))` of its
//! bearing: driving straight along such a heading would bring the point
//! inside a disk of radius `r_safe` around the robot. The controller checks
//! the current heading; when it is blocked it turns toward the center of the
//! widest free gap in the forward half-plane and slows down in proportion to
//! the remaining clearance.

use crate::error::{Error, Result};
use crate::kinematics::{wrap_angle, Twist, OMEGA_MAX, ROBOT_RADIUS, V_MAX};
use crate::lidar::{Scan, MAX_RANGE};

/// Headings considered for escape, integer degrees either side of the nose.
const ESCAPE_SPAN_DEG: i32 = 90;
const ANGLE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    pub r_safe: f64,
    pub horizon: f64,
    pub k_turn: f64,
    pub v_max: f64,
    pub stop_range: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            r_safe: 0.3,
            horizon: 1.5,
            k_turn: 2.0,
            v_max: V_MAX,
            stop_range: 0.35,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.stop_range && self.stop_range < self.horizon && self.horizon <= MAX_RANGE) {
            return Err(Error::InvalidParameter(format!(
                "planner needs 0 < stop_range < horizon <= {MAX_RANGE}, got stop_range={} horizon={}",
                self.stop_range, self.horizon
            )));
        }
        if !(self.r_safe > ROBOT_RADIUS) {
            return Err(Error::InvalidParameter(format!(
                "r_safe must exceed the robot radius {ROBOT_RADIUS}, got {}",
                self.r_safe
            )));
        }
        if !(self.k_turn > 0.0 && self.v_max > 0.0 && self.v_max <= V_MAX) {
            return Err(Error::InvalidParameter("k_turn and v_max must be positive, v_max <= 0.1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct ObstaclePoint {
    bearing: f64,
    distance: f64,
}

impl ObstaclePoint {
    fn half_angle(&self, r_safe: f64) -> f64 {
        (r_safe / self.distance).min(1.0).asin()
    }

    fn blocks(&self, heading: f64, r_safe: f64) -> bool {
        // The slack absorbs rounding when a cone edge lands on an integer-degree heading.
        wrap_angle(self.bearing - heading).abs() <= self.half_angle(r_safe) + ANGLE_SLACK
    }
}

fn obstacle_points(scan: &Scan, horizon: f64) -> Vec<ObstaclePoint> {
    scan.ranges
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_finite() && **r <= horizon)
        .map(|(i, &r)| ObstaclePoint {
            bearing: Scan::bearing(i),
            distance: r,
        })
        .collect()
}

/// Widest run of unblocked headings.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Gap {
    /// Center in degrees, positive to the left.
    center: f64,
    /// Another run of the same width existed; the leftmost one won.
    tied: bool,
}

fn widest_gap(blocked: &[bool]) -> Option<Gap> {
    let mut best: Option<(usize, Gap)> = None;
    let mut i = 0;
    while i < blocked.len() {
        if blocked[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < blocked.len() && !blocked[i] {
            i += 1;
        }
        let width = i - start;
        let center = (start + i - 1) as f64 / 2.0 - ESCAPE_SPAN_DEG as f64;
        best = match best {
            Some((w, g)) if w > width => Some((w, g)),
            // Runs are visited right to left, so an equal-width later run is further left.
            Some((w, _)) if w == width => Some((width, Gap { center, tied: true })),
            _ => Some((width, Gap { center, tied: false })),
        };
    }
    best.map(|(_, g)| g)
}

fn blocked_headings(points: &[ObstaclePoint], r_safe: f64) -> Vec<bool> {
    (-ESCAPE_SPAN_DEG..=ESCAPE_SPAN_DEG)
        .map(|deg| {
            let h = (deg as f64).to_radians();
            points.iter().any(|p| p.blocks(h, r_safe))
        })
        .collect()
}

/// Maps a scan to a velocity command.
///
/// `_current` is accepted for interface symmetry with other controllers; the
/// cone is always evaluated along the heading because the base only drives
/// forward.
pub fn plan(scan: &Scan, _current: Twist, cfg: &PlannerConfig) -> Twist {
    let points = obstacle_points(scan, cfg.horizon);
    let threats: Vec<&ObstaclePoint> = points.iter().filter(|p| p.blocks(0.0, cfg.r_safe)).collect();
    if threats.is_empty() {
        return Twist::new(cfg.v_max, 0.0);
    }
    let blocked = blocked_headings(&points, cfg.r_safe);
    let Some(gap) = widest_gap(&blocked) else {
        return Twist::new(0.0, OMEGA_MAX);
    };
    let d_min = threats.iter().map(|p| p.distance).fold(f64::INFINITY, f64::min);
    let scale = ((d_min - cfg.stop_range) / (cfg.horizon - cfg.stop_range)).clamp(0.0, 1.0);
    let omega = (cfg.k_turn * gap.center.to_radians()).clamp(-OMEGA_MAX, OMEGA_MAX);
    Twist::new(cfg.v_max * scale, omega)
}
