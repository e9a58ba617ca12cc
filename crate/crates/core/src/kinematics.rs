//! Unicycle model of a differential-drive base and its actuation envelope.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Forward speed limits, m/s. The base never reverses.
pub const V_MIN: f64 = 0.0;
pub const V_MAX: f64 = 0.1;
/// Turn-rate limit, rad/s (symmetric).
pub const OMEGA_MAX: f64 = 1.8;
/// Forward acceleration limit, m/s². Also applied to deceleration.
pub const ACCEL_MAX: f64 = 0.2;
/// Recording and control rate.
pub const FPS: u32 = 15;
/// Footprint radius of the simulated base.
pub const ROBOT_RADIUS: f64 = 0.105;

/// Control period in seconds.
pub fn control_dt() -> f64 {
    1.0 / FPS as f64
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    /// Heading in `(-π, π]`.
    pub yaw: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: wrap_angle(yaw),
        }
    }

    /// Unit vector along the heading.
    pub fn forward(&self) -> (f64, f64) {
        (self.yaw.cos(), self.yaw.sin())
    }

    /// Unit vector 90° counterclockwise from the heading.
    pub fn left(&self) -> (f64, f64) {
        (-self.yaw.sin(), self.yaw.cos())
    }

    pub fn distance_to(&self, other: &Pose2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Rigid rotation of the whole pose about the origin.
    pub fn rotated(&self, theta: f64) -> Pose2 {
        let (s, c) = theta.sin_cos();
        Pose2::new(c * self.x - s * self.y, s * self.x + c * self.y, self.yaw + theta)
    }
}

/// Control action: forward speed and turn rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub v: f64,
    pub omega: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn within_envelope(&self) -> bool {
        (V_MIN..=V_MAX).contains(&self.v) && (-OMEGA_MAX..=OMEGA_MAX).contains(&self.omega)
    }
}

/// Projects a requested command onto the actuation envelope.
///
/// Forward speed is clipped to `[0, V_MAX]` and to `previous.v ± ACCEL_MAX·dt`;
/// turn rate is clipped to `±OMEGA_MAX` with no rate limit.
pub fn clamp_action(requested: Twist, previous: Twist, dt: f64) -> Result<Twist> {
    if !(requested.v.is_finite() && requested.omega.is_finite()) {
        return Err(Error::NonFinite("requested twist"));
    }
    if !(previous.v.is_finite() && previous.omega.is_finite()) {
        return Err(Error::NonFinite("previous twist"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let dv = ACCEL_MAX * dt;
    let lo = (previous.v - dv).max(V_MIN);
    let hi = (previous.v + dv).min(V_MAX);
    // A previous speed outside the envelope can make lo > hi; the envelope wins.
    let v = if lo <= hi {
        requested.v.clamp(lo, hi)
    } else {
        requested.v.clamp(V_MIN, V_MAX)
    };
    let omega = requested.omega.clamp(-OMEGA_MAX, OMEGA_MAX);
    Ok(Twist { v, omega })
}

/// Exact constant-twist arc integration over `dt`.
pub fn step(pose: Pose2, action: Twist, dt: f64) -> Pose2 {
    let Twist { v, omega } = action;
    let yaw = pose.yaw;
    if omega.abs() < 1e-6 {
        let (s, c) = yaw.sin_cos();
        Pose2::new(pose.x + v * dt * c, pose.y + v * dt * s, yaw + omega * dt)
    } else {
        let yaw1 = yaw + omega * dt;
        let r = v / omega;
        Pose2::new(
            pose.x + r * (yaw1.sin() - yaw.sin()),
            pose.y + r * (yaw.cos() - yaw1.cos()),
            yaw1,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn angle_diff(a: f64, b: f64) -> f64 {
        wrap_angle(a - b).abs()
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn clamp_accel_limit_from_rest() {
        let out = clamp_action(Twist::new(0.1, 0.0), Twist::ZERO, 1.0 / 15.0).unwrap();
        assert!((out.v - 0.2 / 15.0).abs() < 1e-15);
        assert!((out.v - 0.013333).abs() < 1e-6);
    }

    #[test]
    fn clamp_turn_rate_bound() {
        let out = clamp_action(Twist::new(0.05, 2.5), Twist::new(0.05, 0.0), 1.0 / 15.0).unwrap();
        assert_eq!(out, Twist::new(0.05, 1.8));
    }

    #[test]
    fn clamp_never_reverses() {
        let out = clamp_action(Twist::new(-0.3, 0.0), Twist::ZERO, 1.0 / 15.0).unwrap();
        assert_eq!(out, Twist::new(0.0, 0.0));
    }

    #[test]
    fn clamp_rejects_non_finite() {
        assert!(clamp_action(Twist::new(f64::NAN, 0.0), Twist::ZERO, 0.1).is_err());
        assert!(clamp_action(Twist::new(0.0, f64::INFINITY), Twist::ZERO, 0.1).is_err());
        assert!(clamp_action(Twist::ZERO, Twist::ZERO, 0.0).is_err());
    }

    #[test]
    fn step_straight() {
        let p = step(Pose2::default(), Twist::new(0.1, 0.0), 1.0);
        assert!((p.x - 0.1).abs() < 1e-15 && p.y == 0.0 && p.yaw == 0.0);
    }

    #[test]
    fn step_pure_rotation() {
        let p = step(Pose2::default(), Twist::new(0.0, 1.8), 1.0);
        assert_eq!((p.x, p.y), (0.0, 0.0));
        assert!((p.yaw - 1.8).abs() < 1e-15);
    }

    #[test]
    fn step_arc_closed_form() {
        // Reference values evaluated with 50-digit arithmetic:
        // (0.1/1.8)·sin 1.8 and (0.1/1.8)·(1 − cos 1.8).
        let p = step(Pose2::default(), Twist::new(0.1, 1.8), 1.0);
        assert!((p.x - 0.054_102_646_159_899_73).abs() < 1e-12, "{}", p.x);
        assert!((p.y - 0.068_177_894_149_615_95).abs() < 1e-12, "{}", p.y);
        assert!((p.yaw - 1.8).abs() < 1e-15);
    }

    #[test]
    fn arc_converges_to_straight() {
        let p0 = Pose2::new(0.3, -0.2, 0.7);
        let a = step(p0, Twist::new(0.1, 1e-7), 1.0 / 15.0);
        let b = step(p0, Twist::new(0.1, 0.0), 1.0 / 15.0);
        assert!(a.distance_to(&b) < 1e-6);
        // Just above the straight-line threshold, the arc branch must agree too.
        let c = step(p0, Twist::new(0.1, 2e-6), 1.0 / 15.0);
        assert!(c.distance_to(&b) < 1e-6);
    }

    proptest! {
        #[test]
        fn clamped_sequences_respect_envelope(reqs in prop::collection::vec((-1.0f64..1.0, -4.0f64..4.0), 1..200)) {
            let dt = control_dt();
            let mut prev = Twist::ZERO;
            for (v, w) in reqs {
                let out = clamp_action(Twist::new(v, w), prev, dt).unwrap();
                prop_assert!((out.v - prev.v).abs() <= ACCEL_MAX * dt + 1e-12);
                prop_assert!(out.within_envelope());
                // Idempotent on its own output.
                prop_assert_eq!(clamp_action(out, prev, dt).unwrap(), out);
                prev = out;
            }
        }

        #[test]
        fn step_is_rotation_equivariant(
            x in -5.0f64..5.0, y in -5.0f64..5.0, yaw in -3.1f64..3.1,
            v in 0.0f64..0.1, w in -1.8f64..1.8, theta in -3.1f64..3.1,
        ) {
            let dt = control_dt();
            let p = Pose2::new(x, y, yaw);
            let a = step(p.rotated(theta), Twist::new(v, w), dt);
            let b = step(p, Twist::new(v, w), dt).rotated(theta);
            prop_assert!(a.distance_to(&b) < 1e-9);
            prop_assert!(angle_diff(a.yaw, b.yaw) < 1e-9);
        }
    }
}
