//! The 15 Hz sense, plan, act, record loop.

use crate::avoidance::{plan, PlannerConfig};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::kinematics::{clamp_action, control_dt, step, Pose2, Twist, FPS, ROBOT_RADIUS};
use crate::lidar::{ns_to_secs, scan_with, LidarConfig, Scan};
use crate::raster::{DepthMap, Frame};
use crate::render::{render_ego, CameraConfig};
use crate::rng::SplitMix64;
use crate::world::World;

/// Frame period in nanoseconds, `round(1e9 / 15)`.
pub const FRAME_PERIOD_NS: u64 = 66_666_667;

/// Timestamp of frame `k`; epoch zero at the first frame.
pub fn frame_timestamp(k: usize) -> u64 {
    // round(k · 1e9 / 15) keeps the long-run rate exact while each step stays within ±1 ns.
    ((k as u128 * 1_000_000_000 + FPS as u128 / 2) / FPS as u128) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImuSample {
    pub yaw_rate: f64,
    pub forward_accel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OdomSample {
    pub pose: Pose2,
    pub twist: Twist,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub camera: CameraConfig,
    pub planner: PlannerConfig,
    pub lidar: LidarConfig,
    pub imu_noise: f64,
    pub odom_noise: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            camera: CameraConfig::default(),
            planner: PlannerConfig::default(),
            lidar: LidarConfig::default(),
            imu_noise: 0.0,
            odom_noise: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        self.planner.validate()?;
        if !(self.lidar.noise_sigma >= 0.0 && self.imu_noise >= 0.0 && self.odom_noise >= 0.0) {
            return Err(Error::InvalidParameter("noise levels must be non-negative".into()));
        }
        Ok(())
    }
}

/// One synchronized recording. All per-frame streams have equal length and
/// element `k` of each was captured at `timestamps[k]`. `actions[k]` is the
/// command applied on `[t_k, t_{k+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRecord {
    pub name: String,
    pub seed: u64,
    pub camera: CameraConfig,
    pub timestamps: Vec<u64>,
    pub left: Vec<Frame>,
    pub right: Vec<Frame>,
    pub depth: Vec<DepthMap>,
    pub scans: Vec<Scan>,
    pub actions: Vec<Twist>,
    pub odom: Vec<OdomSample>,
    pub imu: Vec<ImuSample>,
}

impl SequenceRecord {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// Closest approaches over a run, true-pose based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SafetySummary {
    /// Smallest gap between the robot disk and any wall.
    pub min_wall_clearance: f64,
    /// Smallest gap between the robot disk and any agent disk.
    pub min_agent_clearance: f64,
    pub distance_travelled: f64,
}

pub fn simulate_sequence(
    world: &World,
    spawn: Pose2,
    n_frames: usize,
    cfg: &SimConfig,
    seed: u64,
    name: &str,
) -> Result<(SequenceRecord, SafetySummary)> {
    if n_frames == 0 {
        return Err(Error::InvalidParameter("n_frames must be at least 1".into()));
    }
    cfg.validate()?;
    let mut rng = SplitMix64::new(seed);
    let mut lidar_rng = rng.fork();
    let mut imu_rng = rng.fork();
    let mut odom_rng = rng.fork();
    let dt = control_dt();

    let mut rec = SequenceRecord {
        name: name.to_string(),
        seed,
        camera: cfg.camera,
        timestamps: Vec::with_capacity(n_frames),
        left: Vec::with_capacity(n_frames),
        right: Vec::with_capacity(n_frames),
        depth: Vec::with_capacity(n_frames),
        scans: Vec::with_capacity(n_frames),
        actions: Vec::with_capacity(n_frames),
        odom: Vec::with_capacity(n_frames),
        imu: Vec::with_capacity(n_frames),
    };
    let mut summary = SafetySummary {
        min_wall_clearance: f64::INFINITY,
        min_agent_clearance: f64::INFINITY,
        distance_travelled: 0.0,
    };

    let mut pose = spawn;
    let mut odom_pose = spawn;
    let mut prev_action = Twist::ZERO;

    for k in 0..n_frames {
        let t_ns = frame_timestamp(k);
        let t = ns_to_secs(t_ns);
        if k > 0 {
            let next = step(pose, prev_action, dt);
            summary.distance_travelled += next.distance_to(&pose);
            pose = next;
            let noisy = if cfg.odom_noise > 0.0 {
                Twist::new(
                    prev_action.v + cfg.odom_noise * odom_rng.gaussian(),
                    prev_action.omega + cfg.odom_noise * odom_rng.gaussian(),
                )
            } else {
                prev_action
            };
            odom_pose = step(odom_pose, noisy, dt);
        }

        let p = Vec2::new(pose.x, pose.y);
        let wall_gap = world.wall_clearance(p) - ROBOT_RADIUS;
        if wall_gap < 0.0 {
            return Err(Error::Collision {
                frame: k,
                clearance: wall_gap,
            });
        }
        summary.min_wall_clearance = summary.min_wall_clearance.min(wall_gap);
        summary.min_agent_clearance = summary
            .min_agent_clearance
            .min(world.agent_clearance(p, ROBOT_RADIUS, t));

        let sweep = scan_with(world, pose, t_ns, &cfg.lidar, Some(&mut lidar_rng));
        // The base is stationary over the first interval.
        let action = if k == 0 {
            Twist::ZERO
        } else {
            clamp_action(plan(&sweep, prev_action, &cfg.planner), prev_action, dt)?
        };
        let (left, right, depth) = render_ego(world, pose, t, &cfg.camera);

        let mut imu = ImuSample {
            yaw_rate: action.omega,
            forward_accel: (action.v - prev_action.v) * FPS as f64,
        };
        if cfg.imu_noise > 0.0 {
            imu.yaw_rate += cfg.imu_noise * imu_rng.gaussian();
            imu.forward_accel += cfg.imu_noise * imu_rng.gaussian();
        }

        rec.timestamps.push(t_ns);
        rec.left.push(left);
        rec.right.push(right);
        rec.depth.push(depth);
        rec.scans.push(sweep);
        rec.actions.push(action);
        rec.odom.push(OdomSample {
            pose: odom_pose,
            twist: action,
        });
        rec.imu.push(imu);
        prev_action = action;
    }
    Ok((rec, summary))
}
