//! Deterministic simulator for action-conditioned ego-vision navigation data.
//!
//! A differential-drive base explores procedurally generated corridors with a
//! collision-cone controller while recording stereo frames, z-depth, planar
//! LiDAR, odometry, IMU and the exact commands it executed, all on a shared
//! 15 Hz clock. The [`dataset`] module reads and writes the on-disk layout and
//! [`metrics`] scores predicted frames.

pub mod avoidance;
pub mod dataset;
pub mod error;
pub mod geom;
pub mod kinematics;
pub mod lidar;
pub mod metrics;
pub mod raster;
pub mod render;
pub mod rng;
pub mod sim;
pub mod world;

pub use error::{Error, Result};
pub use kinematics::{Pose2, Twist};
pub use raster::{DepthMap, Frame};
pub use rng::SplitMix64;
