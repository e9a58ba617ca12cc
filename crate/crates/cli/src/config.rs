//! Flat `key=value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key has a default, so an
//! empty file (or no file) is a valid configuration. Unknown or repeated keys
//! are rejected with the offending line number.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use roamsim_core::sim::SimConfig;
use roamsim_core::world::WorldParams;
use roamsim_predictor::TrainConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub world: WorldParams,
    pub sim: SimConfig,
    pub train: TrainConfig,
    /// Training resolution `(height, width)`; frames are box-downsampled to it.
    pub resolution: (usize, usize),
    pub split: (usize, usize),
    pub split_seed: u64,
    pub world_seed: u64,
    /// Save a checkpoint every this many iterations (0 = only at the end).
    pub checkpoint_every: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            world: WorldParams::default(),
            sim: SimConfig::default(),
            train: TrainConfig::default(),
            resolution: (32, 32),
            split: (20, 5),
            split_seed: 0,
            world_seed: 0,
            checkpoint_every: 500,
        }
    }
}

struct Key {
    name: &'static str,
    doc: &'static str,
    get: fn(&RunConfig) -> String,
    set: fn(&mut RunConfig, &str) -> Result<(), String>,
}

fn parse<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| format!("cannot parse {v:?}: {e}"))
}

macro_rules! key {
    ($name:literal, $doc:literal, $($path:tt).+) => {
        Key {
            name: $name,
            doc: $doc,
            get: |c| c.$($path).+.to_string(),
            set: |c, v| {
                c.$($path).+ = parse(v)?;
                Ok(())
            },
        }
    };
}

const KEYS: &[Key] = &[
    key!("world.corridors", "number of corridors, 1..=8", world.corridors),
    key!("world.corridor_width", "corridor width in meters, 1.5..=4", world.corridor_width),
    key!("world.corridor_length_min", "shortest corridor, meters", world.corridor_length_min),
    key!("world.corridor_length_max", "longest corridor, meters", world.corridor_length_max),
    key!("world.lobby_size", "side of the lobby square, meters (0 = none)", world.lobby_size),
    key!("world.agents", "agents per world, 0..=10", world.agents),
    key!("world.walkers", "how many agents walk", world.walkers),
    key!("world.agent_speed_min", "slowest walker, m/s", world.agent_speed_min),
    key!("world.agent_speed_max", "fastest walker, m/s", world.agent_speed_max),
    key!("world.walker_keepout", "walking paths stay this far from the spawn, meters", world.walker_keepout),
    key!("world.static_keepout", "standing agents stay this far from the spawn, meters", world.static_keepout),
    key!("world.panel_length", "length of a wall panel (one color), meters", world.panel_length),
    key!("world.spawn_yaw_jitter", "spawn heading spread around the corridor axis, radians", world.spawn_yaw_jitter),
    key!("planner.r_safe", "safety radius around obstacles, meters", sim.planner.r_safe),
    key!("planner.horizon", "obstacles beyond this range are ignored, meters", sim.planner.horizon),
    key!("planner.k_turn", "proportional turn gain", sim.planner.k_turn),
    key!("planner.v_max", "cruise speed, m/s (at most 0.1)", sim.planner.v_max),
    key!("planner.stop_range", "stop forward motion below this range, meters", sim.planner.stop_range),
    key!("camera.width", "image width, pixels", sim.camera.width),
    key!("camera.height", "image height, pixels", sim.camera.height),
    key!("camera.hfov", "horizontal field of view, radians", sim.camera.hfov),
    key!("camera.baseline", "stereo baseline, meters", sim.camera.baseline),
    key!("camera.height_above_floor", "camera height, meters", sim.camera.height_above_floor),
    key!("lidar.min_range", "shortest valid return, meters", sim.lidar.min_range),
    key!("lidar.max_range", "longest valid return, meters", sim.lidar.max_range),
    key!("lidar.noise_sigma", "range noise standard deviation, meters", sim.lidar.noise_sigma),
    key!("sim.imu_noise", "IMU noise standard deviation", sim.imu_noise),
    key!("sim.odom_noise", "odometry noise standard deviation, meters", sim.odom_noise),
    key!("train.lr", "Adam learning rate", train.adam.lr),
    key!("train.beta1", "Adam first-moment decay", train.adam.beta1),
    key!("train.beta2", "Adam second-moment decay", train.adam.beta2),
    key!("train.eps", "Adam epsilon", train.adam.eps),
    key!("train.weight_decay", "decoupled weight decay", train.adam.weight_decay),
    key!("train.alpha_rec", "reconstruction (MSE) weight", train.loss.alpha_rec),
    key!("train.lambda_gdl", "gradient difference loss weight", train.loss.lambda_gdl),
    key!("train.batch", "clips per batch", train.batch),
    key!("train.context", "context frames", train.context),
    key!("train.horizon", "predicted frames per training sample", train.train_horizon),
    key!("train.infer_horizon", "predicted frames at inference", train.infer_horizon),
    key!("train.iterations", "optimizer steps", train.iterations),
    key!("train.clip_len", "frames per clip", train.clip_len),
    key!("train.clip_gap", "frames skipped between clips", train.clip_gap),
    key!("train.height", "training image height (divisible by 4)", resolution.0),
    key!("train.width", "training image width (divisible by 4)", resolution.1),
    key!("train.checkpoint_every", "checkpoint interval in iterations (0 = end only)", checkpoint_every),
    key!("split.train", "train share of the sequence split", split.0),
    key!("split.test", "test share of the sequence split", split.1),
    key!("seed.world", "base world seed for generate when --seed is absent", world_seed),
    key!("seed.split", "seed of the train/test shuffle", split_seed),
    key!("seed.train", "seed of parameter init and clip sampling", train.seed),
];

impl RunConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| CliError::Usage(format!("{source}:{}: {msg}", i + 1));
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            let key = KEYS.iter().find(|key| key.name == k).ok_or_else(|| bad(format!("unknown key {k:?}")))?;
            if seen.contains(&k) {
                return Err(bad(format!("key {k:?} given twice")));
            }
            seen.push(k);
            (key.set)(&mut cfg, v).map_err(|e| bad(format!("{k}: {e}")))?;
        }
        cfg.validate().map_err(|e| CliError::Usage(format!("{source}: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text, &p.display().to_string())
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.world.validate().map_err(|e| e.to_string())?;
        self.sim.validate().map_err(|e| e.to_string())?;
        self.train.validate().map_err(|e| e.to_string())?;
        let (h, w) = self.resolution;
        if h == 0 || w == 0 || h % 4 != 0 || w % 4 != 0 {
            return Err(format!("training resolution {w}x{h} must be positive multiples of 4"));
        }
        if self.split.0 == 0 || self.split.1 == 0 {
            return Err("split shares must both be positive".into());
        }
        Ok(())
    }

    /// Every key with its current value and a short description, in file syntax.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "# {}\n{}={}", k.doc, k.name, (k.get)(self));
        }
        out
    }

    pub fn keys() -> impl Iterator<Item = &'static str> {
        KEYS.iter().map(|k| k.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("# nothing\n\n", "t").unwrap(), RunConfig::default());
    }

    #[test]
    fn rendered_defaults_parse_back() {
        let mut cfg = RunConfig::default();
        cfg.train.adam.lr = 3e-4;
        cfg.world.agents = 6;
        cfg.resolution = (16, 24);
        assert_eq!(RunConfig::parse(&cfg.render(), "t").unwrap(), cfg);
    }

    #[test]
    fn unknown_key_names_the_line() {
        let err = RunConfig::parse("world.agents=3\nworld.agnets=4\n", "cfg.txt").unwrap_err();
        assert!(err.to_string().contains("cfg.txt:2"), "{err}");
        assert!(err.to_string().contains("agnets"));
    }

    #[test]
    fn duplicates_and_bad_values_are_rejected() {
        assert!(RunConfig::parse("train.lr=1\ntrain.lr=2\n", "t").is_err());
        assert!(RunConfig::parse("train.batch=eight\n", "t").is_err());
        assert!(RunConfig::parse("train.height=30\n", "t").is_err());
        assert!(RunConfig::parse("world.corridors=0\n", "t").is_err());
        assert!(RunConfig::parse("no equals sign\n", "t").is_err());
    }

    #[test]
    fn inline_comments_and_spacing() {
        let cfg = RunConfig::parse("  train.batch = 4   # small\n", "t").unwrap();
        assert_eq!(cfg.train.batch, 4);
    }

    #[test]
    fn keys_are_unique() {
        let mut names: Vec<_> = RunConfig::keys().collect();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
    }
}
