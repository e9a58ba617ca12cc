//! Procedural indoor worlds: axis-aligned corridors (optionally a lobby) with
//! scripted human-like agents.
//!
//! Free space is the union of axis-aligned rectangles on a 0.1 m grid. The
//! walls are the exact boundary of that union, merged into maximal straight
//! runs and then cut into panels of at most `panel_length` meters so the
//! renderer has visual structure to work with. Because walls are derived from
//! a padded occupancy grid, the outer boundary is always closed.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::{Segment, Vec2};
use crate::kinematics::Pose2;
use crate::rng::SplitMix64;

const CELL: f64 = 0.1;
/// Nominal standing height of an agent, meters.
pub const AGENT_HEIGHT: f64 = 1.7;
/// Seated agents render at this fraction of [`AGENT_HEIGHT`].
pub const SIT_HEIGHT_RATIO: f64 = 0.6;
/// Clear radius around the spawn point.
pub const SPAWN_CLEARANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Behavior {
    Walk,
    Stand,
    Sit,
}

impl Behavior {
    pub fn as_str(&self) -> &'static str {
        match self {
            Behavior::Walk => "walk",
            Behavior::Stand => "stand",
            Behavior::Sit => "sit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "walk" => Some(Behavior::Walk),
            "stand" => Some(Behavior::Stand),
            "sit" => Some(Behavior::Sit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub radius: f64,
    pub height: f64,
    pub behavior: Behavior,
    pub waypoints: Vec<Vec2>,
    pub speed: f64,
    pub phase: f64,
    pub color_id: u8,
}

impl Agent {
    /// Length of the closed waypoint loop (last waypoint returns to the first).
    pub fn loop_length(&self) -> f64 {
        let n = self.waypoints.len();
        (0..n)
            .map(|i| self.waypoints[(i + 1) % n].sub(self.waypoints[i]).norm())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::InvalidParameter("agent radius must be positive".into()));
        }
        if !(self.speed >= 0.0) {
            return Err(Error::InvalidParameter("agent speed must be non-negative".into()));
        }
        let ok = match self.behavior {
            Behavior::Walk => self.waypoints.len() >= 2,
            Behavior::Stand | Behavior::Sit => self.waypoints.len() == 1,
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "{} agent has {} waypoints",
                self.behavior.as_str(),
                self.waypoints.len()
            )));
        }
        Ok(())
    }
}

/// Pose of an agent at time `t` (seconds since sequence start).
///
/// Walkers cycle through their waypoints at constant speed, closing the loop
/// back to the first waypoint; stationary agents stay at their single point.
pub fn agent_pose_at(agent: &Agent, t: f64) -> Pose2 {
    let wp = &agent.waypoints;
    if agent.behavior != Behavior::Walk || wp.len() < 2 || agent.speed == 0.0 {
        return Pose2::new(wp[0].x, wp[0].y, 0.0);
    }
    let total = agent.loop_length();
    if total == 0.0 {
        return Pose2::new(wp[0].x, wp[0].y, 0.0);
    }
    let mut s = ((t + agent.phase) * agent.speed).rem_euclid(total);
    let n = wp.len();
    for i in 0..n {
        let a = wp[i];
        let b = wp[(i + 1) % n];
        let d = b.sub(a);
        let len = d.norm();
        if s <= len || i == n - 1 {
            let u = if len > 0.0 { (s / len).min(1.0) } else { 0.0 };
            let p = a.add(d.scale(u));
            return Pose2::new(p.x, p.y, d.y.atan2(d.x));
        }
        s -= len;
    }
    unreachable!("loop covers the whole perimeter")
}

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldParams {
    /// Number of corridors, 1..=8.
    pub corridors: u32,
    /// Corridor width in meters, 1.5..=4.
    pub corridor_width: f64,
    pub corridor_length_min: f64,
    pub corridor_length_max: f64,
    /// Side of a square lobby attached to the first corridor; 0 disables it.
    pub lobby_size: f64,
    /// Total agents, 0..=10.
    pub agents: u32,
    /// How many of the agents walk; the rest stand or sit. A walker whose path
    /// cannot respect `walker_keepout` in this layout is placed standing instead.
    pub walkers: u32,
    pub agent_speed_min: f64,
    pub agent_speed_max: f64,
    /// Walking paths keep at least this distance (plus the agent radius) from the spawn point.
    pub walker_keepout: f64,
    /// Stationary agents keep at least this distance from the spawn point.
    pub static_keepout: f64,
    pub panel_length: f64,
    /// Spawn heading is drawn uniformly from `±spawn_yaw_jitter` around the corridor axis.
    pub spawn_yaw_jitter: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            corridors: 3,
            corridor_width: 2.0,
            corridor_length_min: 6.0,
            corridor_length_max: 12.0,
            lobby_size: 0.0,
            agents: 4,
            walkers: 3,
            agent_speed_min: 0.4,
            agent_speed_max: 1.2,
            walker_keepout: 3.0,
            static_keepout: 1.0,
            panel_length: 1.0,
            spawn_yaw_jitter: 0.3,
        }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(1..=8).contains(&self.corridors) {
            return bad(format!("corridors must be in [1, 8], got {}", self.corridors));
        }
        if !(1.5..=4.0).contains(&self.corridor_width) {
            return bad(format!("corridor_width must be in [1.5, 4], got {}", self.corridor_width));
        }
        if !(self.corridor_length_min >= 3.0 && self.corridor_length_min <= self.corridor_length_max)
            || !self.corridor_length_max.is_finite()
        {
            return bad("corridor lengths need 3 <= min <= max".into());
        }
        if !(self.lobby_size == 0.0 || (3.0..=12.0).contains(&self.lobby_size)) {
            return bad(format!("lobby_size must be 0 or in [3, 12], got {}", self.lobby_size));
        }
        if self.agents > 10 {
            return bad(format!("agents must be in [0, 10], got {}", self.agents));
        }
        if self.walkers > self.agents {
            return bad("walkers cannot exceed agents".into());
        }
        if !(self.agent_speed_min >= 0.0 && self.agent_speed_min <= self.agent_speed_max && self.agent_speed_max <= 3.0) {
            return bad("agent speeds need 0 <= min <= max <= 3".into());
        }
        if !(self.walker_keepout >= 0.0 && self.static_keepout >= 0.0) {
            return bad("keepouts must be non-negative".into());
        }
        if !(self.panel_length > 0.0) {
            return bad("panel_length must be positive".into());
        }
        if !(0.0..=PI).contains(&self.spawn_yaw_jitter) {
            return bad("spawn_yaw_jitter must be in [0, π]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub walls: Vec<Segment>,
    pub agents: Vec<Agent>,
    pub bounds: Bounds,
    pub spawn: Pose2,
    pub seed: u64,
}

/// Free-space rectangle in grid cells, half-open.
#[derive(Debug, Clone, Copy)]
struct CellRect {
    x0: i64,
    y0: i64,
    x1: i64,
    y1: i64,
    horizontal: bool,
}

impl CellRect {
    fn to_meters(self) -> (Vec2, Vec2) {
        (
            Vec2::new(self.x0 as f64 * CELL, self.y0 as f64 * CELL),
            Vec2::new(self.x1 as f64 * CELL, self.y1 as f64 * CELL),
        )
    }
}

fn cells(m: f64) -> i64 {
    (m / CELL).round() as i64
}

fn layout(rng: &mut SplitMix64, p: &WorldParams) -> Vec<CellRect> {
    let wc = cells(p.corridor_width);
    let draw_len = |rng: &mut SplitMix64| cells(rng.uniform(p.corridor_length_min, p.corridor_length_max));
    let mut rects = Vec::with_capacity(p.corridors as usize + 1);
    let l0 = draw_len(rng);
    rects.push(CellRect {
        x0: -l0 / 2,
        y0: -wc / 2,
        x1: l0 - l0 / 2,
        y1: wc - wc / 2,
        horizontal: true,
    });
    for _ in 1..p.corridors {
        let parent = rects[rng.below(rects.len() as u64) as usize];
        let len = draw_len(rng);
        let positive = rng.next_f64() < 0.5;
        let rect = if parent.horizontal {
            let lo = parent.x0;
            let hi = (parent.x1 - wc).max(lo);
            let jx = lo + rng.below((hi - lo + 1) as u64) as i64;
            let (y0, y1) = if positive {
                (parent.y0, parent.y1 + len)
            } else {
                (parent.y0 - len, parent.y1)
            };
            CellRect {
                x0: jx,
                y0,
                x1: jx + wc,
                y1,
                horizontal: false,
            }
        } else {
            let lo = parent.y0;
            let hi = (parent.y1 - wc).max(lo);
            let jy = lo + rng.below((hi - lo + 1) as u64) as i64;
            let (x0, x1) = if positive {
                (parent.x0, parent.x1 + len)
            } else {
                (parent.x0 - len, parent.x1)
            };
            CellRect {
                x0,
                y0: jy,
                x1,
                y1: jy + wc,
                horizontal: true,
            }
        };
        rects.push(rect);
    }
    if p.lobby_size > 0.0 {
        let s = cells(p.lobby_size);
        let c0 = rects[0];
        let cy = (c0.y0 + c0.y1) / 2;
        rects.push(CellRect {
            x0: c0.x1 - wc,
            y0: cy - s / 2,
            x1: c0.x1 - wc + s,
            y1: cy - s / 2 + s,
            horizontal: true,
        });
    }
    rects
}

struct Grid {
    ox: i64,
    oy: i64,
    w: i64,
    h: i64,
    free: Vec<bool>,
}

impl Grid {
    fn rasterize(rects: &[CellRect]) -> Grid {
        let x_min = rects.iter().map(|r| r.x0).min().unwrap() - 1;
        let y_min = rects.iter().map(|r| r.y0).min().unwrap() - 1;
        let x_max = rects.iter().map(|r| r.x1).max().unwrap() + 1;
        let y_max = rects.iter().map(|r| r.y1).max().unwrap() + 1;
        let (w, h) = (x_max - x_min, y_max - y_min);
        let mut free = vec![false; (w * h) as usize];
        for r in rects {
            for y in r.y0..r.y1 {
                for x in r.x0..r.x1 {
                    free[((y - y_min) * w + (x - x_min)) as usize] = true;
                }
            }
        }
        Grid {
            ox: x_min,
            oy: y_min,
            w,
            h,
            free,
        }
    }

    fn is_free(&self, gx: i64, gy: i64) -> bool {
        gx >= 0 && gy >= 0 && gx < self.w && gy < self.h && self.free[(gy * self.w + gx) as usize]
    }

    /// Maximal straight boundary runs between free and blocked cells.
    fn boundary(&self) -> Vec<Segment> {
        let mut out = Vec::new();
        // Horizontal edges lie on grid line y = gy, between rows gy-1 and gy.
        for gy in 0..=self.h {
            let mut run: Option<(i64, bool)> = None;
            for gx in 0..=self.w {
                let edge = if gx < self.w {
                    let below = self.is_free(gx, gy - 1);
                    let above = self.is_free(gx, gy);
                    (below != above).then_some(above)
                } else {
                    None
                };
                match (run, edge) {
                    (Some((_, side)), Some(s)) if side == s => {}
                    _ => {
                        if let Some((start, _)) = run.take() {
                            let y = (gy + self.oy) as f64 * CELL;
                            out.push(Segment::new(
                                (start + self.ox) as f64 * CELL,
                                y,
                                (gx + self.ox) as f64 * CELL,
                                y,
                            ));
                        }
                        run = edge.map(|s| (gx, s));
                    }
                }
            }
        }
        // Vertical edges lie on grid line x = gx.
        for gx in 0..=self.w {
            let mut run: Option<(i64, bool)> = None;
            for gy in 0..=self.h {
                let edge = if gy < self.h {
                    let left = self.is_free(gx - 1, gy);
                    let right = self.is_free(gx, gy);
                    (left != right).then_some(right)
                } else {
                    None
                };
                match (run, edge) {
                    (Some((_, side)), Some(s)) if side == s => {}
                    _ => {
                        if let Some((start, _)) = run.take() {
                            let x = (gx + self.ox) as f64 * CELL;
                            out.push(Segment::new(
                                x,
                                (start + self.oy) as f64 * CELL,
                                x,
                                (gy + self.oy) as f64 * CELL,
                            ));
                        }
                        run = edge.map(|s| (gy, s));
                    }
                }
            }
        }
        out
    }
}

fn split_panels(walls: Vec<Segment>, panel: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    for w in walls {
        let n = (w.length() / panel).ceil().max(1.0) as usize;
        let d = w.b.sub(w.a);
        for k in 0..n {
            let a = if k == 0 { w.a } else { w.a.add(d.scale(k as f64 / n as f64)) };
            let b = if k + 1 == n { w.b } else { w.a.add(d.scale((k + 1) as f64 / n as f64)) };
            out.push(Segment { a, b });
        }
    }
    out
}

/// Builds a world deterministically from `(seed, params)`.
pub fn generate_world(seed: u64, params: &WorldParams) -> Result<World> {
    params.validate()?;
    let mut rng = SplitMix64::new(seed);
    let mut layout_rng = rng.fork();
    let mut spawn_rng = rng.fork();
    let mut agent_rng = rng.fork();

    let rects = layout(&mut layout_rng, params);
    let grid = Grid::rasterize(&rects);
    let walls = split_panels(grid.boundary(), params.panel_length);

    let bounds = {
        let min_x = rects.iter().map(|r| r.x0).min().unwrap();
        let min_y = rects.iter().map(|r| r.y0).min().unwrap();
        let max_x = rects.iter().map(|r| r.x1).max().unwrap();
        let max_y = rects.iter().map(|r| r.y1).max().unwrap();
        Bounds {
            min: Vec2::new(min_x as f64 * CELL, min_y as f64 * CELL),
            max: Vec2::new(max_x as f64 * CELL, max_y as f64 * CELL),
        }
    };

    // Spawn on the first corridor's centerline, at least 1 m from its ends.
    let spawn = {
        let (lo, hi) = rects[0].to_meters();
        let cy = 0.5 * (lo.y + hi.y);
        let x = spawn_rng.uniform(lo.x + 1.0, hi.x - 1.0);
        let base = if spawn_rng.next_f64() < 0.5 { 0.0 } else { PI };
        let jitter = spawn_rng.uniform(-params.spawn_yaw_jitter, params.spawn_yaw_jitter);
        Pose2::new(x, cy, base + jitter)
    };
    let spawn_pt = Vec2::new(spawn.x, spawn.y);

    let mut agents = Vec::with_capacity(params.agents as usize);
    for i in 0..params.agents {
        let walker = i < params.walkers;
        let agent = match place_agent(&mut agent_rng, params, &rects, spawn_pt, walker, i as u8) {
            Err(_) if walker => place_agent(&mut agent_rng, params, &rects, spawn_pt, false, i as u8)?,
            other => other?,
        };
        agents.push(agent);
    }

    Ok(World {
        walls,
        agents,
        bounds,
        spawn,
        seed,
    })
}

fn place_agent(
    rng: &mut SplitMix64,
    params: &WorldParams,
    rects: &[CellRect],
    spawn: Vec2,
    walker: bool,
    color_id: u8,
) -> Result<Agent> {
    const ATTEMPTS: usize = 1000;
    for _ in 0..ATTEMPTS {
        let radius = rng.uniform(0.2, 0.3);
        let rect = rects[rng.below(rects.len() as u64) as usize];
        let (lo, hi) = rect.to_meters();
        let margin = radius + 0.1;
        let (lo, hi) = (
            Vec2::new(lo.x + margin, lo.y + margin),
            Vec2::new(hi.x - margin, hi.y - margin),
        );
        if lo.x >= hi.x || lo.y >= hi.y {
            continue;
        }
        if walker {
            let lateral_axis_horizontal = rect.horizontal;
            let (along_lo, along_hi, across_lo, across_hi) = if lateral_axis_horizontal {
                (lo.x, hi.x, lo.y, hi.y)
            } else {
                (lo.y, hi.y, lo.x, hi.x)
            };
            if along_hi - along_lo < 1.5 {
                continue;
            }
            let across = rng.uniform(across_lo, across_hi);
            let a = rng.uniform(along_lo, along_hi - 1.5);
            let b = rng.uniform(a + 1.5, along_hi);
            let (p, q) = if lateral_axis_horizontal {
                (Vec2::new(a, across), Vec2::new(b, across))
            } else {
                (Vec2::new(across, a), Vec2::new(across, b))
            };
            let path = Segment { a: p, b: q };
            if path.distance_to(spawn) < params.walker_keepout + radius {
                continue;
            }
            let speed = rng.uniform(params.agent_speed_min, params.agent_speed_max);
            let loop_len = 2.0 * path.length();
            let phase = if speed > 0.0 { rng.uniform(0.0, loop_len / speed) } else { 0.0 };
            return Ok(Agent {
                radius,
                height: AGENT_HEIGHT,
                behavior: Behavior::Walk,
                waypoints: vec![p, q],
                speed,
                phase,
                color_id,
            });
        } else {
            let p = Vec2::new(rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y));
            if p.sub(spawn).norm() < (SPAWN_CLEARANCE + radius).max(params.static_keepout + radius) {
                continue;
            }
            let behavior = if rng.next_f64() < 0.5 { Behavior::Stand } else { Behavior::Sit };
            return Ok(Agent {
                radius,
                height: agent_height(behavior),
                behavior,
                waypoints: vec![p],
                speed: 0.0,
                phase: 0.0,
                color_id,
            });
        }
    }
    Err(Error::InvalidParameter(format!(
        "could not place agent {color_id} after {ATTEMPTS} attempts; world too small for the keepout"
    )))
}

pub fn agent_height(behavior: Behavior) -> f64 {
    match behavior {
        Behavior::Sit => AGENT_HEIGHT * SIT_HEIGHT_RATIO,
        Behavior::Walk | Behavior::Stand => AGENT_HEIGHT,
    }
}

impl World {
    /// Smallest distance from `p` to any wall.
    pub fn wall_clearance(&self, p: Vec2) -> f64 {
        self.walls
            .iter()
            .map(|w| w.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest gap between a disk of `radius` at `p` and any agent disk at time `t`.
    pub fn agent_clearance(&self, p: Vec2, radius: f64, t: f64) -> f64 {
        self.agents
            .iter()
            .map(|a| {
                let q = agent_pose_at(a, t);
                Vec2::new(q.x, q.y).sub(p).norm() - a.radius - radius
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Plain-text scene description, one record per line.
    ///
    /// ```text
    /// SEED <u64>
    /// BOUNDS <xmin> <ymin> <xmax> <ymax>
    /// SPAWN <x> <y> <yaw>
    /// WALL <x1> <y1> <x2> <y2>
    /// AGENT <behavior> <radius> <speed> <phase> <x1> <y1> [<x2> <y2> ...]
    /// ```
    ///
    /// Floats use the shortest representation that parses back exactly.
    /// Agent height follows from the behavior and color from record order.
    pub fn to_scene(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "SEED {}", self.seed);
        let b = &self.bounds;
        let _ = writeln!(s, "BOUNDS {} {} {} {}", b.min.x, b.min.y, b.max.x, b.max.y);
        let _ = writeln!(s, "SPAWN {} {} {}", self.spawn.x, self.spawn.y, self.spawn.yaw);
        for w in &self.walls {
            let _ = writeln!(s, "WALL {} {} {} {}", w.a.x, w.a.y, w.b.x, w.b.y);
        }
        for a in &self.agents {
            let _ = write!(s, "AGENT {} {} {} {}", a.behavior.as_str(), a.radius, a.speed, a.phase);
            for p in &a.waypoints {
                let _ = write!(s, " {} {}", p.x, p.y);
            }
            s.push('\n');
        }
        s
    }

    pub fn from_scene(text: &str) -> Result<World> {
        let src = "<scene>";
        let mut walls = Vec::new();
        let mut agents = Vec::new();
        let mut bounds = None;
        let mut spawn = None;
        let mut seed = 0u64;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap_or_default();
            let rest: Vec<&str> = it.collect();
            let nums = |fields: &[&str]| -> Result<Vec<f64>> {
                fields
                    .iter()
                    .map(|f| {
                        f.parse::<f64>()
                            .map_err(|_| Error::malformed_line(src, lineno, format!("bad number {f:?}")))
                    })
                    .collect()
            };
            match tag {
                "SEED" => {
                    seed = rest
                        .first()
                        .and_then(|f| f.parse().ok())
                        .ok_or_else(|| Error::malformed_line(src, lineno, "bad seed"))?;
                }
                "BOUNDS" => {
                    let v = nums(&rest)?;
                    if v.len() != 4 {
                        return Err(Error::malformed_line(src, lineno, "BOUNDS needs 4 numbers"));
                    }
                    bounds = Some(Bounds {
                        min: Vec2::new(v[0], v[1]),
                        max: Vec2::new(v[2], v[3]),
                    });
                }
                "SPAWN" => {
                    let v = nums(&rest)?;
                    if v.len() != 3 {
                        return Err(Error::malformed_line(src, lineno, "SPAWN needs 3 numbers"));
                    }
                    spawn = Some(Pose2::new(v[0], v[1], v[2]));
                }
                "WALL" => {
                    let v = nums(&rest)?;
                    if v.len() != 4 {
                        return Err(Error::malformed_line(src, lineno, "WALL needs 4 numbers"));
                    }
                    walls.push(Segment::new(v[0], v[1], v[2], v[3]));
                }
                "AGENT" => {
                    let behavior = rest
                        .first()
                        .and_then(|b| Behavior::parse(b))
                        .ok_or_else(|| Error::malformed_line(src, lineno, "unknown behavior"))?;
                    let v = nums(&rest[1..])?;
                    if v.len() < 5 || (v.len() - 3) % 2 != 0 {
                        return Err(Error::malformed_line(src, lineno, "AGENT needs radius speed phase and x y pairs"));
                    }
                    let waypoints = v[3..].chunks(2).map(|c| Vec2::new(c[0], c[1])).collect();
                    let agent = Agent {
                        radius: v[0],
                        height: agent_height(behavior),
                        behavior,
                        waypoints,
                        speed: v[1],
                        phase: v[2],
                        color_id: agents.len() as u8,
                    };
                    agent
                        .validate()
                        .map_err(|e| Error::malformed_line(src, lineno, e.to_string()))?;
                    agents.push(agent);
                }
                other => {
                    return Err(Error::malformed_line(src, lineno, format!("unknown record {other:?}")));
                }
            }
        }
        if walls.is_empty() {
            return Err(Error::malformed_line(src, 0, "scene has no walls"));
        }
        let bounds = bounds.unwrap_or_else(|| {
            let xs = walls.iter().flat_map(|w| [w.a.x, w.b.x]);
            let ys = walls.iter().flat_map(|w| [w.a.y, w.b.y]);
            Bounds {
                min: Vec2::new(xs.clone().fold(f64::INFINITY, f64::min), ys.clone().fold(f64::INFINITY, f64::min)),
                max: Vec2::new(xs.fold(f64::NEG_INFINITY, f64::max), ys.fold(f64::NEG_INFINITY, f64::max)),
            }
        });
        let spawn = spawn.unwrap_or_else(|| {
            Pose2::new(0.5 * (bounds.min.x + bounds.max.x), 0.5 * (bounds.min.y + bounds.max.y), 0.0)
        });
        Ok(World {
            walls,
            agents,
            bounds,
            spawn,
            seed,
        })
    }
}

/// A closed axis-aligned room with no agents, handy for tests and calibration.
pub fn box_room(min: Vec2, max: Vec2, spawn: Pose2) -> World {
    World {
        walls: vec![
            Segment::new(min.x, min.y, max.x, min.y),
            Segment::new(max.x, min.y, max.x, max.y),
            Segment::new(max.x, max.y, min.x, max.y),
            Segment::new(min.x, max.y, min.x, min.y),
        ],
        agents: Vec::new(),
        bounds: Bounds { min, max },
        spawn,
        seed: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ray_segment;
    use proptest::prelude::*;

    fn walker(a: (f64, f64), b: (f64, f64), speed: f64) -> Agent {
        Agent {
            radius: 0.25,
            height: AGENT_HEIGHT,
            behavior: Behavior::Walk,
            waypoints: vec![Vec2::new(a.0, a.1), Vec2::new(b.0, b.1)],
            speed,
            phase: 0.0,
            color_id: 0,
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let p = WorldParams::default();
        let a = generate_world(7, &p).unwrap();
        let b = generate_world(7, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_scene(), b.to_scene());
    }

    #[test]
    fn different_seeds_differ() {
        let p = WorldParams::default();
        let a = generate_world(7, &p).unwrap();
        let b = generate_world(8, &p).unwrap();
        assert_ne!(a.walls, b.walls);
    }

    #[test]
    fn zero_agents() {
        let p = WorldParams {
            agents: 0,
            walkers: 0,
            ..Default::default()
        };
        assert!(generate_world(1, &p).unwrap().agents.is_empty());
    }

    #[test]
    fn rejects_out_of_range_params() {
        let base = WorldParams::default();
        for p in [
            WorldParams { corridors: 0, ..base.clone() },
            WorldParams { corridors: 9, ..base.clone() },
            WorldParams { corridor_width: 1.4, ..base.clone() },
            WorldParams { corridor_width: 4.1, ..base.clone() },
            WorldParams { agents: 11, walkers: 0, ..base.clone() },
        ] {
            assert!(matches!(generate_world(1, &p), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn stand_agent_is_fixed() {
        let a = Agent {
            radius: 0.2,
            height: AGENT_HEIGHT,
            behavior: Behavior::Stand,
            waypoints: vec![Vec2::new(1.0, 2.0)],
            speed: 0.0,
            phase: 0.0,
            color_id: 0,
        };
        for t in [0.0, 1.3, 100.0] {
            assert_eq!(agent_pose_at(&a, t), Pose2::new(1.0, 2.0, 0.0));
        }
    }

    #[test]
    fn walker_interpolates_and_returns() {
        let a = walker((0.0, 0.0), (2.0, 0.0), 1.0);
        let p = agent_pose_at(&a, 1.0);
        assert!((p.x - 1.0).abs() < 1e-12 && p.y.abs() < 1e-12 && p.yaw == 0.0);
        // 3 m into a 4 m loop: 1 m back along the return leg.
        let p = agent_pose_at(&a, 3.0);
        assert!((p.x - 1.0).abs() < 1e-12 && p.y.abs() < 1e-12);
        assert!((p.yaw - PI).abs() < 1e-12);
    }

    #[test]
    fn generated_worlds_satisfy_invariants() {
        for seed in 0..30 {
            let p = WorldParams {
                corridors: 1 + (seed % 8) as u32,
                lobby_size: if seed % 3 == 0 { 5.0 } else { 0.0 },
                agents: 6,
                walkers: 4,
                ..Default::default()
            };
            let w = generate_world(seed, &p).unwrap();
            assert!(!w.walls.is_empty());
            let spawn = Vec2::new(w.spawn.x, w.spawn.y);
            assert!(w.wall_clearance(spawn) >= SPAWN_CLEARANCE);
            assert!(w.agent_clearance(spawn, 0.0, 0.0) >= SPAWN_CLEARANCE);
            for a in &w.agents {
                a.validate().unwrap();
                for wp in &a.waypoints {
                    assert!(w.bounds.contains(*wp));
                }
            }
            // Closed boundary: rays in every direction from the spawn hit a wall.
            for k in 0..360 {
                let th = (k as f64).to_radians();
                let d = Vec2::new(th.cos(), th.sin());
                assert!(
                    w.walls.iter().any(|s| ray_segment(spawn, d, s).is_some()),
                    "seed {seed} ray {k} escapes"
                );
            }
        }
    }

    #[test]
    fn scene_round_trip() {
        let p = WorldParams {
            lobby_size: 4.0,
            agents: 5,
            walkers: 2,
            ..Default::default()
        };
        let w = generate_world(3, &p).unwrap();
        let back = World::from_scene(&w.to_scene()).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn scene_parse_errors_name_the_line() {
        let err = World::from_scene("WALL 0 0 1 1\nAGENT fly 0.2 0 0 1 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    proptest! {
        #[test]
        fn walker_motion_is_continuous(t in 0.0f64..50.0, speed in 0.1f64..2.0) {
            let a = walker((0.0, 0.0), (3.0, 1.0), speed);
            let dt = 1e-3;
            let p = agent_pose_at(&a, t);
            let q = agent_pose_at(&a, t + dt);
            prop_assert!(p.distance_to(&q) <= speed * dt + 1e-9);
        }
    }
}
