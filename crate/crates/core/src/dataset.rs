//! On-disk dataset layout, validation and clip segmentation.
//!
//! ```text
//! <root>/<sequence>/
//!     left/000000.ppm ...    binary PPM (P6, maxval 255)
//!     right/000000.ppm ...
//!     depth/000000.depth ... "ROAMDPTH", width u32 LE, height u32 LE, f32 LE z-depth
//!     timestamps.txt         <t_ns>
//!     actions.txt            <t_ns> <v> <omega>           (6 decimals)
//!     lidar.csv              <t_ns>,<r0>,...,<r359>       ("inf" = no return)
//!     odom.txt               <t_ns> <x> <y> <yaw> <v> <omega>
//!     imu.txt                <t_ns> <yaw_rate> <forward_accel>
//!     meta.txt               key=value
//! ```
//!
//! Floats other than actions are written in their shortest exact decimal
//! form, so every stream except images and actions round-trips losslessly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kinematics::{Pose2, Twist, ACCEL_MAX, FPS, OMEGA_MAX, V_MAX, V_MIN};
use crate::lidar::{Scan, BEAMS};
use crate::raster::{DepthMap, Frame};
use crate::render::CameraConfig;
use crate::rng::SplitMix64;
use crate::sim::{ImuSample, OdomSample, SequenceRecord, FRAME_PERIOD_NS};

pub const DEPTH_MAGIC: &[u8; 8] = b"ROAMDPTH";
pub const DEPTH_HEADER_LEN: usize = 16;

const LEFT_DIR: &str = "left";
const RIGHT_DIR: &str = "right";
const DEPTH_DIR: &str = "depth";
const PPM_EXT: &str = "ppm";
const DEPTH_EXT: &str = "depth";
const TIMESTAMPS: &str = "timestamps.txt";
const ACTIONS: &str = "actions.txt";
const LIDAR: &str = "lidar.csv";
const ODOM: &str = "odom.txt";
const IMU: &str = "imu.txt";
const META: &str = "meta.txt";

/// Slack on the acceleration check for the 6-decimal action quantization.
const ACCEL_SLACK: f64 = 2e-5 * FPS as f64;

fn frame_file(k: usize, ext: &str) -> String {
    format!("{k:06}.{ext}")
}

pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend(frame.to_bytes());
    out
}

pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<Frame> {
    let mut pos = 0;
    let mut fields = [0usize; 3];
    if bytes.get(..2) != Some(b"P6") {
        return Err(Error::malformed_byte(path, 0, "expected P6 magic"));
    }
    pos += 2;
    for (n, field) in fields.iter_mut().enumerate() {
        // Whitespace and comments between header fields.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|b| *b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::malformed_byte(path, start, format!("bad header field {n}")))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::malformed_byte(path, pos, "missing whitespace after header"));
    }
    pos += 1;
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(Error::malformed_byte(path, pos, format!("unsupported maxval {maxval}")));
    }
    let expected = w * h * 3;
    if bytes.len() - pos != expected {
        return Err(Error::malformed_byte(
            path,
            pos,
            format!("expected {expected} pixel bytes, found {}", bytes.len() - pos),
        ));
    }
    Frame::from_bytes(w, h, &bytes[pos..])
}

pub fn encode_depth(depth: &DepthMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(DEPTH_HEADER_LEN + 4 * depth.data.len());
    out.extend_from_slice(DEPTH_MAGIC);
    out.extend_from_slice(&(depth.width as u32).to_le_bytes());
    out.extend_from_slice(&(depth.height as u32).to_le_bytes());
    for z in &depth.data {
        out.extend_from_slice(&z.to_le_bytes());
    }
    out
}

pub fn decode_depth(bytes: &[u8], path: &Path) -> Result<DepthMap> {
    if bytes.len() < DEPTH_HEADER_LEN {
        return Err(Error::malformed_byte(path, bytes.len(), "truncated depth header"));
    }
    if &bytes[..8] != DEPTH_MAGIC {
        return Err(Error::malformed_byte(path, 0, "bad depth magic"));
    }
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected = DEPTH_HEADER_LEN + 4 * width * height;
    if bytes.len() != expected {
        return Err(Error::malformed_byte(
            path,
            bytes.len().min(expected),
            format!("expected {expected} bytes for {width}x{height}, found {}", bytes.len()),
        ));
    }
    let data = bytes[DEPTH_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DepthMap { width, height, data })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn meta_text(rec: &SequenceRecord) -> String {
    let c = &rec.camera;
    format!(
        "name={}\nseed={}\nfps={}\nframes={}\nwidth={}\nheight={}\nhfov={}\nbaseline={}\ncamera_height={}\n",
        rec.name,
        rec.seed,
        FPS,
        rec.len(),
        c.width,
        c.height,
        c.hfov,
        c.baseline,
        c.height_above_floor
    )
}

/// Writes one sequence to `root/<rec.name>`. An existing directory is only
/// replaced when `force` is set.
pub fn write_sequence(rec: &SequenceRecord, root: &Path, force: bool) -> Result<PathBuf> {
    let n = rec.len();
    let lengths = [
        rec.left.len(),
        rec.right.len(),
        rec.depth.len(),
        rec.scans.len(),
        rec.actions.len(),
        rec.odom.len(),
        rec.imu.len(),
    ];
    if lengths.iter().any(|&l| l != n) {
        return Err(Error::ShapeMismatch(format!("stream lengths differ: {n} timestamps vs {lengths:?}")));
    }
    let dir = root.join(&rec.name);
    if dir.exists() {
        if !force {
            return Err(Error::AlreadyExists { path: dir });
        }
        fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    for sub in [LEFT_DIR, RIGHT_DIR, DEPTH_DIR] {
        create_dir(&dir.join(sub))?;
    }
    for k in 0..n {
        write_file(&dir.join(LEFT_DIR).join(frame_file(k, PPM_EXT)), &encode_ppm(&rec.left[k]))?;
        write_file(&dir.join(RIGHT_DIR).join(frame_file(k, PPM_EXT)), &encode_ppm(&rec.right[k]))?;
        write_file(&dir.join(DEPTH_DIR).join(frame_file(k, DEPTH_EXT)), &encode_depth(&rec.depth[k]))?;
    }

    let mut ts = String::new();
    let mut actions = String::new();
    let mut lidar = String::new();
    let mut odom = String::new();
    let mut imu = String::new();
    for k in 0..n {
        let t = rec.timestamps[k];
        let _ = writeln!(ts, "{t}");
        let a = rec.actions[k];
        let _ = writeln!(actions, "{t} {:.6} {:.6}", a.v, a.omega);
        let _ = write!(lidar, "{}", rec.scans[k].t_ns);
        for r in &rec.scans[k].ranges {
            let _ = write!(lidar, ",{r}");
        }
        lidar.push('\n');
        let o = rec.odom[k];
        let _ = writeln!(
            odom,
            "{t} {} {} {} {} {}",
            o.pose.x, o.pose.y, o.pose.yaw, o.twist.v, o.twist.omega
        );
        let m = rec.imu[k];
        let _ = writeln!(imu, "{t} {} {}", m.yaw_rate, m.forward_accel);
    }
    write_text(&dir.join(TIMESTAMPS), &ts)?;
    write_text(&dir.join(ACTIONS), &actions)?;
    write_text(&dir.join(LIDAR), &lidar)?;
    write_text(&dir.join(ODOM), &odom)?;
    write_text(&dir.join(IMU), &imu)?;
    write_text(&dir.join(META), &meta_text(rec))?;
    Ok(dir)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-empty lines with 1-based line numbers.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::malformed_line(path, line, format!("bad {what} {field:?}")))
}

/// Splits a line and checks the field count.
fn fields<'a>(path: &Path, line: usize, text: &'a str, sep: Option<char>, count: usize) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = match sep {
        Some(c) => text.split(c).map(str::trim).collect(),
        None => text.split_whitespace().collect(),
    };
    if parts.len() != count {
        return Err(Error::malformed_line(
            path,
            line,
            format!("expected {count} fields, found {}", parts.len()),
        ));
    }
    Ok(parts)
}

pub fn read_meta(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = read_string(path)?;
    let mut out = BTreeMap::new();
    for (line, l) in numbered_lines(&text) {
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| Error::malformed_line(path, line, "expected key=value"))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn meta_get<T: std::str::FromStr>(meta: &BTreeMap<String, String>, path: &Path, key: &str) -> Result<T> {
    let v = meta
        .get(key)
        .ok_or_else(|| Error::malformed_line(path, 0, format!("missing key {key}")))?;
    v.parse()
        .map_err(|_| Error::malformed_line(path, 0, format!("bad value for {key}: {v:?}")))
}

fn camera_from_meta(meta: &BTreeMap<String, String>, path: &Path) -> Result<CameraConfig> {
    Ok(CameraConfig {
        width: meta_get(meta, path, "width")?,
        height: meta_get(meta, path, "height")?,
        hfov: meta_get(meta, path, "hfov")?,
        baseline: meta_get(meta, path, "baseline")?,
        height_above_floor: meta_get(meta, path, "camera_height")?,
    })
}

fn read_timestamps(path: &Path) -> Result<Vec<u64>> {
    let text = read_string(path)?;
    numbered_lines(&text)
        .map(|(line, l)| parse_field(path, line, l, "timestamp"))
        .collect()
}

fn read_actions(path: &Path) -> Result<Vec<(u64, Twist)>> {
    let text = read_string(path)?;
    numbered_lines(&text)
        .map(|(line, l)| {
            let f = fields(path, line, l, None, 3)?;
            Ok((
                parse_field(path, line, f[0], "timestamp")?,
                Twist::new(parse_field(path, line, f[1], "v")?, parse_field(path, line, f[2], "omega")?),
            ))
        })
        .collect()
}

fn read_lidar(path: &Path) -> Result<Vec<Scan>> {
    let text = read_string(path)?;
    numbered_lines(&text)
        .map(|(line, l)| {
            let f = fields(path, line, l, Some(','), BEAMS + 1)?;
            let t_ns = parse_field(path, line, f[0], "timestamp")?;
            let ranges = f[1..]
                .iter()
                .map(|r| parse_field::<f64>(path, line, r, "range"))
                .collect::<Result<_>>()?;
            Ok(Scan { t_ns, ranges })
        })
        .collect()
}

fn read_odom(path: &Path) -> Result<Vec<(u64, OdomSample)>> {
    let text = read_string(path)?;
    numbered_lines(&text)
        .map(|(line, l)| {
            let f = fields(path, line, l, None, 6)?;
            let num = |i: usize, what| parse_field::<f64>(path, line, f[i], what);
            Ok((
                parse_field(path, line, f[0], "timestamp")?,
                OdomSample {
                    pose: Pose2 {
                        x: num(1, "x")?,
                        y: num(2, "y")?,
                        yaw: num(3, "yaw")?,
                    },
                    twist: Twist::new(num(4, "v")?, num(5, "omega")?),
                },
            ))
        })
        .collect()
}

fn read_imu(path: &Path) -> Result<Vec<(u64, ImuSample)>> {
    let text = read_string(path)?;
    numbered_lines(&text)
        .map(|(line, l)| {
            let f = fields(path, line, l, None, 3)?;
            Ok((
                parse_field(path, line, f[0], "timestamp")?,
                ImuSample {
                    yaw_rate: parse_field(path, line, f[1], "yaw_rate")?,
                    forward_accel: parse_field(path, line, f[2], "forward_accel")?,
                },
            ))
        })
        .collect()
}

fn expect_len(path: &Path, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::malformed_line(
            path,
            got.min(want) + 1,
            format!("expected {want} records, found {got}"),
        ));
    }
    Ok(())
}

/// Reads `root/<name>`. Images come back 8-bit quantized and actions at six
/// decimals; everything else is exact.
pub fn read_sequence(root: &Path, name: &str) -> Result<SequenceRecord> {
    let dir = root.join(name);
    let meta_path = dir.join(META);
    let meta = read_meta(&meta_path)?;
    let camera = camera_from_meta(&meta, &meta_path)?;
    let seed = meta_get(&meta, &meta_path, "seed")?;

    let timestamps = read_timestamps(&dir.join(TIMESTAMPS))?;
    let n = timestamps.len();
    let actions = read_actions(&dir.join(ACTIONS))?;
    expect_len(&dir.join(ACTIONS), actions.len(), n)?;
    let scans = read_lidar(&dir.join(LIDAR))?;
    expect_len(&dir.join(LIDAR), scans.len(), n)?;
    let odom = read_odom(&dir.join(ODOM))?;
    expect_len(&dir.join(ODOM), odom.len(), n)?;
    let imu = read_imu(&dir.join(IMU))?;
    expect_len(&dir.join(IMU), imu.len(), n)?;

    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let mut depth = Vec::with_capacity(n);
    for k in 0..n {
        let p = dir.join(LEFT_DIR).join(frame_file(k, PPM_EXT));
        left.push(decode_ppm(&read_bytes(&p)?, &p)?);
        let p = dir.join(RIGHT_DIR).join(frame_file(k, PPM_EXT));
        right.push(decode_ppm(&read_bytes(&p)?, &p)?);
        let p = dir.join(DEPTH_DIR).join(frame_file(k, DEPTH_EXT));
        depth.push(decode_depth(&read_bytes(&p)?, &p)?);
    }

    Ok(SequenceRecord {
        name: name.to_string(),
        seed,
        camera,
        timestamps,
        left,
        right,
        depth,
        scans,
        actions: actions.into_iter().map(|(_, a)| a).collect(),
        odom: odom.into_iter().map(|(_, o)| o).collect(),
        imu: imu.into_iter().map(|(_, m)| m).collect(),
    })
}

/// Reads only what the predictor needs: left frames and actions.
pub fn read_left_and_actions(root: &Path, name: &str) -> Result<(Vec<Frame>, Vec<Twist>)> {
    let dir = root.join(name);
    let actions: Vec<Twist> = read_actions(&dir.join(ACTIONS))?.into_iter().map(|(_, a)| a).collect();
    let frames = (0..actions.len())
        .map(|k| {
            let p = dir.join(LEFT_DIR).join(frame_file(k, PPM_EXT));
            decode_ppm(&read_bytes(&p)?, &p)
        })
        .collect::<Result<_>>()?;
    Ok((frames, actions))
}

/// Sequence directories under `root` (those holding a `meta.txt`), sorted by name.
pub fn list_sequences(root: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if path.is_dir() && path.join(META).is_file() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    /// Streams disagree on frame count, or frame files are not numbered contiguously.
    StreamLength,
    /// Timestamp spacing differs from the frame period by more than 1 ns.
    TimestampStep,
    /// A stream's timestamp differs from `timestamps.txt`.
    CrossStream,
    ActionBounds,
    Acceleration,
    /// Unreadable or structurally invalid file.
    Malformed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub sequence: String,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub sequences: Vec<String>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for v in &self.violations {
            let _ = writeln!(s, "{}: {:?}: {}", v.sequence, v.kind, v.detail);
        }
        let _ = writeln!(
            s,
            "{} sequence(s) checked, {} violation(s)",
            self.sequences.len(),
            self.violations.len()
        );
        s
    }
}

/// Sorted indices of the `NNNNNN.<ext>` files in `dir`.
fn frame_listing(dir: &Path, ext: &str) -> Vec<usize> {
    let Ok(entries) = fs::read_dir(dir) else {
        return Vec::new();
    };
    let mut indices: Vec<usize> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            let stem = name.strip_suffix(&format!(".{ext}"))?;
            (stem.len() == 6).then(|| stem.parse().ok()).flatten()
        })
        .collect();
    indices.sort_unstable();
    indices
}

struct SequenceChecker<'a> {
    name: &'a str,
    out: &'a mut Vec<Violation>,
}

impl SequenceChecker<'_> {
    fn push(&mut self, kind: ViolationKind, detail: impl Into<String>) {
        self.out.push(Violation {
            sequence: self.name.to_string(),
            kind,
            detail: detail.into(),
        });
    }

    /// Unwraps a read, turning failures into a `Malformed` violation.
    fn read<T>(&mut self, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(ViolationKind::Malformed, e.to_string());
                None
            }
        }
    }

    fn cross_check(&mut self, stream: &str, stamps: impl Iterator<Item = u64>, reference: &[u64]) {
        for (k, (t, r)) in stamps.zip(reference).enumerate() {
            if t != *r {
                self.push(
                    ViolationKind::CrossStream,
                    format!("{stream} record {k} has t={t}, timestamps.txt has {r}"),
                );
                return;
            }
        }
    }
}

fn validate_sequence(root: &Path, name: &str, out: &mut Vec<Violation>) {
    let dir = root.join(name);
    let mut ck = SequenceChecker { name, out };

    let meta_path = dir.join(META);
    let camera = ck
        .read(read_meta(&meta_path))
        .and_then(|m| ck.read(camera_from_meta(&m, &meta_path)));
    let timestamps = ck.read(read_timestamps(&dir.join(TIMESTAMPS)));
    let actions = ck.read(read_actions(&dir.join(ACTIONS)));
    let scans = ck.read(read_lidar(&dir.join(LIDAR)));
    let odom = ck.read(read_odom(&dir.join(ODOM)));
    let imu = ck.read(read_imu(&dir.join(IMU)));

    // Stream lengths, folded into one violation per sequence.
    let mut counts: Vec<(&str, usize)> = Vec::new();
    let mut gaps: Vec<&str> = Vec::new();
    for (label, sub, ext) in [
        ("left", LEFT_DIR, PPM_EXT),
        ("right", RIGHT_DIR, PPM_EXT),
        ("depth", DEPTH_DIR, DEPTH_EXT),
    ] {
        let indices = frame_listing(&dir.join(sub), ext);
        counts.push((label, indices.len()));
        if indices.iter().enumerate().any(|(i, &k)| i != k) {
            gaps.push(label);
        }
    }
    if let Some(t) = &timestamps {
        counts.push(("timestamps", t.len()));
    }
    if let Some(a) = &actions {
        counts.push(("actions", a.len()));
    }
    if let Some(s) = &scans {
        counts.push(("lidar", s.len()));
    }
    if let Some(o) = &odom {
        counts.push(("odom", o.len()));
    }
    if let Some(m) = &imu {
        counts.push(("imu", m.len()));
    }
    let first = counts.first().map(|c| c.1).unwrap_or(0);
    if counts.iter().any(|c| c.1 != first) || !gaps.is_empty() {
        let listing: Vec<String> = counts.iter().map(|(l, n)| format!("{l}={n}")).collect();
        let mut detail = format!("stream lengths differ: {}", listing.join(" "));
        if !gaps.is_empty() {
            let _ = write!(detail, "; numbering gaps in {}", gaps.join(", "));
        }
        ck.push(ViolationKind::StreamLength, detail);
    }

    if let Some(ts) = &timestamps {
        for k in 1..ts.len() {
            let step = ts[k] as i128 - ts[k - 1] as i128;
            if (step - FRAME_PERIOD_NS as i128).abs() > 1 {
                ck.push(
                    ViolationKind::TimestampStep,
                    format!("frame {k}: step {step} ns, expected {FRAME_PERIOD_NS} ± 1"),
                );
            }
        }
        if let Some(a) = &actions {
            ck.cross_check("actions", a.iter().map(|x| x.0), ts);
        }
        if let Some(s) = &scans {
            ck.cross_check("lidar", s.iter().map(|x| x.t_ns), ts);
        }
        if let Some(o) = &odom {
            ck.cross_check("odom", o.iter().map(|x| x.0), ts);
        }
        if let Some(m) = &imu {
            ck.cross_check("imu", m.iter().map(|x| x.0), ts);
        }
    }

    if let Some(actions) = &actions {
        let in_bounds: Vec<bool> = actions.iter().map(|(_, a)| a.within_envelope()).collect();
        for (k, (_, a)) in actions.iter().enumerate() {
            if !in_bounds[k] {
                ck.push(
                    ViolationKind::ActionBounds,
                    format!(
                        "action {k}: v={} omega={} outside v∈[{V_MIN}, {V_MAX}], omega∈[-{OMEGA_MAX}, {OMEGA_MAX}]",
                        a.v, a.omega
                    ),
                );
            }
        }
        // An out-of-bounds sample is reported once, not again as a jump.
        for k in 1..actions.len() {
            if !(in_bounds[k] && in_bounds[k - 1]) {
                continue;
            }
            let accel = (actions[k].1.v - actions[k - 1].1.v) * FPS as f64;
            if accel.abs() > ACCEL_MAX + ACCEL_SLACK {
                ck.push(
                    ViolationKind::Acceleration,
                    format!("action {k}: forward acceleration {accel:.6} m/s² exceeds ±{ACCEL_MAX}"),
                );
            }
        }
    }

    if let Some(cam) = camera {
        for k in frame_listing(&dir.join(DEPTH_DIR), DEPTH_EXT) {
            let p = dir.join(DEPTH_DIR).join(frame_file(k, DEPTH_EXT));
            let Some(bytes) = ck.read(read_bytes(&p)) else { continue };
            match decode_depth(&bytes, &p) {
                Ok(d) if d.width != cam.width || d.height != cam.height => ck.push(
                    ViolationKind::Malformed,
                    format!("{}: {}x{} does not match camera {}x{}", p.display(), d.width, d.height, cam.width, cam.height),
                ),
                Ok(_) => {}
                Err(e) => ck.push(ViolationKind::Malformed, e.to_string()),
            }
        }
        for sub in [LEFT_DIR, RIGHT_DIR] {
            for k in frame_listing(&dir.join(sub), PPM_EXT) {
                let p = dir.join(sub).join(frame_file(k, PPM_EXT));
                let Some(bytes) = ck.read(read_bytes(&p)) else { continue };
                match decode_ppm(&bytes, &p) {
                    Ok(f) if f.width != cam.width || f.height != cam.height => ck.push(
                        ViolationKind::Malformed,
                        format!("{}: {}x{} does not match camera {}x{}", p.display(), f.width, f.height, cam.width, cam.height),
                    ),
                    Ok(_) => {}
                    Err(e) => ck.push(ViolationKind::Malformed, e.to_string()),
                }
            }
        }
    }
}

/// Checks every sequence under `root`. Fails only when `root` itself cannot be listed.
pub fn validate(root: &Path) -> Result<ValidationReport> {
    let sequences = list_sequences(root)?;
    let mut violations = Vec::new();
    for name in &sequences {
        validate_sequence(root, name, &mut violations);
    }
    Ok(ValidationReport {
        sequences,
        violations,
    })
}

/// Start frames of fixed-length clips separated by `gap` frames.
pub fn clip_index(seq_len: usize, clip_len: usize, gap: usize) -> Result<Vec<usize>> {
    if clip_len == 0 {
        return Err(Error::InvalidParameter("clip_len must be at least 1".into()));
    }
    let stride = clip_len + gap;
    Ok((0..)
        .map(|i| i * stride)
        .take_while(|s| s + clip_len <= seq_len)
        .collect())
}

/// A clip within a named sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClipRef {
    pub sequence: String,
    pub start: usize,
}

/// Seeded shuffle followed by a `train:test` proportional split, train count rounded down.
pub fn split_train_test<T: Clone>(items: &[T], ratio: (usize, usize), seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if items.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 sequences to split, got {}",
            items.len()
        )));
    }
    let (a, b) = ratio;
    if a == 0 || b == 0 {
        return Err(Error::InvalidParameter("split ratio parts must be positive".into()));
    }
    let mut shuffled = items.to_vec();
    SplitMix64::new(seed).shuffle(&mut shuffled);
    let n_train = (items.len() * a) / (a + b);
    let test = shuffled.split_off(n_train);
    Ok((shuffled, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{generate_world, WorldParams};
    use proptest::prelude::*;

    #[test]
    fn depth_header_bytes() {
        let d = DepthMap::filled(64, 64, 1.0);
        let bytes = encode_depth(&d);
        assert_eq!(&bytes[..8], b"ROAMDPTH");
        assert_eq!(&bytes[8..16], &[0x40, 0, 0, 0, 0x40, 0, 0, 0]);
        assert_eq!(bytes.len(), 16 + 64 * 64 * 4);
    }

    #[test]
    fn depth_bad_magic_names_file() {
        let mut bytes = encode_depth(&DepthMap::filled(2, 2, 1.0));
        bytes[0] = b'X';
        let err = decode_depth(&bytes, Path::new("seq/depth/000003.depth")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("000003.depth") && msg.contains("byte 0"), "{msg}");
    }

    #[test]
    fn ppm_round_trip() {
        let f = Frame::from_data(2, 2, vec![0.0, 0.5, 1.0, 0.2, 0.4, 0.6, 0.8, 1.0, 0.0, 0.1, 0.3, 0.7]).unwrap();
        let bytes = encode_ppm(&f);
        assert!(bytes.starts_with(b"P6\n2 2\n255\n"));
        let back = decode_ppm(&bytes, Path::new("x.ppm")).unwrap();
        assert_eq!(encode_ppm(&back), bytes);
    }

    #[test]
    fn ppm_rejects_truncation() {
        let bytes = encode_ppm(&Frame::filled(4, 4, 0.5));
        assert!(decode_ppm(&bytes[..bytes.len() - 1], Path::new("x.ppm")).is_err());
    }

    #[test]
    fn clip_index_examples() {
        assert_eq!(clip_index(50, 50, 10).unwrap(), vec![0]);
        assert!(clip_index(49, 50, 10).unwrap().is_empty());
        assert_eq!(clip_index(170, 50, 10).unwrap(), vec![0, 60, 120]);
        assert!(clip_index(10, 0, 1).is_err());
    }

    #[test]
    fn split_examples() {
        let seqs: Vec<u32> = (0..25).collect();
        let (train, test) = split_train_test(&seqs, (20, 5), 1).unwrap();
        assert_eq!((train.len(), test.len()), (20, 5));
        let (train, test) = split_train_test(&seqs[..5], (20, 5), 1).unwrap();
        assert_eq!((train.len(), test.len()), (4, 1));
        assert_eq!(split_train_test(&seqs, (20, 5), 9).unwrap(), split_train_test(&seqs, (20, 5), 9).unwrap());
        assert!(split_train_test(&seqs[..1], (20, 5), 1).is_err());
    }

    #[test]
    fn existing_sequence_is_not_overwritten() {
        let tmp = tempfile::tempdir().unwrap();
        let world = generate_world(0, &WorldParams::default()).unwrap();
        let cfg = crate::sim::SimConfig {
            camera: CameraConfig {
                width: 8,
                height: 8,
                ..Default::default()
            },
            ..Default::default()
        };
        let (rec, _) = crate::sim::simulate_sequence(&world, world.spawn, 2, &cfg, 0, "seq_000").unwrap();
        write_sequence(&rec, tmp.path(), false).unwrap();
        assert!(matches!(write_sequence(&rec, tmp.path(), false), Err(Error::AlreadyExists { .. })));
        write_sequence(&rec, tmp.path(), true).unwrap();
    }

    proptest! {
        #[test]
        fn clip_index_is_well_formed(seq_len in 0usize..500, clip_len in 1usize..80, gap in 0usize..30) {
            let starts = clip_index(seq_len, clip_len, gap).unwrap();
            for w in starts.windows(2) {
                prop_assert_eq!(w[1] - w[0], clip_len + gap);
            }
            for s in &starts {
                prop_assert!(s + clip_len <= seq_len);
            }
            // Maximal: one more clip would not fit.
            let next = starts.last().map_or(0, |s| s + clip_len + gap);
            prop_assert!(next + clip_len > seq_len);
        }
    }
}
