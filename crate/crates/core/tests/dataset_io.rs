use std::fs;
use std::path::Path;

use roamsim_core::dataset::{read_sequence, validate, write_sequence, ViolationKind};
use roamsim_core::render::CameraConfig;
use roamsim_core::sim::{simulate_sequence, SequenceRecord, SimConfig};
use roamsim_core::world::{generate_world, WorldParams};

fn record(seed: u64, frames: usize, name: &str) -> SequenceRecord {
    let world = generate_world(seed, &WorldParams::default()).unwrap();
    let cfg = SimConfig {
        camera: CameraConfig {
            width: 16,
            height: 16,
            ..Default::default()
        },
        ..Default::default()
    };
    simulate_sequence(&world, world.spawn, frames, &cfg, seed, name).unwrap().0
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn one_frame_record_writes_one_of_each() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = write_sequence(&record(0, 1, "seq_000"), tmp.path(), false).unwrap();
    for sub in ["left", "right", "depth"] {
        assert_eq!(fs::read_dir(dir.join(sub)).unwrap().count(), 1);
    }
    for f in ["timestamps.txt", "actions.txt", "lidar.csv", "odom.txt", "imu.txt"] {
        assert_eq!(fs::read_to_string(dir.join(f)).unwrap().lines().count(), 1, "{f}");
    }
    assert!(validate(tmp.path()).unwrap().is_ok());
}

#[test]
fn round_trip_is_lossless_except_quantized_streams() {
    let tmp = tempfile::tempdir().unwrap();
    let rec = record(4, 30, "seq_000");
    write_sequence(&rec, tmp.path(), false).unwrap();
    let back = read_sequence(tmp.path(), "seq_000").unwrap();
    assert_eq!(back.timestamps, rec.timestamps);
    assert_eq!(back.scans, rec.scans);
    assert_eq!(back.odom, rec.odom);
    assert_eq!(back.imu, rec.imu);
    assert_eq!(back.depth, rec.depth);
    assert_eq!(back.camera, rec.camera);
    assert_eq!(back.seed, rec.seed);
    for (a, b) in back.actions.iter().zip(&rec.actions) {
        assert!((a.v - b.v).abs() <= 5e-7 && (a.omega - b.omega).abs() <= 5e-7);
    }
    for (a, b) in back.left.iter().zip(&rec.left) {
        assert_eq!(a.to_bytes(), b.to_bytes());
    }
}

#[test]
fn write_read_write_is_byte_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let rec = record(2, 20, "seq_000");
    let d1 = write_sequence(&rec, first.path(), false).unwrap();
    let back = read_sequence(first.path(), "seq_000").unwrap();
    let d2 = write_sequence(&back, second.path(), false).unwrap();
    assert_eq!(tree_bytes(&d1), tree_bytes(&d2));
}

#[test]
fn corrupted_depth_magic_is_reported_with_path() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = write_sequence(&record(0, 3, "seq_000"), tmp.path(), false).unwrap();
    let victim = dir.join("depth/000002.depth");
    let mut bytes = fs::read(&victim).unwrap();
    bytes[3] = b'?';
    fs::write(&victim, bytes).unwrap();
    let msg = read_sequence(tmp.path(), "seq_000").unwrap_err().to_string();
    assert!(msg.contains("000002.depth"), "{msg}");
    assert!(msg.contains("byte 0"), "{msg}");
}

#[test]
fn malformed_text_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = write_sequence(&record(0, 5, "seq_000"), tmp.path(), false).unwrap();
    let path = dir.join("imu.txt");
    let mut lines: Vec<String> = fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    lines[3] = "garbage".into();
    fs::write(&path, lines.join("\n")).unwrap();
    let msg = read_sequence(tmp.path(), "seq_000").unwrap_err().to_string();
    assert!(msg.contains("imu.txt") && msg.contains("line 4"), "{msg}");
}

#[test]
fn fresh_datasets_validate_across_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    for seed in 0..6 {
        write_sequence(&record(seed, 40, &format!("seq_{seed:03}")), tmp.path(), false).unwrap();
    }
    let report = validate(tmp.path()).unwrap();
    assert_eq!(report.sequences.len(), 6);
    assert!(report.is_ok(), "{}", report.render());
}

fn tampered(edit: impl FnOnce(&Path)) -> roamsim_core::dataset::ValidationReport {
    let tmp = tempfile::tempdir().unwrap();
    let dir = write_sequence(&record(1, 30, "seq_000"), tmp.path(), false).unwrap();
    write_sequence(&record(2, 30, "seq_001"), tmp.path(), false).unwrap();
    edit(&dir);
    validate(tmp.path()).unwrap()
}

fn edit_line(path: &Path, index: usize, f: impl FnOnce(&str) -> String) {
    let mut lines: Vec<String> = fs::read_to_string(path).unwrap().lines().map(String::from).collect();
    lines[index] = f(&lines[index]);
    fs::write(path, lines.join("\n") + "\n").unwrap();
}

#[test]
fn action_out_of_bounds_is_one_violation() {
    let report = tampered(|dir| {
        edit_line(&dir.join("actions.txt"), 12, |l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            format!("{} 0.500000 {}", f[0], f[2])
        })
    });
    assert_eq!(report.violations.len(), 1, "{}", report.render());
    assert_eq!(report.violations[0].kind, ViolationKind::ActionBounds);
    assert_eq!(report.violations[0].sequence, "seq_000");
}

#[test]
fn deleted_left_frame_is_one_length_violation() {
    let report = tampered(|dir| fs::remove_file(dir.join("left/000007.ppm")).unwrap());
    assert_eq!(report.violations.len(), 1, "{}", report.render());
    assert_eq!(report.violations[0].kind, ViolationKind::StreamLength);
}

#[test]
fn shifted_timestamp_is_reported() {
    let report = tampered(|dir| edit_line(&dir.join("timestamps.txt"), 29, |l| (l.parse::<u64>().unwrap() + 5).to_string()));
    assert!(report.count(ViolationKind::TimestampStep) == 1, "{}", report.render());
    // Every other stream now disagrees with timestamps.txt at the last frame.
    assert_eq!(report.count(ViolationKind::CrossStream), 4);
}

#[test]
fn acceleration_jump_is_reported() {
    let report = tampered(|dir| {
        edit_line(&dir.join("actions.txt"), 1, |l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            format!("{} 0.100000 {}", f[0], f[2])
        })
    });
    assert!(report.count(ViolationKind::Acceleration) >= 1, "{}", report.render());
    assert_eq!(report.count(ViolationKind::ActionBounds), 0);
}

#[test]
fn missing_root_is_an_error() {
    assert!(validate(Path::new("/nonexistent/roamsim/root")).is_err());
}
