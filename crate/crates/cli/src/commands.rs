//! Subcommand bodies. Each returns a short human-readable summary on success.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use roamsim_core::dataset::{self, encode_ppm, decode_ppm, list_sequences, read_left_and_actions, write_sequence};
use roamsim_core::metrics::{evaluate as score, psnr, ssim};
use roamsim_core::sim::{simulate_sequence, SafetySummary};
use roamsim_core::world::generate_world;
use roamsim_core::Frame;
use roamsim_predictor::checkpoint::{self, Checkpoint};
use roamsim_predictor::train::{load_clips, loss_csv_row, scale_factor, LOSS_CSV_HEADER};
use roamsim_predictor::{PredictorError, Trainer};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Failure(format!("{}: {e}", path.display()))
}

fn require_dir(path: &Path, what: &str) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} {} is not a directory", path.display())))
    }
}

pub fn sequence_name(i: usize) -> String {
    format!("seq_{i:03}")
}

#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub sequences: usize,
    pub frames: usize,
    pub out: PathBuf,
    pub force: bool,
}

/// Simulates `sequences` independent worlds seeded `seed + i` and writes them under `out`.
pub fn generate(args: &GenerateArgs) -> CliResult<Vec<SafetySummary>> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    if args.sequences == 0 || args.frames == 0 {
        return Err(CliError::Usage("--sequences and --frames must be at least 1".into()));
    }
    let base = args.seed.unwrap_or(cfg.world_seed);
    fs::create_dir_all(&args.out).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", args.out.display())))?;
    let results: Vec<CliResult<SafetySummary>> = (0..args.sequences)
        .into_par_iter()
        .map(|i| {
            let seed = base.wrapping_add(i as u64);
            let name = sequence_name(i);
            let world = generate_world(seed, &cfg.world)?;
            let (rec, summary) = simulate_sequence(&world, world.spawn, args.frames, &cfg.sim, seed, &name)
                .map_err(|e| CliError::Failure(format!("{name}: simulation aborted: {e}")))?;
            let dir = write_sequence(&rec, &args.out, args.force)?;
            let scene = dir.join("scene.txt");
            fs::write(&scene, world.to_scene()).map_err(|e| io_err(&scene, e))?;
            Ok(summary)
        })
        .collect();
    results.into_iter().collect()
}

pub fn render_safety(summaries: &[SafetySummary]) -> String {
    let mut s = String::from("sequence  min_wall_m  min_agent_m  travelled_m\n");
    for (i, m) in summaries.iter().enumerate() {
        let _ = writeln!(
            s,
            "{}  {:>10.4}  {:>11.4}  {:>11.3}",
            sequence_name(i),
            m.min_wall_clearance,
            m.min_agent_clearance,
            m.distance_travelled
        );
    }
    s
}

/// Prints the validation report; violations are a run-time failure.
pub fn validate(dir: &Path) -> CliResult<String> {
    require_dir(dir, "dataset")?;
    let report = dataset::validate(dir)?;
    let text = report.render();
    if report.is_ok() {
        Ok(text)
    } else {
        Err(CliError::Failure(text))
    }
}

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    /// `None` keeps the mode stored in a resumed checkpoint (and means off for fresh runs).
    pub ablation: Option<bool>,
    pub resume: Option<PathBuf>,
    pub iterations: Option<u64>,
    pub loss_csv: Option<PathBuf>,
}

pub fn loss_csv_path(args: &TrainArgs) -> PathBuf {
    args.loss_csv.clone().unwrap_or_else(|| args.out.with_extension("loss.csv"))
}

pub fn split_path(out: &Path) -> PathBuf {
    out.with_extension("split.txt")
}

/// Keeps the header and the rows up to `iteration` of an existing loss log.
fn truncated_log(path: &Path, iteration: u64) -> CliResult<String> {
    let text = fs::read_to_string(path).unwrap_or_default();
    let mut out = format!("{LOSS_CSV_HEADER}\n");
    for line in text.lines().skip(1) {
        let it: Option<u64> = line.split(',').next().and_then(|v| v.parse().ok());
        match it {
            Some(i) if i <= iteration => {
                out.push_str(line);
                out.push('\n');
            }
            _ => break,
        }
    }
    Ok(out)
}

pub fn train(args: &TrainArgs) -> CliResult<String> {
    require_dir(&args.data, "dataset")?;
    let mut cfg = RunConfig::load(args.config.as_deref())?;
    if let Some(n) = args.iterations {
        cfg.train.iterations = n;
    }
    let report = dataset::validate(&args.data)?;
    if !report.is_ok() {
        return Err(CliError::Failure(format!("dataset does not validate:\n{}", report.render())));
    }
    let seqs = list_sequences(&args.data)?;
    let (train_set, test_set) = if seqs.len() >= 2 {
        dataset::split_train_test(&seqs, cfg.split, cfg.split_seed)?
    } else {
        (seqs.clone(), Vec::new())
    };
    let clips = load_clips(&args.data, &train_set, cfg.train.clip_len, cfg.train.clip_gap, cfg.resolution)?;

    let mut trainer = match &args.resume {
        Some(path) => {
            let ckpt = checkpoint::load(path)?;
            if ckpt.resolution != cfg.resolution {
                return Err(CliError::Usage(format!(
                    "checkpoint resolution {:?} differs from the configured {:?}",
                    ckpt.resolution, cfg.resolution
                )));
            }
            if args.ablation.is_some_and(|a| a != ckpt.model.ablation) {
                return Err(CliError::Usage("--ablation differs from the resumed checkpoint".into()));
            }
            Trainer::from_checkpoint(ckpt, cfg.train.clone())?
        }
        None => {
            cfg.train.ablation = args.ablation.unwrap_or(false);
            Trainer::new(cfg.train.clone(), cfg.resolution)?
        }
    };

    let split_file = split_path(&args.out);
    let split_text = format!(
        "seed={}\nratio={}:{}\ntrain={}\ntest={}\n",
        cfg.split_seed,
        cfg.split.0,
        cfg.split.1,
        train_set.join(","),
        test_set.join(",")
    );
    if let Some(dir) = split_file.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(&split_file, split_text).map_err(|e| io_err(&split_file, e))?;

    let log_path = loss_csv_path(args);
    let initial = if args.resume.is_some() {
        truncated_log(&log_path, trainer.iteration)?
    } else {
        format!("{LOSS_CSV_HEADER}\n")
    };
    let file = fs::File::create(&log_path).map_err(|e| io_err(&log_path, e))?;
    let mut log = BufWriter::new(file);
    log.write_all(initial.as_bytes()).map_err(|e| io_err(&log_path, e))?;

    let every = cfg.checkpoint_every;
    let out = args.out.clone();
    let mut last = None;
    let log_err = |e: std::io::Error| PredictorError::Io {
        path: log_path.clone(),
        source: e,
    };
    trainer.run(&clips, |t, stats| {
        writeln!(log, "{}", loss_csv_row(t.iteration, stats)).map_err(log_err)?;
        if every > 0 && t.iteration % every == 0 {
            log.flush().map_err(log_err)?;
            checkpoint::save(&out, &t.checkpoint())?;
        }
        last = Some(*stats);
        Ok(())
    })?;
    log.flush().map_err(|e| io_err(&log_path, e))?;
    checkpoint::save(&args.out, &trainer.checkpoint())?;

    let mut s = format!(
        "trained {} iterations on {} clips from {} sequences (ablation {})\n",
        trainer.iteration,
        clips.len(),
        train_set.len(),
        if trainer.model.ablation { "on" } else { "off" }
    );
    if let Some(l) = last {
        let _ = writeln!(s, "final loss {:.6} (mse {:.6}, gdl {:.6})", l.loss, l.mse, l.gdl);
    }
    let _ = writeln!(s, "checkpoint {}\nloss log {}", args.out.display(), log_path.display());
    Ok(s)
}

#[derive(Debug, Clone)]
pub struct PredictArgs {
    pub ckpt: PathBuf,
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    /// `all`, a sequence name, or `SEQ:START`.
    pub clip: String,
    pub horizon: usize,
    pub out: PathBuf,
    pub montage: bool,
}

/// Clip directory name, e.g. `seq_003_000060`.
pub fn clip_id(sequence: &str, start: usize) -> String {
    format!("{sequence}_{start:06}")
}

fn write_frames(dir: &Path, frames: &[Frame]) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (k, f) in frames.iter().enumerate() {
        let p = dir.join(format!("{k:06}.ppm"));
        fs::write(&p, encode_ppm(f)).map_err(|e| io_err(&p, e))?;
    }
    Ok(())
}

/// Ground truth on the top row, prediction below, one column per step.
pub fn montage(gt: &[Frame], pred: &[Frame]) -> Frame {
    let (w, h) = (gt[0].width, gt[0].height);
    let mut m = Frame::filled(w * gt.len(), 2 * h, 0.0);
    for (row, frames) in [gt, pred].into_iter().enumerate() {
        for (k, f) in frames.iter().enumerate() {
            for r in 0..h {
                for c in 0..w {
                    m.set_pixel(row * h + r, k * w + c, f.pixel(r, c));
                }
            }
        }
    }
    m
}

pub fn predict(args: &PredictArgs) -> CliResult<String> {
    require_dir(&args.data, "dataset")?;
    if !args.ckpt.is_file() {
        return Err(CliError::Usage(format!("checkpoint {} does not exist", args.ckpt.display())));
    }
    if args.horizon == 0 {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    let cfg = RunConfig::load(args.config.as_deref())?;
    let Checkpoint { model, resolution, .. } = checkpoint::load(&args.ckpt)?;
    let context = cfg.train.context;
    let window = context + args.horizon;

    let all = list_sequences(&args.data)?;
    let (names, fixed_start): (Vec<String>, Option<usize>) = match args.clip.split_once(':') {
        _ if args.clip == "all" => (all.clone(), None),
        Some((seq, start)) => {
            let start = start
                .parse()
                .map_err(|_| CliError::Usage(format!("bad clip start in {:?}", args.clip)))?;
            (vec![seq.to_string()], Some(start))
        }
        None => (vec![args.clip.clone()], None),
    };
    if let Some(missing) = names.iter().find(|n| !all.contains(n)) {
        return Err(CliError::Usage(format!("no sequence {missing:?} in {}", args.data.display())));
    }

    let mut rows = Vec::new();
    for name in &names {
        let (frames, actions) = read_left_and_actions(&args.data, name)?;
        let Some(first) = frames.first() else { continue };
        let factor = scale_factor(first.height, first.width, resolution)?;
        let starts = match fixed_start {
            Some(s) => vec![s],
            None => dataset::clip_index(frames.len(), cfg.train.clip_len.max(window), cfg.train.clip_gap)?,
        };
        for start in starts {
            if start + window > frames.len() {
                return Err(CliError::Usage(format!(
                    "{name}:{start} needs {window} frames but the sequence has {}",
                    frames.len()
                )));
            }
            let scaled = frames[start..start + window]
                .iter()
                .map(|f| f.downsample(factor))
                .collect::<roamsim_core::Result<Vec<_>>>()?;
            let pred = model.rollout(&scaled[..context], &actions[start..start + window - 1], args.horizon)?;
            let gt = &scaled[context..];
            let id = clip_id(name, start);
            write_frames(&args.out.join("pred").join(&id), &pred)?;
            write_frames(&args.out.join("gt").join(&id), gt)?;
            let mut csv = String::from("t,psnr,ssim\n");
            for (t, (p, g)) in pred.iter().zip(gt).enumerate() {
                let _ = writeln!(csv, "{},{:.6},{:.6}", t + 1, psnr(p, g)?.db, ssim(p, g)?);
            }
            let metrics = args.out.join("metrics");
            fs::create_dir_all(&metrics).map_err(|e| io_err(&metrics, e))?;
            let csv_path = metrics.join(format!("{id}.csv"));
            fs::write(&csv_path, csv).map_err(|e| io_err(&csv_path, e))?;
            if args.montage {
                let dir = args.out.join("montage");
                fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
                let p = dir.join(format!("{id}.ppm"));
                fs::write(&p, encode_ppm(&montage(gt, &pred))).map_err(|e| io_err(&p, e))?;
            }
            rows.push(id);
        }
    }
    if rows.is_empty() {
        return Err(CliError::Failure(format!("no clip of {window} frames found")));
    }
    Ok(format!(
        "wrote {} clips x {} frames to {}\n",
        rows.len(),
        args.horizon,
        args.out.display()
    ))
}

/// `(clip name, sorted ppm paths)`; a directory holding frames directly is one clip named `.`.
fn clip_dirs(root: &Path) -> CliResult<Vec<(String, Vec<PathBuf>)>> {
    let ppms = |dir: &Path| -> CliResult<Vec<PathBuf>> {
        let mut v: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| io_err(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "ppm"))
            .collect();
        v.sort();
        Ok(v)
    };
    let direct = ppms(root)?;
    if !direct.is_empty() {
        return Ok(vec![(".".into(), direct)]);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| io_err(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    subdirs
        .into_iter()
        .map(|d| Ok((d.file_name().unwrap_or_default().to_string_lossy().into_owned(), ppms(&d)?)))
        .filter(|r| !matches!(r, Ok((_, v)) if v.is_empty()))
        .collect()
}

fn read_frames(paths: &[PathBuf]) -> CliResult<Vec<Frame>> {
    paths
        .iter()
        .map(|p| {
            let bytes = fs::read(p).map_err(|e| io_err(p, e))?;
            Ok(decode_ppm(&bytes, p)?)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub pred: PathBuf,
    pub gt: PathBuf,
    pub report: PathBuf,
}

/// Writes the per-step curve CSV and a companion `.txt` report with medians.
pub fn evaluate(args: &EvaluateArgs) -> CliResult<String> {
    require_dir(&args.pred, "prediction")?;
    require_dir(&args.gt, "ground-truth")?;
    let pred = clip_dirs(&args.pred)?;
    let gt = clip_dirs(&args.gt)?;
    let names = |v: &[(String, Vec<PathBuf>)]| v.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>();
    if names(&pred) != names(&gt) {
        return Err(CliError::Failure(format!(
            "clip mismatch: prediction has [{}], ground truth has [{}]",
            names(&pred).join(", "),
            names(&gt).join(", ")
        )));
    }
    if pred.is_empty() {
        return Err(CliError::Failure("no frames found".into()));
    }
    let mut p_frames = Vec::new();
    let mut g_frames = Vec::new();
    for ((name, p), (_, g)) in pred.iter().zip(&gt) {
        if p.len() != g.len() {
            return Err(CliError::Failure(format!(
                "clip {name}: {} predicted vs {} ground-truth frames",
                p.len(),
                g.len()
            )));
        }
        p_frames.push(read_frames(p)?);
        g_frames.push(read_frames(g)?);
    }
    let eval = score(&p_frames, &g_frames).map_err(|e| CliError::Failure(e.to_string()))?;
    if let Some(dir) = args.report.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(&args.report, eval.to_csv()).map_err(|e| io_err(&args.report, e))?;
    let text = eval.report();
    let txt = args.report.with_extension("report.txt");
    fs::write(&txt, &text).map_err(|e| io_err(&txt, e))?;
    Ok(text)
}
