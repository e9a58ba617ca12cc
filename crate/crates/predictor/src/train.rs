//! Clip sampling, batched gradients and the optimization loop.

use std::path::Path;

use rayon::prelude::*;
use roamsim_core::dataset::{clip_index, read_left_and_actions};
use roamsim_core::{SplitMix64, Twist};

use crate::adam::{Adam, AdamConfig};
use crate::checkpoint::{Checkpoint, TrainingState};
use crate::error::{PredictorError, Result};
use crate::loss::{loss_and_grad, to_signed, LossStats, LossWeights};
use crate::model::{check_resolution, Model};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub loss: LossWeights,
    pub batch: usize,
    pub context: usize,
    pub train_horizon: usize,
    pub infer_horizon: usize,
    pub iterations: u64,
    pub seed: u64,
    pub ablation: bool,
    pub clip_len: usize,
    pub clip_gap: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            adam: AdamConfig::default(),
            loss: LossWeights::default(),
            batch: 8,
            context: 5,
            train_horizon: 10,
            infer_horizon: 20,
            iterations: 2000,
            seed: 0,
            ablation: false,
            clip_len: 50,
            clip_gap: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let a = &self.adam;
        let positive = [a.lr, a.eps, self.loss.alpha_rec, a.weight_decay];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.loss.lambda_gdl < 0.0 {
            return Err(PredictorError::Config(
                "lr, eps, alpha_rec and weight_decay must be positive; lambda_gdl non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) {
            return Err(PredictorError::Config("beta1 and beta2 must lie in [0, 1)".into()));
        }
        if self.batch == 0 || self.train_horizon == 0 || self.infer_horizon == 0 {
            return Err(PredictorError::Config("batch and horizons must be at least 1".into()));
        }
        if self.context < 2 {
            return Err(PredictorError::Config("context must be at least 2 (flow needs a pair)".into()));
        }
        if self.clip_len < self.window() {
            return Err(PredictorError::Config(format!(
                "clip_len {} is shorter than the training window {}",
                self.clip_len,
                self.window()
            )));
        }
        Ok(())
    }

    /// Frames per training sample: context followed by targets.
    pub fn window(&self) -> usize {
        self.context + self.train_horizon
    }
}

/// A fixed-length run of left frames (`[0, 1]`, channel-major) with its actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub sequence: String,
    pub start: usize,
    pub frames: Vec<Tensor<f32>>,
    pub actions: Vec<Twist>,
}

impl Clip {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn window(&self, offset: usize, len: usize) -> Window<'_> {
        Window {
            frames: &self.frames[offset..offset + len],
            actions: &self.actions[offset..offset + len],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub frames: &'a [Tensor<f32>],
    pub actions: &'a [Twist],
}

/// Downsampling factor that maps `(h, w)` onto `target`.
pub fn scale_factor(h: usize, w: usize, target: (usize, usize)) -> Result<usize> {
    let (th, tw) = target;
    if th == 0 || tw == 0 || h % th != 0 || w % tw != 0 || h / th != w / tw {
        return Err(PredictorError::Shape(format!(
            "{w}x{h} frames cannot be reduced to {tw}x{th} by an integer factor"
        )));
    }
    check_resolution(th, tw)?;
    Ok(h / th)
}

/// Loads every clip of the named sequences at the given resolution.
pub fn load_clips(
    root: &Path,
    sequences: &[String],
    clip_len: usize,
    gap: usize,
    resolution: (usize, usize),
) -> Result<Vec<Clip>> {
    let mut clips = Vec::new();
    for name in sequences {
        let (frames, actions) = read_left_and_actions(root, name)?;
        let Some(first) = frames.first() else { continue };
        let factor = scale_factor(first.height, first.width, resolution)?;
        for start in clip_index(frames.len(), clip_len, gap)? {
            let tensors = frames[start..start + clip_len]
                .iter()
                .map(|f| Ok(Tensor::from_frame(&f.downsample(factor)?)))
                .collect::<Result<Vec<_>>>()?;
            clips.push(Clip {
                sequence: name.clone(),
                start,
                frames: tensors,
                actions: actions[start..start + clip_len].to_vec(),
            });
        }
    }
    Ok(clips)
}

/// Loss and parameter gradient for one window.
pub fn sample_gradient(
    model: &Model<f32>,
    window: Window<'_>,
    context: usize,
    horizon: usize,
    weights: LossWeights,
) -> Result<(LossStats, Vec<f32>)> {
    if window.frames.len() < context + horizon {
        return Err(PredictorError::Shape(format!(
            "window has {} frames, need {}",
            window.frames.len(),
            context + horizon
        )));
    }
    let tape = model.rollout_tape(&window.frames[..context], window.actions, horizon, true)?;
    let targets: Vec<Tensor<f32>> = window.frames[context..context + horizon].iter().map(to_signed).collect();
    let (stats, d_out) = loss_and_grad(&tape.outputs, &targets, weights)?;
    let mut grads = vec![0f32; model.param_count()];
    model.backward(&tape, &d_out, &mut grads);
    Ok((stats, grads))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trainer {
    pub model: Model<f32>,
    pub adam: Adam<f32>,
    pub rng: SplitMix64,
    pub cfg: TrainConfig,
    pub iteration: u64,
    pub resolution: (usize, usize),
}

impl Trainer {
    /// Fresh run: parameters and the clip sampler both derive from `cfg.seed`.
    pub fn new(cfg: TrainConfig, resolution: (usize, usize)) -> Result<Self> {
        cfg.validate()?;
        check_resolution(resolution.0, resolution.1)?;
        let mut root = SplitMix64::new(cfg.seed);
        let model = Model::init(root.next_u64(), cfg.ablation);
        let rng = root.fork();
        Ok(Self {
            adam: Adam::new(model.param_count()),
            model,
            rng,
            cfg,
            iteration: 0,
            resolution,
        })
    }

    pub fn from_checkpoint(ckpt: Checkpoint, mut cfg: TrainConfig) -> Result<Self> {
        let state = ckpt.training.ok_or_else(|| {
            PredictorError::Config("checkpoint carries no optimizer state; cannot resume".into())
        })?;
        cfg.seed = state.seed;
        cfg.ablation = ckpt.model.ablation;
        cfg.validate()?;
        Ok(Self {
            model: ckpt.model,
            adam: state.adam,
            rng: SplitMix64::new(state.rng_state),
            cfg,
            iteration: state.iteration,
            resolution: ckpt.resolution,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            resolution: self.resolution,
            training: Some(TrainingState {
                adam: self.adam.clone(),
                rng_state: self.rng.state(),
                iteration: self.iteration,
                seed: self.cfg.seed,
            }),
        }
    }

    /// Draws `batch` windows: a clip uniformly, then a start offset uniformly within it.
    pub fn sample_batch<'a>(&mut self, clips: &'a [Clip]) -> Result<Vec<Window<'a>>> {
        if clips.is_empty() {
            return Err(PredictorError::NoClips);
        }
        let len = self.cfg.window();
        (0..self.cfg.batch)
            .map(|_| {
                let clip = &clips[self.rng.below(clips.len() as u64) as usize];
                if clip.len() < len {
                    return Err(PredictorError::Shape(format!("clip of {} frames < window {len}", clip.len())));
                }
                let offset = self.rng.below((clip.len() - len + 1) as u64) as usize;
                Ok(clip.window(offset, len))
            })
            .collect()
    }

    /// One optimizer step on a batch; gradients are averaged in batch order.
    pub fn step(&mut self, batch: &[Window<'_>]) -> Result<LossStats> {
        if batch.is_empty() {
            return Err(PredictorError::NoClips);
        }
        let (context, horizon, weights) = (self.cfg.context, self.cfg.train_horizon, self.cfg.loss);
        let model = &self.model;
        let results: Vec<Result<(LossStats, Vec<f32>)>> = batch
            .par_iter()
            .map(|w| sample_gradient(model, *w, context, horizon, weights))
            .collect();
        let mut grads = vec![0f32; model.param_count()];
        let mut total = LossStats::default();
        for r in results {
            let (s, g) = r?;
            total.loss += s.loss;
            total.mse += s.mse;
            total.gdl += s.gdl;
            for (a, b) in grads.iter_mut().zip(&g) {
                *a += *b;
            }
        }
        let n = batch.len() as f64;
        let inv = 1.0 / batch.len() as f32;
        grads.iter_mut().for_each(|g| *g *= inv);
        let stats = LossStats {
            loss: total.loss / n,
            mse: total.mse / n,
            gdl: total.gdl / n,
        };
        if !stats.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(PredictorError::NonFinite(format!("iteration {}", self.iteration + 1)));
        }
        self.adam.step(&mut self.model.params, &grads, &self.cfg.adam);
        self.iteration += 1;
        Ok(stats)
    }

    /// Runs until `cfg.iterations`, calling `on_step` after every update.
    pub fn run(&mut self, clips: &[Clip], mut on_step: impl FnMut(&Trainer, &LossStats) -> Result<()>) -> Result<()> {
        while self.iteration < self.cfg.iterations {
            let batch = self.sample_batch(clips)?;
            let stats = self.step(&batch)?;
            on_step(self, &stats)?;
        }
        Ok(())
    }
}

pub const LOSS_CSV_HEADER: &str = "iteration,loss,mse,gdl";

pub fn loss_csv_row(iteration: u64, s: &LossStats) -> String {
    format!("{iteration},{:.9},{:.9},{:.9}", s.loss, s.mse, s.gdl)
}
