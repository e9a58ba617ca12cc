//! Network definition, forward passes and the reverse pass through a rollout.
//!
//! Shapes for an `H × W` input (both divisible by 4):
//!
//! ```text
//! content   x̂ [5,H,W] -> e1 [8,H,W] -> e2 [16,H/2,W/2] -> e3 [32,H/4,W/4]
//! motion    ô [5,H,W] -> m1 [16,H/2,W/2] -> m2 [32,H/4,W/4] -> gru(m2, h) = f̃ [32,H/4,W/4]
//! fusion    [e3, f̃] [64] -> u [32,H/4,W/4]
//! decoder   [up(u), e2] [48] -> d1 [16,H/2,W/2]; [up(d1), e1] [24] -> d2 [8,H,W] -> tanh [3,H,W]
//! ```
//!
//! Frames cross the model boundary in `[0, 1]`. The content path sees
//! `2p − 1`; the decoder emits `y ∈ (−1, 1)` and returns `(y + 1) / 2`.

use std::ops::Range;

use roamsim_core::kinematics::{OMEGA_MAX, V_MAX, V_MIN};
use roamsim_core::{Frame, SplitMix64, Twist};

use crate::error::{PredictorError, Result};
use crate::layers::{upsample2, upsample2_backward, Activation, Conv, ConvCache, ConvGru, GruCache};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const FRAME_CHANNELS: usize = 3;
pub const ACTION_CHANNELS: usize = 2;
pub const INPUT_CHANNELS: usize = FRAME_CHANNELS + ACTION_CHANNELS;
pub const HIDDEN: usize = 32;

/// Named parameter tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub shape: Vec<usize>,
    pub range: Range<usize>,
}

impl Block {
    /// Motion-encoder parameters form Θ_R; everything else is Θ_F.
    pub fn is_recurrent(&self) -> bool {
        self.name.starts_with("motion.")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub blocks: Vec<Block>,
    pub content: [Conv; 3],
    pub motion: [Conv; 2],
    pub gru: ConvGru,
    pub fusion: Conv,
    pub dec1: Conv,
    pub dec2: Conv,
    pub out: Conv,
}

struct Builder {
    blocks: Vec<Block>,
    len: usize,
}

impl Builder {
    fn alloc(&mut self, name: String, shape: Vec<usize>) -> Range<usize> {
        let n: usize = shape.iter().product();
        let range = self.len..self.len + n;
        self.len += n;
        self.blocks.push(Block {
            name,
            shape,
            range: range.clone(),
        });
        range
    }

    fn conv(&mut self, name: &str, cin: usize, cout: usize, stride: usize, act: Activation) -> Conv {
        let w = self.alloc(format!("{name}.weight"), vec![cout, cin, 3, 3]);
        let b = self.alloc(format!("{name}.bias"), vec![cout]);
        Conv {
            cin,
            cout,
            stride,
            act,
            w,
            b,
        }
    }
}

impl Architecture {
    pub fn new() -> Self {
        use Activation::*;
        let mut b = Builder {
            blocks: Vec::new(),
            len: 0,
        };
        let content = [
            b.conv("content.conv1", INPUT_CHANNELS, 8, 1, LeakyRelu),
            b.conv("content.conv2", 8, 16, 2, LeakyRelu),
            b.conv("content.conv3", 16, 32, 2, LeakyRelu),
        ];
        let motion = [
            b.conv("motion.conv1", INPUT_CHANNELS, 16, 2, LeakyRelu),
            b.conv("motion.conv2", 16, HIDDEN, 2, LeakyRelu),
        ];
        let gru = ConvGru {
            hidden: HIDDEN,
            z: b.conv("motion.gru.update", 2 * HIDDEN, HIDDEN, 1, Sigmoid),
            r: b.conv("motion.gru.reset", 2 * HIDDEN, HIDDEN, 1, Sigmoid),
            n: b.conv("motion.gru.candidate", 2 * HIDDEN, HIDDEN, 1, Tanh),
        };
        let fusion = b.conv("fusion", 32 + HIDDEN, 32, 1, LeakyRelu);
        let dec1 = b.conv("decoder.up1", 32 + 16, 16, 1, LeakyRelu);
        let dec2 = b.conv("decoder.up2", 16 + 8, 8, 1, LeakyRelu);
        let out = b.conv("decoder.out", 8, FRAME_CHANNELS, 1, Tanh);
        Self {
            blocks: b.blocks,
            content,
            motion,
            gru,
            fusion,
            dec1,
            dec2,
            out,
        }
    }

    pub fn param_count(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.range.end)
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    fn convs(&self) -> Vec<&Conv> {
        let mut v: Vec<&Conv> = self.content.iter().chain(&self.motion).collect();
        v.extend([&self.gru.z, &self.gru.r, &self.gru.n, &self.fusion, &self.dec1, &self.dec2, &self.out]);
        v
    }
}

impl Default for Architecture {
    fn default() -> Self {
        Self::new()
    }
}

/// Normalized action map: channel 0 is `v / 0.1`, channel 1 is `(ω + 1.8) / 3.6`.
pub fn action_map<T: Scalar>(a: Twist, height: usize, width: usize) -> Result<Tensor<T>> {
    action_map_checked(a, height, width, 0)
}

fn action_map_checked<T: Scalar>(a: Twist, height: usize, width: usize, index: usize) -> Result<Tensor<T>> {
    if !a.within_envelope() {
        return Err(PredictorError::ActionOutOfEnvelope {
            index,
            v: a.v,
            omega: a.omega,
        });
    }
    let v = (a.v - V_MIN) / (V_MAX - V_MIN);
    let w = (a.omega + OMEGA_MAX) / (2.0 * OMEGA_MAX);
    let p = height * width;
    let mut t = Tensor::zeros(ACTION_CHANNELS, height, width);
    t.data[..p].fill(T::lit(v));
    t.data[p..].fill(T::lit(w));
    Ok(t)
}

/// Action-blind replacement map: both channels 0.5.
pub fn blind_action_map<T: Scalar>(height: usize, width: usize) -> Tensor<T> {
    Tensor::filled(ACTION_CHANNELS, height, width, T::lit(0.5))
}

/// First-order flow `x_t − x_prev` of two `[0, 1]` frames.
pub fn flow_map<T: Scalar>(x_t: &Tensor<T>, x_prev: &Tensor<T>) -> Result<Tensor<T>> {
    x_t.zip_map(x_prev, |a, b| a - b)
}

/// Channel concatenation `[x, α]`.
pub fn augment<T: Scalar>(x: &Tensor<T>, alpha: &Tensor<T>) -> Result<Tensor<T>> {
    if x.channels != FRAME_CHANNELS || alpha.channels != ACTION_CHANNELS {
        return Err(PredictorError::Shape(format!(
            "augment expects 3 + {ACTION_CHANNELS} channels, got {} + {}",
            x.channels, alpha.channels
        )));
    }
    Tensor::concat(&[x, alpha])
}

pub fn check_resolution(height: usize, width: usize) -> Result<()> {
    if height < 4 || width < 4 || height % 4 != 0 || width % 4 != 0 {
        return Err(PredictorError::Shape(format!(
            "frame size {width}x{height} must be divisible by 4"
        )));
    }
    Ok(())
}

pub struct MotionCache<T> {
    m1: ConvCache<T>,
    m2: ConvCache<T>,
    gru: GruCache<T>,
}

impl<T> MotionCache<T> {
    pub fn state(&self) -> &Tensor<T> {
        &self.gru.h
    }
}

pub struct PredictCache<T> {
    e1: ConvCache<T>,
    e2: ConvCache<T>,
    e3: ConvCache<T>,
    fusion: ConvCache<T>,
    d1: ConvCache<T>,
    d2: ConvCache<T>,
    out: ConvCache<T>,
}

impl<T> PredictCache<T> {
    /// Decoder output in the internal `[−1, 1]` convention.
    pub fn output(&self) -> &Tensor<T> {
        &self.out.out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub arch: Architecture,
    pub params: Vec<T>,
    /// Replaces every action map with the constant 0.5 map.
    pub ablation: bool,
}

impl<T: Scalar> Model<T> {
    /// He-normal weights (`std = sqrt(2 / fan_in)`) drawn in block order; zero biases.
    pub fn init(seed: u64, ablation: bool) -> Self {
        let arch = Architecture::new();
        let mut params = vec![T::zero(); arch.param_count()];
        let mut rng = SplitMix64::new(seed);
        for conv in arch.convs() {
            let std = (2.0 / conv.fan_in() as f64).sqrt();
            for p in &mut params[conv.w.clone()] {
                *p = T::lit(std * rng.gaussian());
            }
        }
        Self { arch, params, ablation }
    }

    pub fn from_params(params: Vec<T>, ablation: bool) -> Result<Self> {
        let arch = Architecture::new();
        if params.len() != arch.param_count() {
            return Err(PredictorError::Shape(format!(
                "{} parameters, architecture has {}",
                params.len(),
                arch.param_count()
            )));
        }
        Ok(Self { arch, params, ablation })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            arch: self.arch.clone(),
            params: self.params.iter().map(|p| U::lit(p.to_f64().unwrap_or(0.0))).collect(),
            ablation: self.ablation,
        }
    }

    pub fn zero_state(&self, height: usize, width: usize) -> Tensor<T> {
        Tensor::zeros(HIDDEN, height / 4, width / 4)
    }

    /// The action map this model feeds for `a` (the constant map in ablation mode).
    pub fn alpha(&self, a: Twist, height: usize, width: usize) -> Result<Tensor<T>> {
        self.alpha_at(a, height, width, 0)
    }

    fn alpha_at(&self, a: Twist, height: usize, width: usize, index: usize) -> Result<Tensor<T>> {
        if self.ablation {
            Ok(blind_action_map(height, width))
        } else {
            action_map_checked(a, height, width, index)
        }
    }

    pub fn motion_forward(&self, state: &Tensor<T>, o_hat: &Tensor<T>) -> MotionCache<T> {
        let p = &self.params;
        let m1 = self.arch.motion[0].forward(p, o_hat);
        let m2 = self.arch.motion[1].forward(p, &m1.out);
        let gru = self.arch.gru.forward(p, &m2.out, state);
        MotionCache { m1, m2, gru }
    }

    /// Returns the gradient with respect to the flow channels of `ô` (if asked) and to the incoming state.
    pub fn motion_backward(
        &self,
        cache: &MotionCache<T>,
        dh: &Tensor<T>,
        grads: &mut [T],
        need_dflow: bool,
    ) -> (Option<Tensor<T>>, Tensor<T>) {
        let p = &self.params;
        let (dm2, dh_prev) = self.arch.gru.backward(p, &cache.gru, dh, grads, true);
        let dm1 = self.arch.motion[1]
            .backward(p, &cache.m2, &dm2.expect("requested"), grads, true)
            .expect("requested");
        let dflow = self.arch.motion[0]
            .backward(p, &cache.m1, &dm1, grads, need_dflow)
            .map(|d| d.split(&[FRAME_CHANNELS, ACTION_CHANNELS]).swap_remove(0));
        (dflow, dh_prev)
    }

    /// `x̂` carries the frame in `[0, 1]` in its first three channels.
    pub fn predict_forward(&self, x_hat: &Tensor<T>, f_tilde: &Tensor<T>) -> PredictCache<T> {
        let p = &self.params;
        let a = &self.arch;
        let mut input = x_hat.clone();
        let two = T::lit(2.0);
        for v in &mut input.data[..FRAME_CHANNELS * x_hat.plane()] {
            *v = two * *v - T::one();
        }
        let e1 = a.content[0].forward(p, &input);
        let e2 = a.content[1].forward(p, &e1.out);
        let e3 = a.content[2].forward(p, &e2.out);
        let fused_in = Tensor::concat(&[&e3.out, f_tilde]).expect("content and motion share R/4");
        let fusion = a.fusion.forward(p, &fused_in);
        let d1_in = Tensor::concat(&[&upsample2(&fusion.out), &e2.out]).expect("R/2");
        let d1 = a.dec1.forward(p, &d1_in);
        let d2_in = Tensor::concat(&[&upsample2(&d1.out), &e1.out]).expect("R");
        let d2 = a.dec2.forward(p, &d2_in);
        let out = a.out.forward(p, &d2.out);
        PredictCache {
            e1,
            e2,
            e3,
            fusion,
            d1,
            d2,
            out,
        }
    }

    /// `dy` is the gradient with respect to the `[−1, 1]` output. Returns the
    /// gradient for the `[0, 1]` input frame (if asked) and for `f̃`.
    pub fn predict_backward(
        &self,
        cache: &PredictCache<T>,
        dy: &Tensor<T>,
        grads: &mut [T],
        need_dframe: bool,
    ) -> (Option<Tensor<T>>, Tensor<T>) {
        let p = &self.params;
        let a = &self.arch;
        let dd2 = a.out.backward(p, &cache.out, dy, grads, true).expect("requested");
        let dd2_in = a.dec2.backward(p, &cache.d2, &dd2, grads, true).expect("requested");
        let parts = dd2_in.split(&[16, 8]);
        let dd1 = upsample2_backward(&parts[0]);
        let mut de1 = parts[1].clone();
        let dd1_in = a.dec1.backward(p, &cache.d1, &dd1, grads, true).expect("requested");
        let parts = dd1_in.split(&[32, 16]);
        let dfusion = upsample2_backward(&parts[0]);
        let mut de2 = parts[1].clone();
        let dfused_in = a.fusion.backward(p, &cache.fusion, &dfusion, grads, true).expect("requested");
        let mut parts = dfused_in.split(&[32, HIDDEN]);
        let df = parts.pop().expect("two parts");
        let de3 = parts.pop().expect("two parts");
        de2.add_assign(&a.content[2].backward(p, &cache.e3, &de3, grads, true).expect("requested"));
        de1.add_assign(&a.content[1].backward(p, &cache.e2, &de2, grads, true).expect("requested"));
        let dframe = a.content[0].backward(p, &cache.e1, &de1, grads, need_dframe).map(|d| {
            let mut frame = d.split(&[FRAME_CHANNELS, ACTION_CHANNELS]).swap_remove(0);
            let two = T::lit(2.0);
            frame.data.iter_mut().for_each(|v| *v = *v * two);
            frame
        });
        (dframe, df)
    }

    /// One recurrent update; the new hidden state is `f̃`.
    pub fn motion_encode(&self, state: &Tensor<T>, o_hat: &Tensor<T>) -> Tensor<T> {
        self.motion_forward(state, o_hat).gru.h
    }

    /// One next-frame prediction, returned in `[0, 1]`.
    pub fn predict_step(&self, x_hat: &Tensor<T>, f_tilde: &Tensor<T>) -> Tensor<T> {
        to_unit(self.predict_forward(x_hat, f_tilde).output())
    }

    /// Number of actions a rollout reads: indices `1 ..= context + horizon − 2` are used.
    pub fn actions_needed(context: usize, horizon: usize) -> usize {
        context + horizon - 1
    }

    /// Full forward pass over `context` real frames (`[0, 1]`) predicting `horizon` frames.
    /// `actions[k]` is the command applied after frame `k`. With `keep` the
    /// intermediate values are stored for [`Model::backward`].
    pub fn rollout_tape(&self, context: &[Tensor<T>], actions: &[Twist], horizon: usize, keep: bool) -> Result<Tape<T>> {
        let c = context.len();
        if c < 2 {
            return Err(PredictorError::Config("context needs at least 2 frames".into()));
        }
        if horizon == 0 {
            return Err(PredictorError::Config("horizon must be at least 1".into()));
        }
        let needed = Self::actions_needed(c, horizon);
        if actions.len() < needed {
            return Err(PredictorError::InsufficientActions {
                needed,
                got: actions.len(),
            });
        }
        let (h, w) = (context[0].height, context[0].width);
        check_resolution(h, w)?;
        if context.iter().any(|f| f.shape() != (FRAME_CHANNELS, h, w)) {
            return Err(PredictorError::Shape("context frames differ in shape".into()));
        }

        let mut tape = Tape {
            warmup: Vec::new(),
            steps: Vec::new(),
            outputs: Vec::with_capacity(horizon),
            frames: Vec::with_capacity(horizon),
        };
        let mut state = self.zero_state(h, w);
        for t in 1..c {
            let o_hat = augment(&flow_map(&context[t], &context[t - 1])?, &self.alpha_at(actions[t], h, w, t)?)?;
            let mc = self.motion_forward(&state, &o_hat);
            state = mc.gru.h.clone();
            if keep {
                tape.warmup.push(mc);
            }
        }
        let mut prev = context[c - 2].clone();
        let mut cur = context[c - 1].clone();
        for j in 0..horizon {
            let k = c - 1 + j;
            let alpha = self.alpha_at(actions[k], h, w, k)?;
            let motion = if j > 0 {
                let o_hat = augment(&flow_map(&cur, &prev)?, &alpha)?;
                let mc = self.motion_forward(&state, &o_hat);
                state = mc.gru.h.clone();
                Some(mc)
            } else {
                None
            };
            let pc = self.predict_forward(&augment(&cur, &alpha)?, &state);
            let y = pc.output().clone();
            let next = to_unit(&y);
            if keep {
                tape.steps.push(StepRecord { motion, predict: pc });
            }
            tape.outputs.push(y);
            tape.frames.push(next.clone());
            prev = std::mem::replace(&mut cur, next);
        }
        Ok(tape)
    }

    /// Predicts `horizon` frames from `context` frames and the logged actions.
    pub fn rollout(&self, context: &[Frame], actions: &[Twist], horizon: usize) -> Result<Vec<Frame>> {
        let ctx: Vec<Tensor<T>> = context.iter().map(Tensor::from_frame).collect();
        let tape = self.rollout_tape(&ctx, actions, horizon, false)?;
        tape.frames.iter().map(Tensor::to_frame).collect()
    }

    /// Reverse pass through a kept tape. `d_outputs[j]` is the loss gradient
    /// with respect to `tape.outputs[j]`; parameter gradients are added to `grads`.
    pub fn backward(&self, tape: &Tape<T>, d_outputs: &[Tensor<T>], grads: &mut [T]) {
        let n = tape.steps.len();
        assert_eq!(d_outputs.len(), n, "one output gradient per step");
        assert_eq!(grads.len(), self.params.len());
        let half = T::lit(0.5);
        // Gradients with respect to the predicted frames in [0, 1].
        let mut d_frames: Vec<Option<Tensor<T>>> = (0..n).map(|_| None).collect();
        let mut dh_next: Option<Tensor<T>> = None;
        for j in (0..n).rev() {
            let step = &tape.steps[j];
            let mut dy = d_outputs[j].clone();
            if let Some(df) = d_frames[j].take() {
                for (g, &d) in dy.data.iter_mut().zip(&df.data) {
                    *g = *g + d * half;
                }
            }
            let (dframe, mut dh) = self.predict_backward(&step.predict, &dy, grads, j > 0);
            if let Some(next) = dh_next.take() {
                dh.add_assign(&next);
            }
            if let Some(d) = dframe {
                accumulate(&mut d_frames[j - 1], &d, T::one());
            }
            match &step.motion {
                Some(mc) => {
                    let (dflow, dh_prev) = self.motion_backward(mc, &dh, grads, true);
                    let dflow = dflow.expect("requested");
                    accumulate(&mut d_frames[j - 1], &dflow, T::one());
                    if j >= 2 {
                        accumulate(&mut d_frames[j - 2], &dflow, -T::one());
                    }
                    dh_next = Some(dh_prev);
                }
                None => dh_next = Some(dh),
            }
        }
        let mut dh = dh_next.expect("at least one step");
        for mc in tape.warmup.iter().rev() {
            dh = self.motion_backward(mc, &dh, grads, false).1;
        }
    }
}

fn accumulate<T: Scalar>(slot: &mut Option<Tensor<T>>, d: &Tensor<T>, sign: T) {
    match slot {
        Some(acc) => {
            for (a, &b) in acc.data.iter_mut().zip(&d.data) {
                *a = *a + sign * b;
            }
        }
        None => *slot = Some(d.map(|v| sign * v)),
    }
}

/// `[−1, 1] → [0, 1]`.
pub fn to_unit<T: Scalar>(y: &Tensor<T>) -> Tensor<T> {
    let half = T::lit(0.5);
    y.map(|v| (v + T::one()) * half)
}

struct StepRecord<T> {
    motion: Option<MotionCache<T>>,
    predict: PredictCache<T>,
}

/// Stored forward pass of one rollout.
pub struct Tape<T> {
    warmup: Vec<MotionCache<T>>,
    steps: Vec<StepRecord<T>>,
    /// Decoder outputs in `[−1, 1]`, one per predicted step.
    pub outputs: Vec<Tensor<T>>,
    /// The same predictions in `[0, 1]`.
    pub frames: Vec<Tensor<T>>,
}
