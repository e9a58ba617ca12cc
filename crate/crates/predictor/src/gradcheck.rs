//! Finite-difference verification of the reverse pass in 64-bit mode.

use roamsim_core::kinematics::{OMEGA_MAX, V_MAX};
use roamsim_core::{SplitMix64, Twist};

use crate::error::Result;
use crate::loss::{loss_and_grad, to_signed, LossWeights};
use crate::model::Model;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub block: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    /// `|analytic − numeric| / max(1e-8, |numeric|)`.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checks: Vec<ParamCheck>,
    /// Parameters whose stencil straddled a kink (`|·|` in the loss or a
    /// leaky-ReLU corner); `numeric` there is the fine-step estimate.
    pub skipped: Vec<ParamCheck>,
    pub blocks_covered: usize,
    pub blocks_total: usize,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.checks.iter().map(|c| c.rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&ParamCheck> {
        self.checks.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }
}

/// Random `[0, 1]` frames and in-envelope actions for a rollout problem.
pub fn random_problem(seed: u64, size: usize, frames: usize) -> (Vec<Tensor<f64>>, Vec<Twist>) {
    let mut rng = SplitMix64::new(seed);
    let f = (0..frames)
        .map(|_| {
            let data = (0..3 * size * size).map(|_| rng.next_f64()).collect();
            Tensor::from_data(3, size, size, data).expect("sized")
        })
        .collect();
    let a = (0..frames)
        .map(|_| Twist::new(rng.uniform(0.0, V_MAX), rng.uniform(-OMEGA_MAX, OMEGA_MAX)))
        .collect();
    (f, a)
}

fn rollout_loss(model: &Model<f64>, frames: &[Tensor<f64>], actions: &[Twist], context: usize, horizon: usize, w: LossWeights) -> Result<f64> {
    let tape = model.rollout_tape(&frames[..context], actions, horizon, false)?;
    let targets: Vec<Tensor<f64>> = frames[context..].iter().map(to_signed).collect();
    Ok(loss_and_grad(&tape.outputs, &targets, w)?.0.loss)
}

fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / numeric.abs().max(1e-8)
}

/// Compares analytic gradients with central differences of the given step on
/// at least `n` parameters spread evenly over every block.
///
/// The loss is only piecewise smooth. When the forward and backward one-sided
/// slopes of a stencil disagree by more than `tol` (relative), a kink lies
/// inside it and the central difference is meaningless there; such a
/// parameter is recorded in `skipped` (with a 100× finer estimate) and
/// another one from the same block is drawn.
#[allow(clippy::too_many_arguments)]
pub fn gradient_check(
    seed: u64,
    size: usize,
    context: usize,
    horizon: usize,
    n: usize,
    step: f64,
    tol: f64,
    w: LossWeights,
) -> Result<GradCheckReport> {
    let mut rng = SplitMix64::new(seed);
    let mut model = Model::<f64>::init(rng.next_u64(), false);
    // Small random biases so bias gradients are not evaluated at a symmetric point.
    for b in model.arch.blocks.clone() {
        if b.name.ends_with(".bias") {
            for p in &mut model.params[b.range] {
                *p = rng.uniform(-0.05, 0.05);
            }
        }
    }
    let (frames, actions) = random_problem(rng.next_u64(), size, context + horizon);

    let tape = model.rollout_tape(&frames[..context], &actions, horizon, true)?;
    let targets: Vec<Tensor<f64>> = frames[context..].iter().map(to_signed).collect();
    let (base, d_out) = loss_and_grad(&tape.outputs, &targets, w)?;
    let base = base.loss;
    let mut grads = vec![0.0; model.param_count()];
    model.backward(&tape, &d_out, &mut grads);

    let blocks = model.arch.blocks.clone();
    let per_block = n.div_ceil(blocks.len());
    let (mut checks, mut skipped) = (Vec::new(), Vec::new());
    let eval = |model: &mut Model<f64>, i: usize, h: f64| -> Result<(f64, f64)> {
        let orig = model.params[i];
        model.params[i] = orig + h;
        let up = rollout_loss(model, &frames, &actions, context, horizon, w)?;
        model.params[i] = orig - h;
        let down = rollout_loss(model, &frames, &actions, context, horizon, w)?;
        model.params[i] = orig;
        Ok((up, down))
    };
    for b in &blocks {
        let mut idx: Vec<usize> = b.range.clone().collect();
        rng.shuffle(&mut idx);
        let mut accepted = 0;
        for &i in &idx {
            if accepted == per_block {
                break;
            }
            let (up, down) = eval(&mut model, i, step)?;
            let numeric = (up - down) / (2.0 * step);
            let (fwd, bwd) = ((up - base) / step, (base - down) / step);
            let analytic = grads[i];
            if (fwd - bwd).abs() > tol * numeric.abs().max(1e-8) {
                let (u, d) = eval(&mut model, i, step * 1e-2)?;
                let fine = (u - d) / (2.0 * step * 1e-2);
                skipped.push(ParamCheck {
                    block: b.name.clone(),
                    index: i,
                    analytic,
                    numeric: fine,
                    rel_error: rel_error(analytic, fine),
                });
                continue;
            }
            accepted += 1;
            checks.push(ParamCheck {
                block: b.name.clone(),
                index: i,
                analytic,
                numeric,
                rel_error: rel_error(analytic, numeric),
            });
        }
    }
    let mut covered: Vec<&str> = checks.iter().map(|c| c.block.as_str()).collect();
    covered.dedup();
    Ok(GradCheckReport {
        blocks_covered: covered.len(),
        blocks_total: blocks.len(),
        checks,
        skipped,
    })
}
