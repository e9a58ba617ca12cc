//! Reconstruction plus gradient-difference loss, in the `[−1, 1]` convention.
//!
//! For predictions `y` and targets `g` over `T` frames of `C × H × W`, with
//! `N = T·C·H·W`:
//!
//! ```text
//! mse = Σ (y − g)² / N
//! gdl = Σ_h | |Δ_h y| − |Δ_h g| | / N + Σ_v | |Δ_v y| − |Δ_v g| | / N
//! loss = alpha_rec · mse + lambda_gdl · gdl
//! ```
//!
//! `Δ` are forward differences; the last column (row) has no horizontal
//! (vertical) difference and contributes zero. `sign(0) = 0` in the gradient.

use crate::error::{PredictorError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossStats {
    pub loss: f64,
    pub mse: f64,
    pub gdl: f64,
}

impl LossStats {
    pub fn is_finite(&self) -> bool {
        self.loss.is_finite() && self.mse.is_finite() && self.gdl.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha_rec: f64,
    pub lambda_gdl: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha_rec: 1.0,
            lambda_gdl: 1.0,
        }
    }
}

fn sign<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Converts `[0, 1]` frames to the `[−1, 1]` convention.
pub fn to_signed<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let two = T::lit(2.0);
    x.map(|v| two * v - T::one())
}

/// Loss value and its gradient with respect to each prediction.
/// Both `pred` and `target` are in the `[−1, 1]` convention.
pub fn loss_and_grad<T: Scalar>(
    pred: &[Tensor<T>],
    target: &[Tensor<T>],
    w: LossWeights,
) -> Result<(LossStats, Vec<Tensor<T>>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(PredictorError::Shape(format!(
            "{} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    if pred.iter().zip(target).any(|(p, t)| !p.same_shape(t)) {
        return Err(PredictorError::Shape("prediction and target shapes differ".into()));
    }
    let n = pred.iter().map(|p| p.data.len()).sum::<usize>() as f64;
    let inv_n = T::lit(1.0 / n);
    let ka = T::lit(w.alpha_rec);
    let kg = T::lit(w.lambda_gdl);
    let two = T::lit(2.0);
    let (mut sse, mut sgd) = (T::zero(), T::zero());
    let mut grads = Vec::with_capacity(pred.len());
    for (p, t) in pred.iter().zip(target) {
        let mut g = Tensor::zeros(p.channels, p.height, p.width);
        for i in 0..p.data.len() {
            let d = p.data[i] - t.data[i];
            sse = sse + d * d;
            g.data[i] = ka * two * d * inv_n;
        }
        let (h, wd) = (p.height, p.width);
        for c in 0..p.channels {
            let base = c * h * wd;
            for y in 0..h {
                for x in 0..wd {
                    let i = base + y * wd + x;
                    // (neighbour, exists)
                    for (j, ok) in [(i + 1, x + 1 < wd), (i + wd, y + 1 < h)] {
                        if !ok {
                            continue;
                        }
                        let a = p.data[j] - p.data[i];
                        let b = t.data[j] - t.data[i];
                        let e = a.abs() - b.abs();
                        sgd = sgd + e.abs();
                        let s = kg * sign(e) * sign(a) * inv_n;
                        g.data[j] = g.data[j] + s;
                        g.data[i] = g.data[i] - s;
                    }
                }
            }
        }
        grads.push(g);
    }
    let mse = sse.to_f64().unwrap_or(f64::NAN) / n;
    let gdl = sgd.to_f64().unwrap_or(f64::NAN) / n;
    Ok((
        LossStats {
            loss: w.alpha_rec * mse + w.lambda_gdl * gdl,
            mse,
            gdl,
        },
        grads,
    ))
}
