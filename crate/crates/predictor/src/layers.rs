//! Forward and reverse-mode kernels for the building blocks.
//!
//! Every forward function returns whatever its backward needs; backward
//! functions accumulate parameter gradients into a flat buffer laid out like
//! the parameter vector and return the gradient with respect to their input.

use std::ops::Range;

use crate::scalar::{gemm, Scalar};
use crate::tensor::Tensor;

pub const LEAKY_SLOPE: f64 = 0.2;
const K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    LeakyRelu,
    Tanh,
    Sigmoid,
}

impl Activation {
    fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::LeakyRelu => {
                if x > T::zero() {
                    x
                } else {
                    x * T::lit(LEAKY_SLOPE)
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    fn derivative<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Identity => T::one(),
            Activation::LeakyRelu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::lit(LEAKY_SLOPE)
                }
            }
            Activation::Tanh => T::one() - y * y,
            Activation::Sigmoid => y * (T::one() - y),
        }
    }
}

/// 3×3 convolution, zero padding 1, followed by an activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv {
    pub cin: usize,
    pub cout: usize,
    pub stride: usize,
    pub act: Activation,
    /// Weights `[cout, cin, 3, 3]` inside the flat parameter vector.
    pub w: Range<usize>,
    pub b: Range<usize>,
}

pub struct ConvCache<T> {
    cols: Vec<T>,
    in_shape: (usize, usize, usize),
    pub out: Tensor<T>,
}

impl Conv {
    pub fn fan_in(&self) -> usize {
        self.cin * K * K
    }

    pub fn out_size(&self, h: usize, w: usize) -> (usize, usize) {
        ((h - 1) / self.stride + 1, (w - 1) / self.stride + 1)
    }

    fn im2col<T: Scalar>(&self, x: &Tensor<T>) -> (Vec<T>, usize, usize) {
        let (ho, wo) = self.out_size(x.height, x.width);
        let p = ho * wo;
        let mut cols = vec![T::zero(); self.fan_in() * p];
        for ci in 0..self.cin {
            let plane = x.channel(ci);
            for ky in 0..K {
                for kx in 0..K {
                    let row = &mut cols[((ci * K + ky) * K + kx) * p..][..p];
                    for oy in 0..ho {
                        let iy = (oy * self.stride + ky) as isize - 1;
                        if iy < 0 || iy >= x.height as isize {
                            continue;
                        }
                        let src = &plane[iy as usize * x.width..][..x.width];
                        let dst = &mut row[oy * wo..][..wo];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = (ox * self.stride + kx) as isize - 1;
                            if ix >= 0 && ix < x.width as isize {
                                *d = src[ix as usize];
                            }
                        }
                    }
                }
            }
        }
        (cols, ho, wo)
    }

    fn col2im<T: Scalar>(&self, dcols: &[T], (c, h, w): (usize, usize, usize)) -> Tensor<T> {
        let (ho, wo) = self.out_size(h, w);
        let p = ho * wo;
        let mut dx = Tensor::zeros(c, h, w);
        for ci in 0..self.cin {
            let plane = &mut dx.data[ci * h * w..][..h * w];
            for ky in 0..K {
                for kx in 0..K {
                    let row = &dcols[((ci * K + ky) * K + kx) * p..][..p];
                    for oy in 0..ho {
                        let iy = (oy * self.stride + ky) as isize - 1;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let dst = &mut plane[iy as usize * w..][..w];
                        for ox in 0..wo {
                            let ix = (ox * self.stride + kx) as isize - 1;
                            if ix >= 0 && ix < w as isize {
                                dst[ix as usize] = dst[ix as usize] + row[oy * wo + ox];
                            }
                        }
                    }
                }
            }
        }
        dx
    }

    pub fn forward<T: Scalar>(&self, params: &[T], x: &Tensor<T>) -> ConvCache<T> {
        assert_eq!(x.channels, self.cin, "conv input channels");
        let (cols, ho, wo) = self.im2col(x);
        let p = ho * wo;
        let mut out = Tensor::zeros(self.cout, ho, wo);
        gemm(self.cout, self.fan_in(), p, &params[self.w.clone()], false, &cols, false, &mut out.data, false);
        let bias = &params[self.b.clone()];
        for (co, row) in out.data.chunks_exact_mut(p).enumerate() {
            for v in row.iter_mut() {
                *v = self.act.apply(*v + bias[co]);
            }
        }
        ConvCache {
            cols,
            in_shape: x.shape(),
            out,
        }
    }

    /// `dy` is the gradient with respect to the activated output.
    pub fn backward<T: Scalar>(
        &self,
        params: &[T],
        cache: &ConvCache<T>,
        dy: &Tensor<T>,
        grads: &mut [T],
        need_dx: bool,
    ) -> Option<Tensor<T>> {
        let p = cache.out.plane();
        let dz: Vec<T> = dy
            .data
            .iter()
            .zip(&cache.out.data)
            .map(|(&g, &y)| g * self.act.derivative(y))
            .collect();
        gemm(self.cout, p, self.fan_in(), &dz, false, &cache.cols, true, &mut grads[self.w.clone()], true);
        for (gb, row) in grads[self.b.clone()].iter_mut().zip(dz.chunks_exact(p)) {
            *gb = *gb + row.iter().copied().sum();
        }
        if !need_dx {
            return None;
        }
        let mut dcols = vec![T::zero(); self.fan_in() * p];
        gemm(self.fan_in(), self.cout, p, &params[self.w.clone()], true, &dz, false, &mut dcols, false);
        Some(self.col2im(&dcols, cache.in_shape))
    }
}

/// Nearest-neighbour ×2 upsampling.
pub fn upsample2<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let (h, w) = (x.height * 2, x.width * 2);
    let mut out = Tensor::zeros(x.channels, h, w);
    for c in 0..x.channels {
        let src = x.channel(c);
        let dst = &mut out.data[c * h * w..][..h * w];
        for y in 0..h {
            for xx in 0..w {
                dst[y * w + xx] = src[(y / 2) * x.width + xx / 2];
            }
        }
    }
    out
}

pub fn upsample2_backward<T: Scalar>(dy: &Tensor<T>) -> Tensor<T> {
    let (h, w) = (dy.height / 2, dy.width / 2);
    let mut out = Tensor::zeros(dy.channels, h, w);
    for c in 0..dy.channels {
        let src = dy.channel(c);
        let dst = &mut out.data[c * h * w..][..h * w];
        for y in 0..dy.height {
            for x in 0..dy.width {
                let i = (y / 2) * w + x / 2;
                dst[i] = dst[i] + src[y * dy.width + x];
            }
        }
    }
    out
}

/// Convolutional gated recurrent cell:
/// `z = σ(W_z * [x, h])`, `r = σ(W_r * [x, h])`, `n = tanh(W_n * [x, r ⊙ h])`,
/// `h' = (1 − z) ⊙ h + z ⊙ n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvGru {
    pub hidden: usize,
    pub z: Conv,
    pub r: Conv,
    pub n: Conv,
}

pub struct GruCache<T> {
    h_prev: Tensor<T>,
    z: ConvCache<T>,
    r: ConvCache<T>,
    n: ConvCache<T>,
    pub h: Tensor<T>,
}

impl ConvGru {
    pub fn forward<T: Scalar>(&self, params: &[T], x: &Tensor<T>, h_prev: &Tensor<T>) -> GruCache<T> {
        let xh = Tensor::concat(&[x, h_prev]).expect("gru input and state share spatial size");
        let z = self.z.forward(params, &xh);
        let r = self.r.forward(params, &xh);
        drop(xh);
        let rh = r.out.zip_map(h_prev, |a, b| a * b).expect("gate shape");
        let xrh = Tensor::concat(&[x, &rh]).expect("same spatial size");
        let n = self.n.forward(params, &xrh);
        let mut h = h_prev.clone();
        for i in 0..h.data.len() {
            let zi = z.out.data[i];
            h.data[i] = (T::one() - zi) * h_prev.data[i] + zi * n.out.data[i];
        }
        GruCache {
            h_prev: h_prev.clone(),
            z,
            r,
            n,
            h,
        }
    }

    /// Returns `(dx, dh_prev)`; `dx` only when requested.
    pub fn backward<T: Scalar>(
        &self,
        params: &[T],
        cache: &GruCache<T>,
        dh: &Tensor<T>,
        grads: &mut [T],
        need_dx: bool,
    ) -> (Option<Tensor<T>>, Tensor<T>) {
        let (zo, no, hp) = (&cache.z.out, &cache.n.out, &cache.h_prev);
        let mut dh_prev = dh.clone();
        let mut dz = dh.clone();
        let mut dn = dh.clone();
        for i in 0..dh.data.len() {
            let g = dh.data[i];
            dh_prev.data[i] = g * (T::one() - zo.data[i]);
            dz.data[i] = g * (no.data[i] - hp.data[i]);
            dn.data[i] = g * zo.data[i];
        }
        let dxrh = self.n.backward(params, &cache.n, &dn, grads, true).expect("requested");
        let mut parts = dxrh.split(&[self.z.cin - self.hidden, self.hidden]);
        let drh = parts.pop().expect("two parts");
        let mut dx = parts.pop().expect("two parts");
        let mut dr = drh.clone();
        for i in 0..drh.data.len() {
            dr.data[i] = drh.data[i] * hp.data[i];
            dh_prev.data[i] = dh_prev.data[i] + drh.data[i] * cache.r.out.data[i];
        }
        let split = [self.z.cin - self.hidden, self.hidden];
        for (conv, c, d) in [(&self.z, &cache.z, &dz), (&self.r, &cache.r, &dr)] {
            let dxh = conv.backward(params, c, d, grads, true).expect("requested");
            let parts = dxh.split(&split);
            dx.add_assign(&parts[0]);
            dh_prev.add_assign(&parts[1]);
        }
        (need_dx.then_some(dx), dh_prev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(cin: usize, cout: usize, stride: usize, act: Activation) -> (Conv, Vec<f64>) {
        let nw = cout * cin * 9;
        let c = Conv {
            cin,
            cout,
            stride,
            act,
            w: 0..nw,
            b: nw..nw + cout,
        };
        let params = (0..nw + cout).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        (c, params)
    }

    fn naive_conv(c: &Conv, p: &[f64], x: &Tensor<f64>) -> Tensor<f64> {
        let (ho, wo) = c.out_size(x.height, x.width);
        let mut out = Tensor::zeros(c.cout, ho, wo);
        for co in 0..c.cout {
            for oy in 0..ho {
                for ox in 0..wo {
                    let mut acc = p[c.b.start + co];
                    for ci in 0..c.cin {
                        for ky in 0..3 {
                            for kx in 0..3 {
                                let iy = (oy * c.stride + ky) as isize - 1;
                                let ix = (ox * c.stride + kx) as isize - 1;
                                if iy < 0 || ix < 0 || iy >= x.height as isize || ix >= x.width as isize {
                                    continue;
                                }
                                let wv = p[c.w.start + ((co * c.cin + ci) * 3 + ky) * 3 + kx];
                                acc += wv * x.data[(ci * x.height + iy as usize) * x.width + ix as usize];
                            }
                        }
                    }
                    out.data[(co * ho + oy) * wo + ox] = c.act.apply(acc);
                }
            }
        }
        out
    }

    fn ramp(c: usize, h: usize, w: usize) -> Tensor<f64> {
        let data = (0..c * h * w).map(|i| ((i * 31) % 17) as f64 / 17.0 - 0.4).collect();
        Tensor::from_data(c, h, w, data).unwrap()
    }

    #[test]
    fn conv_matches_direct_sum() {
        for stride in [1, 2] {
            let (c, p) = conv(3, 4, stride, Activation::LeakyRelu);
            let x = ramp(3, 6, 8);
            let got = c.forward(&p, &x).out;
            let want = naive_conv(&c, &p, &x);
            assert_eq!(got.shape(), want.shape());
            for (a, b) in got.data.iter().zip(&want.data) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_input_gradient_matches_finite_difference() {
        let (c, p) = conv(2, 3, 2, Activation::Tanh);
        let x = ramp(2, 6, 6);
        let cache = c.forward(&p, &x);
        let dy = Tensor::filled(3, 3, 3, 1.0);
        let mut grads = vec![0.0; p.len()];
        let dx = c.backward(&p, &cache, &dy, &mut grads, true).unwrap();
        let loss = |x: &Tensor<f64>| c.forward(&p, x).out.data.iter().sum::<f64>();
        for i in [0, 5, 17, 40, 71] {
            let mut xp = x.clone();
            xp.data[i] += 1e-6;
            let mut xm = x.clone();
            xm.data[i] -= 1e-6;
            let fd = (loss(&xp) - loss(&xm)) / 2e-6;
            assert!((fd - dx.data[i]).abs() < 1e-7, "{i}: {fd} vs {}", dx.data[i]);
        }
    }

    #[test]
    fn upsample_backward_is_adjoint() {
        let x = ramp(2, 3, 4);
        let y = ramp(2, 6, 8);
        let lhs: f64 = upsample2(&x).data.iter().zip(&y.data).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data.iter().zip(&upsample2_backward(&y).data).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn activation_derivatives() {
        for act in [Activation::Tanh, Activation::Sigmoid, Activation::LeakyRelu] {
            for x in [-1.3f64, -0.2, 0.4, 2.0] {
                let fd = (act.apply(x + 1e-6) - act.apply(x - 1e-6)) / 2e-6;
                assert!((fd - act.derivative(act.apply(x))).abs() < 1e-8, "{act:?} at {x}");
            }
        }
    }
}
