use roamsim_core::Frame;

use crate::error::{PredictorError, Result};
use crate::scalar::Scalar;

/// Dense single-sample activation, channel-major (`C × H × W`).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, T::zero())
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: T) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn from_data(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(PredictorError::Shape(format!(
                "{} values for a {channels}x{height}x{width} tensor",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let p = self.plane();
        &self.data[c * p..(c + 1) * p]
    }

    /// Frame values unchanged, `[0, 1]` stays `[0, 1]`.
    pub fn from_frame(frame: &Frame) -> Self {
        let (h, w) = (frame.height, frame.width);
        let mut t = Self::zeros(3, h, w);
        for (i, px) in frame.data.chunks_exact(3).enumerate() {
            for c in 0..3 {
                t.data[c * h * w + i] = T::lit(px[c] as f64);
            }
        }
        t
    }

    /// Inverse of [`Tensor::from_frame`] for 3-channel tensors; values are clamped to `[0, 1]`.
    pub fn to_frame(&self) -> Result<Frame> {
        if self.channels != 3 {
            return Err(PredictorError::Shape(format!("{} channels, expected 3", self.channels)));
        }
        let p = self.plane();
        let mut data = Vec::with_capacity(3 * p);
        for i in 0..p {
            for c in 0..3 {
                let v = self.data[c * p + i].to_f64().unwrap_or(0.0);
                data.push(v.clamp(0.0, 1.0) as f32);
            }
        }
        Ok(Frame::from_data(self.width, self.height, data)?)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if !self.same_shape(other) {
            return Err(PredictorError::Shape(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Self {
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
            ..*self
        })
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert!(self.same_shape(other));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }

    /// Stacks channels of tensors with equal spatial size.
    pub fn concat(parts: &[&Self]) -> Result<Self> {
        let (h, w) = (parts[0].height, parts[0].width);
        if parts.iter().any(|p| p.height != h || p.width != w) {
            return Err(PredictorError::Shape("concat of tensors with different spatial size".into()));
        }
        let channels = parts.iter().map(|p| p.channels).sum();
        let mut data = Vec::with_capacity(channels * h * w);
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(Self {
            channels,
            height: h,
            width: w,
            data,
        })
    }

    /// Splits channels into consecutive groups of the given sizes.
    pub fn split(&self, sizes: &[usize]) -> Vec<Self> {
        debug_assert_eq!(sizes.iter().sum::<usize>(), self.channels);
        let p = self.plane();
        let mut start = 0;
        sizes
            .iter()
            .map(|&c| {
                let t = Self {
                    channels: c,
                    height: self.height,
                    width: self.width,
                    data: self.data[start * p..(start + c) * p].to_vec(),
                };
                start += c;
                t
            })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
