//! PSNR, SSIM and per-horizon curves.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::raster::Frame;

/// Reported for a zero-error frame instead of infinity.
pub const PSNR_CAP_DB: f64 = 100.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psnr {
    pub db: f64,
    /// Set when the frames were identical and `db` is the cap.
    pub exact: bool,
}

fn check_shapes(a: &Frame, b: &Frame) -> Result<()> {
    if !a.same_shape(b) || a.data.len() != b.data.len() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

pub fn psnr(a: &Frame, b: &Frame) -> Result<Psnr> {
    check_shapes(a, b)?;
    if a.data.is_empty() {
        return Err(Error::ShapeMismatch("empty frame".into()));
    }
    let sse: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    let mse = sse / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(Psnr {
            db: PSNR_CAP_DB,
            exact: true,
        });
    }
    Ok(Psnr {
        db: (10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB),
        exact: false,
    })
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let x = i as f64 - half;
            (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let mut w: Vec<f64> = g.iter().flat_map(|&gy| g.iter().map(move |&gx| gy * gx)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

fn grayscale(f: &Frame) -> Vec<f64> {
    f.data
        .chunks_exact(3)
        .map(|p| (p[0] as f64 + p[1] as f64 + p[2] as f64) / 3.0)
        .collect()
}

/// Mean SSIM over all fully contained windows of the channel-mean images.
pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    check_shapes(a, b)?;
    if a.width < SSIM_WINDOW || a.height < SSIM_WINDOW {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} frame is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window",
            a.width, a.height
        )));
    }
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let w = gaussian_window();
    let (ga, gb) = (grayscale(a), grayscale(b));
    let width = a.width;
    let (nr, nc) = (a.height - SSIM_WINDOW + 1, a.width - SSIM_WINDOW + 1);

    let mut total = 0.0;
    for r0 in 0..nr {
        for c0 in 0..nc {
            let window = |img: &[f64], i: usize| img[(r0 + i / SSIM_WINDOW) * width + c0 + i % SSIM_WINDOW];
            let (mut mu_a, mut mu_b) = (0.0, 0.0);
            for (i, wi) in w.iter().enumerate() {
                mu_a += wi * window(&ga, i);
                mu_b += wi * window(&gb, i);
            }
            let (mut var_a, mut var_b, mut cov) = (0.0, 0.0, 0.0);
            for (i, wi) in w.iter().enumerate() {
                let da = window(&ga, i) - mu_a;
                let db = window(&gb, i) - mu_b;
                var_a += wi * da * da;
                var_b += wi * db * db;
                cov += wi * (da * db);
            }
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
        }
    }
    Ok(total / (nr * nc) as f64)
}

/// Per-timestep statistics across clips; index 0 is t = 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricCurve {
    pub mean: Vec<f64>,
    /// Population standard deviation (denominator n).
    pub std: Vec<f64>,
}

impl MetricCurve {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Mean of the per-timestep means.
    pub fn overall_mean(&self) -> f64 {
        self.mean.iter().sum::<f64>() / self.mean.len() as f64
    }

    fn from_samples(per_t: &[Vec<f64>]) -> Self {
        let mut curve = MetricCurve::default();
        for samples in per_t {
            // Sorting first makes the sums independent of clip order.
            let mut s = samples.clone();
            s.sort_by(f64::total_cmp);
            let n = s.len() as f64;
            let mean = s.iter().sum::<f64>() / n;
            let mut dev: Vec<f64> = s.iter().map(|x| (x - mean) * (x - mean)).collect();
            dev.sort_by(f64::total_cmp);
            curve.mean.push(mean);
            curve.std.push((dev.iter().sum::<f64>() / n).sqrt());
        }
        curve
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub psnr: MetricCurve,
    pub ssim: MetricCurve,
    pub clips: usize,
    /// Number of (clip, t) pairs whose PSNR hit the cap.
    pub exact_frames: usize,
    psnr_samples: Vec<Vec<f64>>,
    ssim_samples: Vec<Vec<f64>>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl Evaluation {
    pub fn horizon(&self) -> usize {
        self.psnr.len()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,psnr_mean,psnr_std,ssim_mean,ssim_std\n");
        for t in 0..self.horizon() {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.6},{:.6}",
                t + 1,
                self.psnr.mean[t],
                self.psnr.std[t],
                self.ssim.mean[t],
                self.ssim.std[t]
            );
        }
        s
    }

    /// Plain-text summary with medians over all (clip, t) samples.
    pub fn report(&self) -> String {
        let mut p: Vec<f64> = self.psnr_samples.iter().flatten().copied().collect();
        let mut q: Vec<f64> = self.ssim_samples.iter().flatten().copied().collect();
        let mut s = String::new();
        let _ = writeln!(s, "clips: {}", self.clips);
        let _ = writeln!(s, "horizon: {}", self.horizon());
        let _ = writeln!(s, "psnr_mean_db: {:.4}", self.psnr.overall_mean());
        let _ = writeln!(s, "psnr_median_db: {:.4}", median(&mut p));
        let _ = writeln!(s, "ssim_mean: {:.6}", self.ssim.overall_mean());
        let _ = writeln!(s, "ssim_median: {:.6}", median(&mut q));
        let _ = writeln!(s, "psnr_capped_frames: {} (cap {PSNR_CAP_DB} dB)", self.exact_frames);
        s
    }
}

/// Scores aligned predicted and ground-truth clips frame by frame.
pub fn evaluate(pred: &[Vec<Frame>], gt: &[Vec<Frame>]) -> Result<Evaluation> {
    if pred.is_empty() {
        return Err(Error::InvalidParameter("no clips to evaluate".into()));
    }
    if pred.len() != gt.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predicted clips vs {} ground-truth clips",
            pred.len(),
            gt.len()
        )));
    }
    let horizon = pred[0].len();
    if horizon == 0 {
        return Err(Error::InvalidParameter("clips have no frames".into()));
    }
    let mut psnr_t = vec![Vec::with_capacity(pred.len()); horizon];
    let mut ssim_t = vec![Vec::with_capacity(pred.len()); horizon];
    let mut exact_frames = 0;
    for (i, (p, g)) in pred.iter().zip(gt).enumerate() {
        if p.len() != horizon || g.len() != horizon {
            return Err(Error::ShapeMismatch(format!(
                "clip {i}: {} predicted and {} ground-truth frames, expected {horizon}",
                p.len(),
                g.len()
            )));
        }
        for t in 0..horizon {
            let v = psnr(&p[t], &g[t])?;
            exact_frames += v.exact as usize;
            psnr_t[t].push(v.db);
            ssim_t[t].push(ssim(&p[t], &g[t])?);
        }
    }
    Ok(Evaluation {
        psnr: MetricCurve::from_samples(&psnr_t),
        ssim: MetricCurve::from_samples(&ssim_t),
        clips: pred.len(),
        exact_frames,
        psnr_samples: psnr_t,
        ssim_samples: ssim_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn noisy(base: &Frame, sigma: f64, seed: u64) -> Frame {
        let mut rng = SplitMix64::new(seed);
        let data = base
            .data
            .iter()
            .map(|&c| (c as f64 + sigma * rng.gaussian()).clamp(0.0, 1.0) as f32)
            .collect();
        Frame::from_data(base.width, base.height, data).unwrap()
    }

    fn textured(w: usize, h: usize, seed: u64) -> Frame {
        let mut rng = SplitMix64::new(seed);
        let data = (0..w * h * 3).map(|_| rng.uniform(0.2, 0.8) as f32).collect();
        Frame::from_data(w, h, data).unwrap()
    }

    #[test]
    fn psnr_constant_offset() {
        let a = Frame::filled(16, 16, 0.0);
        let b = Frame::filled(16, 16, 0.5);
        let p = psnr(&a, &b).unwrap();
        // 10·log10(4)
        assert!((p.db - 6.020599913279624).abs() < 1e-9);
        assert!(!p.exact);
        assert_eq!(psnr(&b, &a).unwrap(), p);
    }

    #[test]
    fn psnr_identical_is_capped() {
        let a = textured(12, 12, 1);
        assert_eq!(psnr(&a, &a).unwrap(), Psnr { db: PSNR_CAP_DB, exact: true });
    }

    #[test]
    fn psnr_rejects_shape_mismatch() {
        assert!(psnr(&Frame::filled(4, 4, 0.0), &Frame::filled(4, 5, 0.0)).is_err());
    }

    #[test]
    fn ssim_identical_is_one() {
        let a = textured(32, 32, 2);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn ssim_constant_pair() {
        // C1 / (0.25 + C1), C1 = 1e-4, evaluated independently.
        let v = ssim(&Frame::filled(16, 16, 0.0), &Frame::filled(16, 16, 0.5)).unwrap();
        assert!((v - 0.00039984006397441).abs() < 1e-6, "{v}");
    }

    #[test]
    fn ssim_small_frame_is_an_error() {
        assert!(ssim(&Frame::filled(10, 32, 0.0), &Frame::filled(10, 32, 0.0)).is_err());
    }

    #[test]
    fn window_is_normalized_and_symmetric() {
        let w = gaussian_window();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[0], w[SSIM_WINDOW * SSIM_WINDOW - 1]);
        assert!(w[60] > w[59]);
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let base = textured(32, 32, 3);
        let values: Vec<f64> = [0.01, 0.05, 0.1]
            .iter()
            .map(|&s| psnr(&base, &noisy(&base, s, 7)).unwrap().db)
            .collect();
        assert!(values[0] > values[1] && values[1] > values[2], "{values:?}");
    }

    #[test]
    fn evaluate_perfect_clip() {
        let clip: Vec<Frame> = (0..20).map(|s| textured(16, 16, s)).collect();
        let e = evaluate(&[clip.clone()], &[clip]).unwrap();
        assert_eq!(e.horizon(), 20);
        assert!(e.psnr.mean.iter().all(|&v| v == PSNR_CAP_DB));
        assert!(e.ssim.mean.iter().all(|&v| v == 1.0));
        assert_eq!(e.exact_frames, 20);
        assert_eq!(e.to_csv().lines().count(), 21);
    }

    #[test]
    fn evaluate_uses_population_std() {
        let gt = vec![vec![Frame::filled(12, 12, 0.0)]; 2];
        let pred = vec![vec![Frame::filled(12, 12, 0.5)], vec![Frame::filled(12, 12, 0.0)]];
        let e = evaluate(&pred, &gt).unwrap();
        let a = 10.0 * 4f64.log10();
        assert!((e.psnr.mean[0] - (a + PSNR_CAP_DB) / 2.0).abs() < 1e-9);
        assert!((e.psnr.std[0] - (PSNR_CAP_DB - a) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn evaluate_rejects_bad_input() {
        assert!(evaluate(&[], &[]).is_err());
        let c = vec![Frame::filled(12, 12, 0.0)];
        assert!(evaluate(&[c.clone()], &[c.clone(), c]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ssim_is_bounded_and_symmetric(sa in any::<u64>(), sb in any::<u64>()) {
            let a = textured(12, 12, sa);
            let b = noisy(&textured(12, 12, sb), 0.3, sa ^ sb);
            let v = ssim(&a, &b).unwrap();
            prop_assert!((-1.0..=1.0).contains(&v));
            prop_assert_eq!(v, ssim(&b, &a).unwrap());
        }

        #[test]
        fn evaluate_is_permutation_invariant(seed in any::<u64>()) {
            let mut rng = SplitMix64::new(seed);
            let mut pairs: Vec<(Vec<Frame>, Vec<Frame>)> = (0..5u64)
                .map(|i| {
                    let g: Vec<Frame> = (0..3).map(|t| textured(12, 12, seed ^ (i * 10 + t))).collect();
                    let p = g.iter().map(|f| noisy(f, 0.1, i)).collect();
                    (p, g)
                })
                .collect();
            let (p0, g0): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
            rng.shuffle(&mut pairs);
            let (p1, g1): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let a = evaluate(&p0, &g0).unwrap();
            let b = evaluate(&p1, &g1).unwrap();
            prop_assert_eq!(a.psnr, b.psnr);
            prop_assert_eq!(a.ssim, b.ssim);
        }
    }
}
