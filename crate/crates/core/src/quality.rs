//! Image fidelity (PSNR, SSIM) and heart-rate error metrics.

use crate::error::{Error, Result};
use crate::media::Frame;

pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const PEAK: f64 = 255.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityScore {
    /// `f64::INFINITY` for identical images.
    pub psnr_db: f64,
    pub ssim: f64,
}

fn check_size(a: &Frame, b: &Frame) -> Result<()> {
    if !a.same_size(b) {
        return Err(Error::SizeMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    Ok(())
}

/// PSNR over all channels, in dB.
pub fn psnr(reference: &Frame, test: &Frame) -> Result<f64> {
    check_size(reference, test)?;
    let sse: u64 = reference
        .as_bytes()
        .iter()
        .zip(test.as_bytes())
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as u64
        })
        .sum();
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / reference.as_bytes().len() as f64;
    Ok(10.0 * (PEAK * PEAK / mse).log10())
}

fn luminance(f: &Frame) -> Vec<f64> {
    f.as_bytes()
        .chunks_exact(3)
        .map(|p| 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]))
        .collect()
}

fn window_1d() -> [f64; SSIM_WINDOW] {
    let r = (SSIM_WINDOW / 2) as f64;
    let mut w = [0.0; SSIM_WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.map(|v| v / s)
}

/// Gaussian-weighted local means at every position where the window fits.
fn filter_valid(img: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w + 1 - SSIM_WINDOW, h + 1 - SSIM_WINDOW);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * img[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Single-scale SSIM on luminance with an 11x11 Gaussian window.
pub fn ssim(reference: &Frame, test: &Frame) -> Result<f64> {
    check_size(reference, test)?;
    let (w, h) = (reference.width(), reference.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall(w.min(h)));
    }
    let k = window_1d();
    let x = luminance(reference);
    let y = luminance(test);
    let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<_>>();
    let mx = filter_valid(&x, w, h, &k);
    let my = filter_valid(&y, w, h, &k);
    let mxx = filter_valid(&prod(&x, &x), w, h, &k);
    let myy = filter_valid(&prod(&y, &y), w, h, &k);
    let mxy = filter_valid(&prod(&x, &y), w, h, &k);
    let c1 = (K1 * PEAK).powi(2);
    let c2 = (K2 * PEAK).powi(2);
    let total: f64 = (0..mx.len())
        .map(|i| {
            let (a, b) = (mx[i], my[i]);
            let vx = mxx[i] - a * a;
            let vy = myy[i] - b * b;
            let cxy = mxy[i] - a * b;
            ((2.0 * a * b + c1) * (2.0 * cxy + c2)) / ((a * a + b * b + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / mx.len() as f64)
}

pub fn score(reference: &Frame, test: &Frame) -> Result<QualityScore> {
    Ok(QualityScore {
        psnr_db: psnr(reference, test)?,
        ssim: ssim(reference, test)?,
    })
}

/// Per-frame scores averaged over a sequence.
pub fn mean_score(reference: &[Frame], test: &[Frame]) -> Result<QualityScore> {
    if reference.len() != test.len() {
        return Err(Error::LengthMismatch(reference.len(), test.len()));
    }
    if reference.is_empty() {
        return Err(Error::EmptySignal);
    }
    let mut sum = QualityScore { psnr_db: 0.0, ssim: 0.0 };
    for (a, b) in reference.iter().zip(test) {
        let s = score(a, b)?;
        sum.psnr_db += s.psnr_db;
        sum.ssim += s.ssim;
    }
    let n = reference.len() as f64;
    Ok(QualityScore { psnr_db: sum.psnr_db / n, ssim: sum.ssim / n })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub mae: f64,
    pub rmse: f64,
    /// Percent.
    pub mape: f64,
    pub n: usize,
}

pub fn hr_errors(predicted: &[f64], reference: &[f64]) -> Result<ErrorReport> {
    if predicted.len() != reference.len() {
        return Err(Error::LengthMismatch(predicted.len(), reference.len()));
    }
    if predicted.is_empty() {
        return Err(Error::EmptySignal);
    }
    if reference.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::NonPositiveReference);
    }
    let n = predicted.len() as f64;
    let (mut abs, mut sq, mut pct) = (0.0, 0.0, 0.0);
    for (p, r) in predicted.iter().zip(reference) {
        let e = (p - r).abs();
        abs += e;
        sq += e * e;
        pct += e / r;
    }
    Ok(ErrorReport {
        mae: abs / n,
        rmse: (sq / n).sqrt(),
        mape: 100.0 * pct / n,
        n: predicted.len(),
    })
}
