//! Butterworth band-pass: analog prototype, low-pass to band-pass mapping,
//! bilinear transform with pre-warping, realized as second-order sections
//! and run forward-backward.

use num_complex::Complex64;

use crate::border::reflect101;
use crate::error::{Error, Result};

/// Prototype order; the band-pass has twice this order.
const PROTOTYPE_ORDER: usize = 2;

/// `y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Butterworth {
    sections: Vec<Biquad>,
}

impl Butterworth {
    pub fn bandpass(low: f64, high: f64, fs: f64) -> Result<Self> {
        let nyquist = fs / 2.0;
        if !(0.0 < low && low < high && high < nyquist) {
            return Err(Error::BandOutOfRange { low, high, nyquist });
        }
        let fs2 = 2.0 * fs;
        let warp = |f: f64| fs2 * (std::f64::consts::PI * f / fs).tan();
        let (wl, wh) = (warp(low), warp(high));
        let bw = wh - wl;
        let w0sq = wl * wh;

        let n = PROTOTYPE_ORDER;
        let mut analog = Vec::with_capacity(2 * n);
        for k in 0..n {
            let theta = std::f64::consts::PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            let p = Complex64::from_polar(1.0, theta) * (bw / 2.0);
            let disc = (p * p - w0sq).sqrt();
            analog.push(p + disc);
            analog.push(p - disc);
        }
        // band-pass has n zeros at s = 0 and gain bw^n
        let mut gain = Complex64::new(bw.powi(n as i32) * fs2.powi(n as i32), 0.0);
        for p in &analog {
            gain /= fs2 - p;
        }
        let mut digital: Vec<Complex64> = analog
            .iter()
            .map(|p| (fs2 + p) / (fs2 - p))
            .filter(|z| z.im > 0.0)
            .collect();
        digital.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        debug_assert_eq!(digital.len(), n);

        let sections = digital
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let g = if i == 0 { gain.re } else { 1.0 };
                Biquad {
                    b: [g, 0.0, -g],
                    a: [-2.0 * z.re, z.norm_sqr()],
                }
            })
            .collect();
        Ok(Self { sections })
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Transfer-function polynomials `(b, a)` in powers of `z^-1`.
    pub fn coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        let mul = |p: &[f64], q: &[f64]| {
            let mut out = vec![0.0; p.len() + q.len() - 1];
            for (i, x) in p.iter().enumerate() {
                for (j, y) in q.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        };
        self.sections.iter().fold((vec![1.0], vec![1.0]), |(b, a), s| {
            (mul(&b, &s.b), mul(&a, &[1.0, s.a[0], s.a[1]]))
        })
    }

    /// Causal filtering started in the steady state of a constant input
    /// equal to `x[0]`.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut buf = x.to_vec();
        let Some(&first) = x.first() else {
            return buf;
        };
        for (i, s) in self.sections.iter().enumerate() {
            // every section blocks DC, so only the first sees a nonzero
            // steady-state input
            let x0 = if i == 0 { first } else { 0.0 };
            let (mut x1, mut x2, mut y1, mut y2) = (x0, x0, 0.0, 0.0);
            for v in buf.iter_mut() {
                let y = s.b[0] * *v + s.b[1] * x1 + s.b[2] * x2 - s.a[0] * y1 - s.a[1] * y2;
                x2 = x1;
                x1 = *v;
                y2 = y1;
                y1 = y;
                *v = y;
            }
        }
        buf
    }

    /// Zero-phase filtering with reflect-101 padding of `3 * order` samples
    /// (shortened for short inputs).
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return vec![0.0; n];
        }
        let pad = (3 * self.order()).min(n - 1);
        let ext: Vec<f64> = (-(pad as isize)..(n + pad) as isize)
            .map(|i| x[reflect101(i, n)])
            .collect();
        let mut y = self.filter(&ext);
        y.reverse();
        let mut y = self.filter(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}

/// Zero-phase Butterworth band-pass of `x` sampled at `fs`.
pub fn butterworth_bandpass(x: &[f64], fs: f64, low: f64, high: f64) -> Result<Vec<f64>> {
    Ok(Butterworth::bandpass(low, high, fs)?.filtfilt(x))
}
