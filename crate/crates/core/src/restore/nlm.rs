//! Windowed non-local means on joint-RGB patches.
//!
//! The patch distance is the mean squared difference over all `(2r+1)^2 * 3`
//! patch samples, so `h` is on the same 8-bit scale as the noise level. For
//! each offset in the search window the squared differences of the whole
//! (reflect-101 padded) image are box-summed through an integral image, which
//! makes the cost independent of the patch size.

use rayon::prelude::*;

use crate::border::reflect101;
use crate::error::{Error, Result};
use crate::media::{quantize, Frame};

/// Weights below `exp(-WEIGHT_CUTOFF)` are treated as zero.
const WEIGHT_CUTOFF: f64 = 30.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NlmParams {
    pub h: f64,
    pub patch_radius: usize,
    pub search_radius: usize,
    /// Expected noise standard deviation; distances are reduced by
    /// `2 * sigma_hat^2` before weighting.
    pub sigma_hat: f64,
}

impl Default for NlmParams {
    fn default() -> Self {
        Self {
            h: 10.0,
            patch_radius: 3,
            search_radius: 10,
            sigma_hat: 0.0,
        }
    }
}

impl NlmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter(format!("nlm h must be positive, got {}", self.h)));
        }
        if self.patch_radius < 1 || self.search_radius < self.patch_radius {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= patch_radius ({}) <= search_radius ({})",
                self.patch_radius, self.search_radius
            )));
        }
        if !(self.sigma_hat >= 0.0) {
            return Err(Error::InvalidParameter("sigma_hat must be >= 0".into()));
        }
        Ok(())
    }
}

/// Weight as a function of the integer sum of squared patch differences.
fn weight_table(params: &NlmParams, patch_samples: usize) -> Vec<f64> {
    let h2 = params.h * params.h;
    let offset = 2.0 * params.sigma_hat * params.sigma_hat;
    let n = patch_samples as f64;
    let max_sum = ((WEIGHT_CUTOFF * h2 + offset) * n).ceil() as usize;
    (0..=max_sum)
        .map(|d| {
            let d2 = d as f64 / n;
            (-(d2 - offset).max(0.0) / h2).exp()
        })
        .collect()
}

pub fn nlm_denoise(frame: &Frame, params: &NlmParams) -> Result<Frame> {
    params.validate()?;
    let (w, h) = (frame.width(), frame.height());
    let r = params.patch_radius;
    let s = params.search_radius as isize;
    let (pw, ph) = (w + 2 * r, h + 2 * r);
    let src = frame.as_bytes();

    let mut padded = vec![[0i32; 3]; pw * ph];
    for py in 0..ph {
        let sy = reflect101(py as isize - r as isize, h);
        for px in 0..pw {
            let sx = reflect101(px as isize - r as isize, w);
            let i = (sy * w + sx) * 3;
            padded[py * pw + px] = [src[i] as i32, src[i + 1] as i32, src[i + 2] as i32];
        }
    }

    let side = 2 * r + 1;
    let table = weight_table(params, side * side * 3);
    let mut weight_sum = vec![0.0f64; w * h];
    let mut acc = vec![[0.0f64; 3]; w * h];
    let mut integral = vec![0i64; (pw + 1) * (ph + 1)];

    for dy in -s..=s {
        for dx in -s..=s {
            // integral of squared differences between the padded image and
            // its copy shifted by (dx, dy)
            for qy in 0..ph {
                let mut row = 0i64;
                let ty = qy as isize + dy;
                for qx in 0..pw {
                    let tx = qx as isize + dx;
                    if tx >= 0 && ty >= 0 && (tx as usize) < pw && (ty as usize) < ph {
                        let a = padded[qy * pw + qx];
                        let b = padded[ty as usize * pw + tx as usize];
                        let d0 = a[0] - b[0];
                        let d1 = a[1] - b[1];
                        let d2 = a[2] - b[2];
                        row += i64::from(d0 * d0 + d1 * d1 + d2 * d2);
                    }
                    integral[(qy + 1) * (pw + 1) + qx + 1] = integral[qy * (pw + 1) + qx + 1] + row;
                }
            }

            let y_lo = (-dy).max(0) as usize;
            let y_hi = (h as isize - dy).min(h as isize).max(0) as usize;
            let x_lo = (-dx).max(0) as usize;
            let x_hi = (w as isize - dx).min(w as isize).max(0) as usize;
            for y in y_lo..y_hi {
                let jy = (y as isize + dy) as usize;
                for x in x_lo..x_hi {
                    // patch of (x, y) spans padded [x, x + 2r] x [y, y + 2r]
                    let sum = integral[(y + side) * (pw + 1) + x + side]
                        - integral[y * (pw + 1) + x + side]
                        - integral[(y + side) * (pw + 1) + x]
                        + integral[y * (pw + 1) + x];
                    let Some(&wt) = table.get(sum as usize) else {
                        continue;
                    };
                    let jx = (x as isize + dx) as usize;
                    let j = (jy * w + jx) * 3;
                    let i = y * w + x;
                    weight_sum[i] += wt;
                    let a = &mut acc[i];
                    a[0] += wt * f64::from(src[j]);
                    a[1] += wt * f64::from(src[j + 1]);
                    a[2] += wt * f64::from(src[j + 2]);
                }
            }
        }
    }

    let data = acc
        .iter()
        .zip(&weight_sum)
        .flat_map(|(a, &ws)| a.map(|v| quantize(v / ws)))
        .collect();
    Frame::new(w, h, data)
}

/// Denoises every frame independently.
pub fn nlm_denoise_all(frames: &[Frame], params: &NlmParams) -> Result<Vec<Frame>> {
    frames.par_iter().map(|f| nlm_denoise(f, params)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degrade::{add_noise, NoiseParams};

    /// Direct evaluation of the same estimator, pixel by pixel.
    fn brute_force(frame: &Frame, p: &NlmParams) -> Frame {
        let (w, h) = (frame.width(), frame.height());
        let r = p.patch_radius as isize;
        let s = p.search_radius as isize;
        let n = ((2 * r + 1) * (2 * r + 1) * 3) as f64;
        let at = |x: isize, y: isize, c: usize| {
            f64::from(frame.channel(reflect101(x, w), reflect101(y, h), c))
        };
        Frame::from_fn(w, h, |x, y| {
            let (x, y) = (x as isize, y as isize);
            let mut ws = 0.0;
            let mut acc = [0.0; 3];
            for jy in (y - s).max(0)..=(y + s).min(h as isize - 1) {
                for jx in (x - s).max(0)..=(x + s).min(w as isize - 1) {
                    let mut d = 0.0;
                    for oy in -r..=r {
                        for ox in -r..=r {
                            for c in 0..3 {
                                let diff = at(x + ox, y + oy, c) - at(jx + ox, jy + oy, c);
                                d += diff * diff;
                            }
                        }
                    }
                    let arg = (d / n - 2.0 * p.sigma_hat * p.sigma_hat).max(0.0) / (p.h * p.h);
                    if arg > WEIGHT_CUTOFF {
                        continue;
                    }
                    let wt = (-arg).exp();
                    ws += wt;
                    for c in 0..3 {
                        acc[c] += wt * at(jx, jy, c);
                    }
                }
            }
            acc.map(|v| quantize(v / ws))
        })
    }

    fn gradient(n: usize) -> Frame {
        Frame::from_fn(n, n, |x, y| {
            [(40 + x * 2) as u8, (60 + y * 2) as u8, (100 + (x + y)) as u8]
        })
    }

    #[test]
    fn matches_brute_force() {
        let clean = gradient(14);
        let noisy = add_noise(&clean, &NoiseParams::new(12.0, 5).unwrap());
        let p = NlmParams {
            h: 9.0,
            patch_radius: 1,
            search_radius: 4,
            sigma_hat: 3.0,
        };
        assert_eq!(nlm_denoise(&noisy, &p).unwrap(), brute_force(&noisy, &p));
    }

    #[test]
    fn constant_is_fixed_point() {
        let f = Frame::filled(30, 25, [17, 99, 201]);
        assert_eq!(nlm_denoise(&f, &NlmParams::default()).unwrap(), f);
    }

    #[test]
    fn improves_psnr_on_noisy_gradient() {
        let clean = gradient(72);
        let noisy = add_noise(&clean, &NoiseParams::new(10.0, 11).unwrap());
        let den = nlm_denoise(&noisy, &NlmParams::default()).unwrap();
        let before = crate::quality::psnr(&clean, &noisy).unwrap();
        let after = crate::quality::psnr(&clean, &den).unwrap();
        assert!(after > before, "{after} <= {before}");
    }

    #[test]
    fn rejects_bad_params() {
        let f = Frame::filled(8, 8, [0; 3]);
        for p in [
            NlmParams { h: 0.0, ..NlmParams::default() },
            NlmParams { patch_radius: 0, ..NlmParams::default() },
            NlmParams { patch_radius: 4, search_radius: 3, ..NlmParams::default() },
        ] {
            assert!(nlm_denoise(&f, &p).is_err());
        }
    }

    #[test]
    fn tiny_frames_work() {
        let f = Frame::from_fn(1, 3, |_, y| [y as u8 * 50, 0, 0]);
        let out = nlm_denoise(&f, &NlmParams::default()).unwrap();
        assert_eq!(out.width(), 1);
        assert_eq!(out.height(), 3);
    }
}
