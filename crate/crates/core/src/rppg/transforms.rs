use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};

use super::{PbvVector, PulseSignal, RgbTrace, Warning};
use crate::error::{Error, Result};
use crate::signal::{butterworth_bandpass, mean_std, TRANSFORM_BAND};

/// Minimum trace length for the multi-channel transforms.
pub const MIN_TRACE_LEN: usize = 32;

fn require_len(trace: &RgbTrace, needed: usize) -> Result<()> {
    if trace.len() < needed {
        return Err(Error::TooShort { needed, available: trace.len() });
    }
    Ok(())
}

fn bandpass(x: &[f64], fps: f64) -> Result<Vec<f64>> {
    butterworth_bandpass(x, fps, TRANSFORM_BAND.0, TRANSFORM_BAND.1)
}

/// Channel means, rejecting channels whose mean is zero.
fn channel_means(samples: &[[f64; 3]]) -> Result<[f64; 3]> {
    let n = samples.len() as f64;
    let mut mean = [0.0; 3];
    for s in samples {
        for c in 0..3 {
            mean[c] += s[c];
        }
    }
    let mean = mean.map(|m| m / n);
    if let Some(c) = mean.iter().position(|m| m.abs() < 1e-12) {
        return Err(Error::ZeroMeanChannel(c));
    }
    Ok(mean)
}

/// Mean-removed green channel, band-passed.
pub fn green(trace: &RgbTrace) -> Result<PulseSignal> {
    let g = trace.column(1);
    let (mean, _) = mean_std(&g);
    let centered: Vec<f64> = g.iter().map(|v| v - mean).collect();
    Ok(PulseSignal::new(bandpass(&centered, trace.fps())?, trace.fps()))
}

pub fn chrom(trace: &RgbTrace) -> Result<PulseSignal> {
    require_len(trace, MIN_TRACE_LEN)?;
    let mean = channel_means(trace.samples())?;
    let (mut x, mut y) = (Vec::with_capacity(trace.len()), Vec::with_capacity(trace.len()));
    for s in trace.samples() {
        let [r, g, b] = [s[0] / mean[0], s[1] / mean[1], s[2] / mean[2]];
        x.push(3.0 * r - 2.0 * g);
        y.push(1.5 * r + g - 1.5 * b);
    }
    let xf = bandpass(&x, trace.fps())?;
    let yf = bandpass(&y, trace.fps())?;
    let (_, sx) = mean_std(&xf);
    let (_, sy) = mean_std(&yf);
    let alpha = if sy == 0.0 { 1.0 } else { sx / sy };
    let s = xf.iter().zip(&yf).map(|(a, b)| a - alpha * b).collect();
    Ok(PulseSignal::new(s, trace.fps()))
}

pub fn pbv(trace: &RgbTrace, signature: &PbvVector) -> Result<PulseSignal> {
    require_len(trace, MIN_TRACE_LEN)?;
    let mean = channel_means(trace.samples())?;
    let t = trace.len();
    let cn = DMatrix::from_fn(3, t, |c, i| trace.samples()[i][c] / mean[c] - 1.0);
    let q: Matrix3<f64> = (&cn * cn.transpose()).fixed_view::<3, 3>(0, 0).into_owned();
    let eig = SymmetricEigen::new(q).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > 0.0) || lo <= hi * 1e-12 {
        return Err(Error::SingularGram);
    }
    let w = q
        .lu()
        .solve(&Vector3::from(signature.components()))
        .ok_or(Error::SingularGram)?;
    let s = (0..t).map(|i| w.dot(&cn.column(i))).collect();
    Ok(PulseSignal::unit_variance(s, trace.fps()))
}

/// POS window length for a frame rate: `round(1.6 * fps)`.
pub fn pos_window(fps: f64) -> usize {
    (1.6 * fps).round() as usize
}

pub fn pos(trace: &RgbTrace) -> Result<PulseSignal> {
    let l = pos_window(trace.fps()).max(2);
    require_len(trace, l)?;
    let samples = trace.samples();
    let mut out = vec![0.0; trace.len()];
    let mut s1 = vec![0.0; l];
    let mut s2 = vec![0.0; l];
    for start in 0..=trace.len() - l {
        let win = &samples[start..start + l];
        let mean = channel_means(win)?;
        for (k, s) in win.iter().enumerate() {
            let [r, g, b] = [s[0] / mean[0], s[1] / mean[1], s[2] / mean[2]];
            s1[k] = g - b;
            s2[k] = -2.0 * r + g + b;
        }
        let (_, sd1) = mean_std(&s1);
        let (_, sd2) = mean_std(&s2);
        let ratio = if sd2 == 0.0 { 1.0 } else { sd1 / sd2 };
        let h: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a + ratio * b).collect();
        let hm = h.iter().sum::<f64>() / l as f64;
        for (k, v) in h.iter().enumerate() {
            out[start + k] += v - hm;
        }
    }
    Ok(PulseSignal::new(out, trace.fps()))
}

/// Leading left singular vector of the raw 3 x T trace and the trace with
/// that direction projected out.
pub(super) fn project_out_leading(samples: &[[f64; 3]]) -> (Vector3<f64>, Vec<[f64; 3]>) {
    let m = DMatrix::from_fn(3, samples.len(), |c, i| samples[i][c]);
    // left singular vectors are the eigenvectors of M M^T
    let gram: Matrix3<f64> = (&m * m.transpose()).fixed_view::<3, 3>(0, 0).into_owned();
    let eig = SymmetricEigen::new(gram);
    let k = eig.eigenvalues.imax();
    let mut u: Vector3<f64> = eig.eigenvectors.column(k).into_owned();
    // fix the sign so the result does not depend on the solver
    if u.sum() < 0.0 {
        u = -u;
    }
    let projected = samples
        .iter()
        .map(|s| {
            let v = Vector3::from(*s);
            let r = v - u * u.dot(&v);
            [r[0], r[1], r[2]]
        })
        .collect();
    (u, projected)
}

/// Removes the dominant (skin-tone and illumination) direction of the raw
/// trace and returns the green component of the residual at unit variance.
pub fn lgi(trace: &RgbTrace) -> Result<PulseSignal> {
    require_len(trace, MIN_TRACE_LEN)?;
    let (_, projected) = project_out_leading(trace.samples());
    let g: Vec<f64> = projected.iter().map(|s| s[1]).collect();
    let rms = (trace.samples().iter().flatten().map(|v| v * v).sum::<f64>()
        / (3 * trace.len()) as f64)
        .sqrt();
    let (_, sd) = mean_std(&g);
    if !(sd > 1e-10 * rms) {
        return Ok(PulseSignal {
            samples: vec![0.0; trace.len()],
            fps: trace.fps(),
            warning: Some(Warning::RankDeficient),
        });
    }
    Ok(PulseSignal::unit_variance(g, trace.fps()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::estimate_hr;
    use nalgebra::Rotation3;
    use std::f64::consts::PI;

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let (ma, sa) = mean_std(a);
        let (mb, sb) = mean_std(b);
        a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 * sa * sb)
    }

    fn wave(f: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * f * i as f64 / 20.0).sin()).collect()
    }

    /// Deterministic small perturbation, different for every channel.
    fn jitter(i: usize, c: usize) -> f64 {
        (((i * 7919 + c * 104_729) ^ (i >> 2)) % 13) as f64 - 6.0
    }

    fn pulsatile(n: usize) -> RgbTrace {
        let base = [150.0, 100.0, 80.0];
        let m = crate::synth::signature_modulation(base, 0.8);
        let s = wave(1.2, n);
        RgbTrace::new(
            s.iter()
                .enumerate()
                .map(|(i, v)| {
                    [0, 1, 2].map(|c| base[c] + m[c] * v + jitter(i, c) * 1e-3)
                })
                .collect(),
            20.0,
        )
        .unwrap()
    }

    fn constant() -> RgbTrace {
        RgbTrace::new(vec![[120.0, 90.0, 60.0]; 320], 20.0).unwrap()
    }

    #[test]
    fn green_tracks_sine() {
        let s = wave(1.2, 320);
        let t = RgbTrace::new(s.iter().map(|v| [50.0, 100.0 + v, 20.0]).collect(), 20.0).unwrap();
        let out = green(&t).unwrap();
        assert!(correlation(&out.samples, &s) > 0.99);
    }

    #[test]
    fn green_ignores_red_and_blue() {
        let s = wave(1.2, 100);
        let a = RgbTrace::new(s.iter().map(|v| [50.0, 100.0 + v, 20.0]).collect(), 20.0).unwrap();
        let b = RgbTrace::new(
            s.iter().enumerate().map(|(i, v)| [i as f64 % 7.0, 100.0 + v, 200.0 - v]).collect(),
            20.0,
        )
        .unwrap();
        assert_eq!(green(&a).unwrap(), green(&b).unwrap());
    }

    #[test]
    fn constant_inputs_give_zero() {
        let t = constant();
        for out in [green(&t).unwrap(), chrom(&t).unwrap(), pos(&t).unwrap()] {
            assert!(out.samples.iter().all(|v| *v == 0.0));
        }
        let l = lgi(&t).unwrap();
        assert_eq!(l.warning, Some(Warning::RankDeficient));
        assert!(l.samples.iter().all(|v| *v == 0.0));
        assert!(matches!(pbv(&t, &PbvVector::default()), Err(Error::SingularGram)));
    }

    #[test]
    fn chrom_recovers_pulse() {
        // intensity rising with the pulse projects negatively onto X - alpha Y
        let out = chrom(&pulsatile(320)).unwrap();
        assert!(correlation(&out.samples, &wave(1.2, 320)).abs() > 0.9);
    }

    #[test]
    fn pbv_recovers_signature_direction() {
        let sig = PbvVector::default();
        let p = sig.components();
        // Cn = 0.01 p s(t) + tiny variation along two other directions. All
        // three waveforms complete whole cycles in 16 s, so they are exactly
        // zero-mean and mutually orthogonal.
        let s = wave(1.25, 320);
        let e1 = wave(0.5, 320);
        let e2 = wave(3.0, 320);
        let t = RgbTrace::new(
            (0..320)
                .map(|i| {
                    let d = [1e-6 * e1[i], -1e-6 * e2[i], 1e-6 * (e1[i] + e2[i])];
                    [0, 1, 2].map(|c| 100.0 * (1.0 + 0.01 * p[c] * s[i] + d[c]))
                })
                .collect(),
            20.0,
        )
        .unwrap();
        let out = pbv(&t, &sig).unwrap();
        let r = correlation(&out.samples, &s);
        assert!(r > 0.999, "{r}");
        let (m, sd) = mean_std(&out.samples);
        assert!(m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pbv_with_random_noise() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let sig = PbvVector::default();
        let p = sig.components();
        let s = wave(1.25, 320);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let noise = Normal::new(0.0, 1e-5).unwrap();
        let t = RgbTrace::new(
            s.iter()
                .map(|v| [0, 1, 2].map(|c| 100.0 * (1.0 + 0.01 * p[c] * v + noise.sample(&mut rng))))
                .collect(),
            20.0,
        )
        .unwrap();
        // chance correlation between the noise and the pulse costs O(1/T)
        assert!(correlation(&pbv(&t, &sig).unwrap().samples, &s) > 0.99);
    }

    #[test]
    fn scale_invariance() {
        let t = pulsatile(200);
        let scaled = RgbTrace::new(t.samples().iter().map(|s| s.map(|v| v * 0.6)).collect(), 20.0).unwrap();
        for f in [chrom, pos, |t: &RgbTrace| pbv(t, &PbvVector::default())] {
            let a = f(&t).unwrap();
            let b = f(&scaled).unwrap();
            for (x, y) in a.samples.iter().zip(&b.samples) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pos_window_length() {
        assert_eq!(pos_window(20.0), 32);
        assert_eq!(pos_window(30.0), 48);
        let short = RgbTrace::new(vec![[1.0, 2.0, 3.0]; 31], 20.0).unwrap();
        assert!(matches!(pos(&short), Err(Error::TooShort { .. })));
    }

    #[test]
    fn pos_tone_normalization() {
        let t = pulsatile(320);
        let gains = [0.7, 1.3, 0.9];
        let g = RgbTrace::new(t.samples().iter().map(|s| [0, 1, 2].map(|c| s[c] * gains[c])).collect(), 20.0)
            .unwrap();
        let hr = |t: &RgbTrace| {
            let p = pos(t).unwrap();
            let f = butterworth_bandpass(&p.samples, 20.0, 0.75, 2.5).unwrap();
            estimate_hr(&f, 20.0, 0.75, 2.5).unwrap().bpm
        };
        // one raw bin is 60 * 20 / 320 = 3.75 BPM
        assert!((hr(&t) - hr(&g)).abs() < 3.75);
        assert!((hr(&t) - 72.0).abs() < 1.0);
    }

    #[test]
    fn lgi_annihilates_leading_direction() {
        let s = wave(1.2, 100);
        let t = RgbTrace::new(s.iter().map(|v| [100.0 + v; 3]).collect(), 20.0).unwrap();
        let out = lgi(&t).unwrap();
        assert!(out.samples.iter().all(|v| v.abs() <= 1e-9));
    }

    #[test]
    fn lgi_residual_is_rotation_invariant() {
        let t = pulsatile(120);
        let (u, proj) = project_out_leading(t.samples());
        let norm = |p: &[[f64; 3]]| p.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(u), 0.4);
        let rotated: Vec<[f64; 3]> = t
            .samples()
            .iter()
            .map(|s| {
                let v = rot * Vector3::from(*s);
                [v[0], v[1], v[2]]
            })
            .collect();
        let (_, proj_r) = project_out_leading(&rotated);
        assert!((norm(&proj) - norm(&proj_r)).abs() < 1e-9 * norm(&proj).max(1.0));
    }

    #[test]
    fn zero_mean_channel_rejected() {
        let t = RgbTrace::new((0..64).map(|i| [0.0, 50.0 + (i % 3) as f64, 40.0]).collect(), 20.0).unwrap();
        assert!(matches!(chrom(&t), Err(Error::ZeroMeanChannel(0))));
    }
}
