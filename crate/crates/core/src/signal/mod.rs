//! Evaluation protocol on 1-D signals: segment selection, Fourier
//! resampling, standardization, zero-phase Butterworth band-pass and
//! spectral heart-rate estimation.

mod butter;

pub use butter::{butterworth_bandpass, Biquad, Butterworth};

use std::ops::Range;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::media::FrameSequence;

pub const SEGMENT_SECONDS: f64 = 16.0;
pub const TARGET_FPS: f64 = 20.0;
pub const HR_BAND: (f64, f64) = (0.75, 2.5);
/// Band used inside the transforms that filter their own output.
pub const TRANSFORM_BAND: (f64, f64) = (0.75, 4.0);
pub const MIN_HR_SAMPLES: usize = 64;
const FFT_LEN: usize = 4096;

/// Index range of the `seconds`-long run centred on the middle of a
/// `len`-sample recording (left-biased by one when the split is uneven).
pub fn segment_range(len: usize, rate: f64, seconds: f64) -> Result<Range<usize>> {
    let n = (seconds * rate).round() as usize;
    if n == 0 || n > len {
        return Err(Error::TooShort { needed: n.max(1), available: len });
    }
    let start = (len - n) / 2;
    Ok(start..start + n)
}

pub fn select_segment(seq: &FrameSequence, seconds: f64) -> Result<FrameSequence> {
    let r = segment_range(seq.len(), seq.fps(), seconds)?;
    seq.with_frames(seq.frames()[r].to_vec())
}

/// Resamples a uniformly sampled signal to `target_rate` by truncating or
/// zero-padding its spectrum to `round(T * target / source)` bins. An even
/// Nyquist bin is folded when shrinking and split in half when growing.
pub fn fourier_resample(x: &[f64], source_rate: f64, target_rate: f64) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::EmptySignal);
    }
    if !(source_rate > 0.0 && target_rate > 0.0) {
        return Err(Error::InvalidParameter("sample rates must be positive".into()));
    }
    let t = x.len();
    let m = (t as f64 * target_rate / source_rate).round() as usize;
    if m == 0 {
        return Err(Error::InvalidParameter(format!("resampling {t} samples gives none")));
    }
    if m == t {
        return Ok(x.to_vec());
    }
    let mut planner = FftPlanner::new();
    let mut spec: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(t).process(&mut spec);

    let n = m.min(t);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..=(n - 1) / 2 {
        out[k] = spec[k];
        if k > 0 {
            out[m - k] = spec[t - k];
        }
    }
    if n % 2 == 0 {
        let k = n / 2;
        if m < t {
            out[k] = spec[k] + spec[t - k];
        } else {
            out[k] = spec[k] * 0.5;
            out[m - k] = spec[t - k] * 0.5;
        }
    }
    planner.plan_fft_inverse(m).process(&mut out);
    Ok(out.iter().map(|c| c.re / t as f64).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Standardized {
    pub samples: Vec<f64>,
    /// Set when the input had zero variance and `samples` are all zero.
    pub constant: bool,
}

/// Zero mean, unit population variance.
pub fn standardize(x: &[f64]) -> Result<Standardized> {
    if x.len() < 2 {
        return Err(Error::EmptySignal);
    }
    let (mean, sd) = mean_std(x);
    if sd == 0.0 {
        return Ok(Standardized { samples: vec![0.0; x.len()], constant: true });
    }
    Ok(Standardized {
        samples: x.iter().map(|v| (v - mean) / sd).collect(),
        constant: false,
    })
}

/// Mean and population standard deviation.
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HrEstimate {
    pub bpm: f64,
    pub peak_freq: f64,
    /// Peak-bin power over the remaining in-band power, in dB.
    pub spectrum_snr: f64,
}

/// Periodogram of the mean-removed, Hann-windowed signal zero-padded to
/// 4096 points (or the next power of two above the length).
fn periodogram(x: &[f64]) -> Vec<f64> {
    let len = x.len();
    let nfft = FFT_LEN.max(len.next_power_of_two());
    let mean = x.iter().sum::<f64>() / len as f64;
    let denom = (len - 1) as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for (i, v) in x.iter().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / denom).cos();
        buf[i] = Complex64::new((v - mean) * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    buf[..nfft / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
}

fn band_bins(nfft: usize, fs: f64, low: f64, high: f64) -> Range<usize> {
    let lo = (low * nfft as f64 / fs).ceil() as usize;
    let hi = (high * nfft as f64 / fs).floor() as usize;
    lo..(hi + 1).min(nfft / 2 + 1)
}

pub fn estimate_hr(x: &[f64], fs: f64, low: f64, high: f64) -> Result<HrEstimate> {
    if x.len() < MIN_HR_SAMPLES {
        return Err(Error::TooShort { needed: MIN_HR_SAMPLES, available: x.len() });
    }
    if !(0.0 < low && low < high && high <= fs / 2.0) {
        return Err(Error::BandOutOfRange { low, high, nyquist: fs / 2.0 });
    }
    let power = periodogram(x);
    let nfft = (power.len() - 1) * 2;
    let band = band_bins(nfft, fs, low, high);
    let (k, &peak) = power[band.clone()]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, p)| (i + band.start, p))
        .ok_or(Error::FlatSpectrum)?;
    if !(peak > 0.0) {
        return Err(Error::FlatSpectrum);
    }
    let mut offset = 0.0;
    if k > 0 && k + 1 < power.len() {
        let (a, b, c) = (power[k - 1], peak, power[k + 1]);
        let den = a - 2.0 * b + c;
        if den != 0.0 {
            offset = (0.5 * (a - c) / den).clamp(-0.5, 0.5);
        }
    }
    let peak_freq = ((k as f64 + offset) * fs / nfft as f64).clamp(low, high);
    let rest: f64 = power[band].iter().sum::<f64>() - peak;
    let spectrum_snr = if rest > 0.0 { 10.0 * (peak / rest).log10() } else { f64::INFINITY };
    Ok(HrEstimate { bpm: 60.0 * peak_freq, peak_freq, spectrum_snr })
}

/// Fraction of in-band power held by the strongest in-band bin; zero for a
/// flat signal.
pub fn band_peak_fraction(x: &[f64], fs: f64, low: f64, high: f64) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let power = periodogram(x);
    let nfft = (power.len() - 1) * 2;
    let band = &power[band_bins(nfft, fs, low, high.min(fs / 2.0))];
    let total: f64 = band.iter().sum();
    let peak = band.iter().copied().fold(0.0, f64::max);
    if total > 0.0 {
        peak / total
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::Frame;
    use std::f64::consts::PI;

    fn sine(f: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect()
    }

    #[test]
    fn middle_segment() {
        assert_eq!(segment_range(1800, 30.0, 16.0).unwrap(), 660..1140);
        assert_eq!(segment_range(320, 20.0, 16.0).unwrap(), 0..320);
        assert_eq!(segment_range(5, 1.0, 2.0).unwrap(), 1..3);
        assert!(matches!(segment_range(200, 20.0, 16.0), Err(Error::TooShort { .. })));
    }

    #[test]
    fn select_segment_keeps_fps() {
        let frames = (0..50).map(|i| Frame::filled(2, 2, [i as u8; 3])).collect();
        let seq = FrameSequence::new(frames, 10.0, "v").unwrap();
        let s = select_segment(&seq, 2.0).unwrap();
        assert_eq!(s.len(), 20);
        assert_eq!(s.fps(), 10.0);
        assert_eq!(s.frames()[0].pixel(0, 0), [15; 3]);
    }

    #[test]
    fn resample_preserves_sine() {
        let x = sine(1.0, 30.0, 480);
        let y = fourier_resample(&x, 30.0, 20.0).unwrap();
        assert_eq!(y.len(), 320);
        let expect = sine(1.0, 20.0, 320);
        let worst = y.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn resample_identity_and_dc() {
        let x = sine(0.7, 20.0, 100);
        assert_eq!(fourier_resample(&x, 20.0, 20.0).unwrap(), x);
        let c = fourier_resample(&[3.25; 31], 31.0, 17.0).unwrap();
        assert_eq!(c.len(), 17);
        assert!(c.iter().all(|v| (v - 3.25).abs() < 1e-12));
    }

    #[test]
    fn resample_round_trip() {
        // band-limited: a few harmonics well below either Nyquist
        let x: Vec<f64> = (0..64)
            .map(|i| {
                let t = i as f64 / 64.0;
                1.0 + (2.0 * PI * 3.0 * t).sin() + 0.5 * (2.0 * PI * 7.0 * t).cos()
            })
            .collect();
        let up = fourier_resample(&x, 64.0, 96.0).unwrap();
        let back = fourier_resample(&up, 96.0, 64.0).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn resample_even_nyquist_conventions() {
        // alternating signal sits exactly on the Nyquist bin of length 4
        let x = [1.0, -1.0, 1.0, -1.0];
        let up = fourier_resample(&x, 4.0, 8.0).unwrap();
        // split in half across +/- Nyquist of the 8-point grid: cos(pi t / 2) pattern
        let expect = [1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0];
        for (a, b) in up.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{up:?}");
        }
        // shrinking 6 -> 4 folds bins 2 and 4 of the source into the new Nyquist
        let x = [0.0, 1.0, 0.0, -1.0, 0.0, 1.0];
        let down = fourier_resample(&x, 6.0, 4.0).unwrap();
        let mut spec: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(6).process(&mut spec);
        let nyq = spec[2] + spec[4];
        let keep = [spec[0], spec[1], nyq, spec[5]];
        for (j, v) in down.iter().enumerate() {
            let direct: f64 = keep
                .iter()
                .enumerate()
                .map(|(k, c)| (c * Complex64::from_polar(1.0, 2.0 * PI * (k * j) as f64 / 4.0)).re)
                .sum::<f64>()
                / 6.0;
            assert!((v - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_cases() {
        let s = standardize(&[1.0, 2.0, 3.0]).unwrap();
        let k = (1.5f64).sqrt();
        assert!(!s.constant);
        for (a, b) in s.samples.iter().zip([-k, 0.0, k]) {
            assert!((a - b).abs() < 1e-12);
        }
        let c = standardize(&[4.0; 5]).unwrap();
        assert!(c.constant);
        assert_eq!(c.samples, vec![0.0; 5]);
        let again = standardize(&s.samples).unwrap();
        for (a, b) in again.samples.iter().zip(&s.samples) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hr_of_pure_tone() {
        let e = estimate_hr(&sine(1.2, 20.0, 320), 20.0, 0.75, 2.5).unwrap();
        assert!((e.bpm - 72.0).abs() <= 0.5, "{e:?}");
        assert_eq!(e.bpm, 60.0 * e.peak_freq);
        assert!(e.spectrum_snr.is_finite());
    }

    #[test]
    fn hr_ignores_out_of_band() {
        let x: Vec<f64> = sine(0.5, 20.0, 320)
            .iter()
            .zip(sine(1.5, 20.0, 320))
            .map(|(a, b)| 2.0 * a + b)
            .collect();
        let e = estimate_hr(&x, 20.0, 0.75, 2.5).unwrap();
        assert!((e.bpm - 90.0).abs() <= 0.5, "{e:?}");
    }

    #[test]
    fn hr_errors() {
        assert!(matches!(estimate_hr(&[0.0; 320], 20.0, 0.75, 2.5), Err(Error::FlatSpectrum)));
        assert!(matches!(estimate_hr(&[1.0; 63], 20.0, 0.75, 2.5), Err(Error::TooShort { .. })));
        assert!(estimate_hr(&[1.0; 100], 4.0, 0.75, 2.5).is_err());
    }

    #[test]
    fn peak_fraction() {
        let tone = band_peak_fraction(&sine(1.2, 20.0, 320), 20.0, 0.75, 4.0);
        assert!(tone > 0.05);
        assert_eq!(band_peak_fraction(&[0.0; 50], 20.0, 0.75, 4.0), 0.0);
    }
}
