//! The signal protocol step by step: segment, resample, filter, peak-pick.

use pulsebench::signal::{
    butterworth_bandpass, estimate_hr, fourier_resample, segment_range, standardize, HR_BAND, SEGMENT_SECONDS,
    TARGET_FPS,
};

fn main() -> pulsebench::Result<()> {
    // 60 s of a 1.3 Hz pulse plus slow drift, sampled at 30 Hz
    let fs = 30.0;
    let x: Vec<f64> = (0..1800)
        .map(|i| {
            let t = i as f64 / fs;
            (std::f64::consts::TAU * 1.3 * t).sin() + 0.5 * (std::f64::consts::TAU * 0.1 * t).sin()
        })
        .collect();

    let seg = segment_range(x.len(), fs, SEGMENT_SECONDS)?;
    println!("middle {SEGMENT_SECONDS} s segment: samples {seg:?}");
    let y = fourier_resample(&x[seg], fs, TARGET_FPS)?;
    let z = standardize(&y)?;
    let (lo, hi) = HR_BAND;
    let f = butterworth_bandpass(&z.samples, TARGET_FPS, lo, hi)?;
    let est = estimate_hr(&f, TARGET_FPS, lo, hi)?;
    println!(
        "{} samples at {TARGET_FPS} Hz -> {:.3} BPM (peak {:.4} Hz, snr {:.1} dB)",
        f.len(),
        est.bpm,
        est.peak_freq,
        est.spectrum_snr
    );
    Ok(())
}
