//! Synthetic skin videos with a known sinusoidal pulse.
//!
//! Every frame is a frozen random texture around a base colour, shifted
//! uniformly by `modulation * sin(2 pi f t)` and optionally perturbed by
//! per-frame sensor noise. The exact sinusoid is returned as a BVP reference,
//! together with a canonical frontal landmark layout for the frame.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::media::{
    quantize, save_frame_sequence, save_landmarks, save_reference, Frame, FrameSequence,
    LandmarkSet, Point, ReferenceKind, ReferenceSignal, LANDMARK_COUNT,
};
use crate::rppg::PbvVector;
use crate::seed;

/// Name of the per-video sidecar carrying the frame rate.
pub const VIDEO_META_FILE: &str = "video.ini";
pub const LANDMARKS_FILE: &str = "landmarks.csv";
pub const REFERENCE_FILE: &str = "reference.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub duration_s: f64,
    pub fps: f64,
    pub side: usize,
    pub base_color: [f64; 3],
    pub pulse_bpm: f64,
    /// Peak per-channel amplitude of the pulse, 8-bit units.
    pub modulation: [f64; 3],
    pub texture_sigma: f64,
    pub sensor_noise_sigma: f64,
    pub seed: u64,
    /// Rate of the emitted reference waveform; the video rate when `None`.
    pub reference_rate: Option<f64>,
}

/// Per-channel amplitudes whose mean-normalized direction is the PBV
/// signature, scaled so that the green amplitude equals `green_amplitude`.
pub fn signature_modulation(base_color: [f64; 3], green_amplitude: f64) -> [f64; 3] {
    let sig = PbvVector::default();
    let p = sig.components();
    let k = green_amplitude / (base_color[1] * p[1]);
    [base_color[0] * p[0] * k, green_amplitude, base_color[2] * p[2] * k]
}

impl Default for SynthSpec {
    fn default() -> Self {
        let base_color = [150.0, 100.0, 80.0];
        Self {
            duration_s: 16.0,
            fps: 20.0,
            side: 72,
            base_color,
            pulse_bpm: 72.0,
            modulation: signature_modulation(base_color, 0.8),
            texture_sigma: 4.0,
            sensor_noise_sigma: 0.0,
            seed: 1,
            reference_rate: None,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(45.0..=150.0).contains(&self.pulse_bpm) {
            return bad(format!("pulse {} BPM outside [45, 150]", self.pulse_bpm));
        }
        if !(self.fps > 2.0 * self.pulse_bpm / 60.0) {
            return bad(format!("fps {} cannot represent {} BPM", self.fps, self.pulse_bpm));
        }
        if self.modulation.iter().any(|&a| !(a >= 0.0)) {
            return bad("modulation amplitudes must be >= 0".into());
        }
        if !(self.texture_sigma >= 0.0 && self.sensor_noise_sigma >= 0.0) {
            return bad("noise levels must be >= 0".into());
        }
        if self.side == 0 || !(self.duration_s > 0.0) {
            return bad("side and duration must be positive".into());
        }
        if let Some(r) = self.reference_rate {
            if !(r > 0.0) {
                return bad(format!("reference rate {r} must be positive"));
            }
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }

    pub fn pulse_hz(&self) -> f64 {
        self.pulse_bpm / 60.0
    }
}

#[derive(Clone, Debug)]
pub struct SynthVideo {
    pub frames: FrameSequence,
    pub reference: ReferenceSignal,
    pub landmarks: LandmarkSet,
}

impl SynthVideo {
    /// Writes frames, `landmarks.csv` (template repeated per frame),
    /// `reference.csv` and `video.ini` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        save_frame_sequence(&self.frames, dir)?;
        let sets = vec![self.landmarks.clone(); self.frames.len()];
        save_landmarks(&sets, &dir.join(LANDMARKS_FILE))?;
        save_reference(&self.reference, &dir.join(REFERENCE_FILE))?;
        let meta = dir.join(VIDEO_META_FILE);
        std::fs::write(&meta, format!("fps={}\n", self.frames.fps())).map_err(|e| Error::io(meta, e))
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthVideo> {
    spec.validate()?;
    let n = spec.side * spec.side;

    let mut texture = Vec::with_capacity(n * 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(spec.seed, 0));
    if spec.texture_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.texture_sigma).expect("validated");
        for _ in 0..n {
            for base in spec.base_color {
                texture.push(base + normal.sample(&mut rng));
            }
        }
    } else {
        for _ in 0..n {
            texture.extend_from_slice(&spec.base_color);
        }
    }

    let omega = 2.0 * std::f64::consts::PI * spec.pulse_hz();
    let sensor = (spec.sensor_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, spec.sensor_noise_sigma).expect("validated"));
    let frames = (0..spec.frame_count())
        .map(|t| {
            let s = (omega * t as f64 / spec.fps).sin();
            let shift = spec.modulation.map(|a| a * s);
            let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(spec.seed, 1 + t as u64));
            let data = texture
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let noise = sensor.map_or(0.0, |d| d.sample(&mut rng));
                    quantize(v + shift[i % 3] + noise)
                })
                .collect();
            Frame::new(spec.side, spec.side, data)
        })
        .collect::<Result<Vec<_>>>()?;
    let frames = FrameSequence::new(frames, spec.fps, format!("synth-{}bpm-s{}", spec.pulse_bpm, spec.seed))?;

    let rate = spec.reference_rate.unwrap_or(spec.fps);
    let ref_len = (spec.duration_s * rate).round() as usize;
    let samples = (0..ref_len).map(|i| (omega * i as f64 / rate).sin()).collect();
    let reference = ReferenceSignal::new(samples, rate, ReferenceKind::BvpWaveform)?;

    Ok(SynthVideo {
        frames,
        reference,
        landmarks: canonical_landmarks(spec.side),
    })
}

/// Frontal 68-point layout in unit coordinates (y grows downwards).
fn unit_template() -> [Point; LANDMARK_COUNT] {
    use std::f64::consts::PI;
    let mut p = [Point::default(); LANDMARK_COUNT];
    for (i, q) in p.iter_mut().enumerate().take(17) {
        let a = i as f64 * PI / 16.0;
        *q = Point::new(0.5 - 0.42 * a.cos(), 0.36 + 0.52 * a.sin());
    }
    for k in 0..5 {
        let t = k as f64 / 4.0;
        let right = Point::new(0.17 + 0.25 * t, 0.24 - 0.04 * (PI * t).sin());
        p[17 + k] = right;
        p[26 - k] = Point::new(1.0 - right.x, right.y);
    }
    for (k, y) in [0.34, 0.41, 0.48, 0.55].into_iter().enumerate() {
        p[27 + k] = Point::new(0.5, y);
    }
    let base = [(0.42, 0.60), (0.46, 0.615), (0.5, 0.62), (0.54, 0.615), (0.58, 0.60)];
    for (k, (x, y)) in base.into_iter().enumerate() {
        p[31 + k] = Point::new(x, y);
    }
    let right_eye = [
        (0.24, 0.36),
        (0.285, 0.335),
        (0.335, 0.335),
        (0.38, 0.36),
        (0.335, 0.385),
        (0.285, 0.385),
    ];
    for (k, (x, y)) in right_eye.into_iter().enumerate() {
        p[36 + k] = Point::new(x, y);
    }
    // left eye mirrors the right one, starting from the inner corner
    let mirror = [3, 2, 1, 0, 5, 4];
    for (k, &m) in mirror.iter().enumerate() {
        let (x, y) = right_eye[m];
        p[42 + k] = Point::new(1.0 - x, y);
    }
    let outer_mouth = [
        (0.35, 0.74),
        (0.39, 0.715),
        (0.45, 0.70),
        (0.5, 0.705),
        (0.55, 0.70),
        (0.61, 0.715),
        (0.65, 0.74),
        (0.61, 0.775),
        (0.55, 0.79),
        (0.5, 0.795),
        (0.45, 0.79),
        (0.39, 0.775),
    ];
    for (k, (x, y)) in outer_mouth.into_iter().enumerate() {
        p[48 + k] = Point::new(x, y);
    }
    let inner_mouth = [
        (0.37, 0.74),
        (0.45, 0.725),
        (0.5, 0.725),
        (0.55, 0.725),
        (0.63, 0.74),
        (0.55, 0.755),
        (0.5, 0.755),
        (0.45, 0.755),
    ];
    for (k, (x, y)) in inner_mouth.into_iter().enumerate() {
        p[60 + k] = Point::new(x, y);
    }
    p
}

/// Half-extent of the template as a fraction of the frame side. With the
/// default ROI margin the adjusted box covers the whole frame.
const TEMPLATE_EXTENT: f64 = 0.46;

/// Canonical frontal landmarks for a `side` x `side` frame, centred so their
/// centroid is the frame centre.
pub fn canonical_landmarks(side: usize) -> LandmarkSet {
    let unit = LandmarkSet::new(unit_template());
    let c = unit.centroid();
    let extent = unit
        .points()
        .iter()
        .map(|p| (p.x - c.x).abs().max((p.y - c.y).abs()))
        .fold(0.0f64, f64::max);
    let side = side as f64;
    let s = TEMPLATE_EXTENT * side / extent;
    unit.map(|p| Point::new((p.x - c.x) * s + 0.5 * side, (p.y - c.y) * s + 0.5 * side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roi::{adjust_box, RawBox, DEFAULT_MARGIN};

    #[test]
    fn template_roi_is_the_whole_frame() {
        let lm = canonical_landmarks(72);
        let b = adjust_box(RawBox::full_frame(72, 72), Some(&lm), DEFAULT_MARGIN, 72, 72).unwrap();
        assert_eq!((b.x0, b.y0, b.side), (0.0, 0.0, 72.0));
    }

    #[test]
    fn frame_count_and_reference() {
        let v = generate(&SynthSpec::default()).unwrap();
        assert_eq!(v.frames.len(), 320);
        assert_eq!(v.reference.samples.len(), 320);
        assert_eq!(v.reference.kind, ReferenceKind::BvpWaveform);
        let r = generate(&SynthSpec {
            reference_rate: Some(62.0),
            ..SynthSpec::default()
        })
        .unwrap();
        assert_eq!(r.reference.samples.len(), 992);
    }

    #[test]
    fn no_modulation_no_noise_means_static_frames() {
        let v = generate(&SynthSpec {
            modulation: [0.0; 3],
            ..SynthSpec::default()
        })
        .unwrap();
        let first = &v.frames.frames()[0];
        assert!(v.frames.frames().iter().all(|f| f == first));
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&SynthSpec::default()).unwrap();
        let b = generate(&SynthSpec::default()).unwrap();
        assert_eq!(a.frames, b.frames);
        let c = generate(&SynthSpec {
            seed: 2,
            ..SynthSpec::default()
        })
        .unwrap();
        assert_ne!(a.frames.frames()[0], c.frames.frames()[0]);
    }

    #[test]
    fn signature_modulation_green_amplitude() {
        let m = signature_modulation([150.0, 100.0, 80.0], 0.8);
        assert_eq!(m[1], 0.8);
        let p = PbvVector::default();
        let n = [m[0] / 150.0, m[1] / 100.0, m[2] / 80.0];
        let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
        for c in 0..3 {
            assert!((n[c] / norm - p.components()[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            SynthSpec { pulse_bpm: 40.0, ..SynthSpec::default() },
            SynthSpec { fps: 2.0, pulse_bpm: 72.0, ..SynthSpec::default() },
            SynthSpec { modulation: [0.1, -0.1, 0.0], ..SynthSpec::default() },
        ] {
            assert!(generate(&spec).is_err());
        }
    }
}
