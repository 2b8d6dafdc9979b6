//! RGB traces and the six classical pulse transforms: GREEN, ICA, CHROM,
//! PBV, POS and LGI.

mod ica;
mod transforms;

pub use ica::{ica, IcaParams, IcaSelect};
pub use transforms::{chrom, green, lgi, pbv, pos, pos_window};

use crate::degrade::MaskImage;
use crate::error::{Error, Result};
use crate::media::Frame;
use crate::signal::{self, mean_std};

/// Per-frame spatial means of R, G and B.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbTrace {
    samples: Vec<[f64; 3]>,
    fps: f64,
}

impl RgbTrace {
    pub fn new(samples: Vec<[f64; 3]>, fps: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::EmptySignal);
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidParameter(format!("fps must be positive, got {fps}")));
        }
        if samples.iter().flatten().any(|v| !(0.0..=255.0).contains(v)) {
            return Err(Error::InvalidParameter("trace values must lie in [0, 255]".into()));
        }
        Ok(Self { samples, fps })
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[c]).collect()
    }

    /// Fourier-resamples every channel to `target_fps`; ringing beyond the
    /// 8-bit range is clipped.
    pub fn resample(&self, target_fps: f64) -> Result<Self> {
        let cols = (0..3)
            .map(|c| signal::fourier_resample(&self.column(c), self.fps, target_fps))
            .collect::<Result<Vec<_>>>()?;
        let samples = (0..cols[0].len())
            .map(|i| [0, 1, 2].map(|c| cols[c][i].clamp(0.0, 255.0)))
            .collect();
        Self::new(samples, target_fps)
    }
}

/// Averages every frame over its unmasked pixels. A fully masked frame
/// repeats the previous frame's means.
pub fn extract_trace(frames: &[Frame], fps: f64, masks: Option<&[MaskImage]>) -> Result<RgbTrace> {
    if frames.is_empty() {
        return Err(Error::EmptySignal);
    }
    if let Some(m) = masks {
        if m.len() != frames.len() {
            return Err(Error::LengthMismatch(frames.len(), m.len()));
        }
        if let Some((i, (f, _))) = frames.iter().zip(m).enumerate().find(|(_, (f, m))| !m.matches(f)) {
            return Err(Error::DimensionMismatch {
                index: i,
                expected_w: f.width(),
                expected_h: f.height(),
                found_w: m[i].width(),
                found_h: m[i].height(),
            });
        }
    }
    let mut samples: Vec<[f64; 3]> = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let bits = masks.map(|m| m[i].bits());
        let mut sum = [0u64; 3];
        let mut n = 0u64;
        for (p, px) in f.as_bytes().chunks_exact(3).enumerate() {
            if bits.is_some_and(|b| b[p]) {
                continue;
            }
            for c in 0..3 {
                sum[c] += u64::from(px[c]);
            }
            n += 1;
        }
        if n == 0 {
            match samples.last() {
                Some(&prev) => samples.push(prev),
                None => return Err(Error::AllMaskedFirstFrame),
            }
        } else {
            samples.push(sum.map(|s| s as f64 / n as f64));
        }
    }
    if samples.len() == 1 {
        return Err(Error::EmptySignal);
    }
    RgbTrace::new(samples, fps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Warning {
    /// The transform produced a constant signal, returned as zeros.
    ZeroVariance,
    /// All variation was removed by the projection; zeros returned.
    RankDeficient,
    /// ICA hit the iteration cap; the last iterate was used.
    NotConverged,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSignal {
    pub samples: Vec<f64>,
    pub fps: f64,
    pub warning: Option<Warning>,
}

impl PulseSignal {
    pub fn new(samples: Vec<f64>, fps: f64) -> Self {
        Self { samples, fps, warning: None }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Zero-mean, unit-variance copy; zeros with a warning when constant.
    pub(crate) fn unit_variance(samples: Vec<f64>, fps: f64) -> Self {
        let (mean, sd) = mean_std(&samples);
        if !(sd > 0.0) {
            return Self {
                samples: vec![0.0; samples.len()],
                fps,
                warning: Some(Warning::ZeroVariance),
            };
        }
        Self::new(samples.iter().map(|v| (v - mean) / sd).collect(), fps)
    }
}

/// Blood-volume pulse signature: unit norm, strictly positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PbvVector([f64; 3]);

impl PbvVector {
    pub fn new(p: [f64; 3]) -> Result<Self> {
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if p.iter().any(|&v| !(v > 0.0)) || (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("signature {p:?} is not a positive unit vector")));
        }
        Ok(Self(p))
    }

    /// Scales a positive vector to unit length.
    pub fn normalized(p: [f64; 3]) -> Result<Self> {
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter(format!("signature {p:?} has no direction")));
        }
        Self::new(p.map(|v| v / norm))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }
}

impl Default for PbvVector {
    fn default() -> Self {
        Self::normalized([0.33, 0.77, 0.53]).expect("positive constant")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Green,
    Ica(IcaParams),
    Chrom,
    Pbv(PbvVector),
    Pos,
    Lgi,
}

impl Method {
    pub const NAMES: [&'static str; 6] = ["green", "ica", "chrom", "pbv", "pos", "lgi"];

    /// Method by name with default parameters.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name.trim().to_ascii_lowercase().as_str() {
            "green" => Method::Green,
            "ica" => Method::Ica(IcaParams::default()),
            "chrom" => Method::Chrom,
            "pbv" => Method::Pbv(PbvVector::default()),
            "pos" => Method::Pos,
            "lgi" => Method::Lgi,
            other => return Err(Error::InvalidParameter(format!("unknown rPPG method {other:?}"))),
        })
    }

    pub fn all() -> Vec<Method> {
        Self::NAMES.iter().map(|n| Self::from_name(n).expect("known name")).collect()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Green => "green",
            Method::Ica(_) => "ica",
            Method::Chrom => "chrom",
            Method::Pbv(_) => "pbv",
            Method::Pos => "pos",
            Method::Lgi => "lgi",
        }
    }

    pub fn apply(&self, trace: &RgbTrace) -> Result<PulseSignal> {
        match self {
            Method::Green => green(trace),
            Method::Ica(p) => ica(trace, p),
            Method::Chrom => chrom(trace),
            Method::Pbv(s) => pbv(trace, s),
            Method::Pos => pos(trace),
            Method::Lgi => lgi(trace),
        }
    }
}
