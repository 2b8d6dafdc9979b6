//! Deliberate frame degradations: Gaussian blur, additive Gaussian noise,
//! and white eye/face masks driven by landmarks.

mod geometry;

pub use geometry::{
    apply_mask, eyemask_geometry, facemask_geometry, rasterize, Ellipse, MaskShape, Polygon,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::border::reflect101;
use crate::error::{Error, Result};
use crate::media::{quantize, Frame, LandmarkSet};
use crate::seed;

pub const DEFAULT_KERNEL_SIZE: usize = 15;
pub const DEFAULT_NOISE_SIGMA: f64 = 10.0;

/// Binary occlusion map; `true` marks an occluded pixel.
#[derive(Clone, PartialEq, Eq)]
pub struct MaskImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl std::fmt::Debug for MaskImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MaskImage({}x{}, {} set)", self.width, self.height, self.count())
    }
}

impl MaskImage {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_clear(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn matches(&self, frame: &Frame) -> bool {
        self.width == frame.width() && self.height == frame.height()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlurParams {
    sigma: f64,
    kernel_size: usize,
}

impl BlurParams {
    pub fn new(sigma: f64, kernel_size: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("blur sigma must be positive, got {sigma}")));
        }
        if kernel_size % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "kernel size must be odd, got {kernel_size}"
            )));
        }
        Ok(Self { sigma, kernel_size })
    }

    /// Kernel of size `k` with `sigma = k / 6`.
    pub fn with_kernel(kernel_size: usize) -> Result<Self> {
        Self::new(kernel_size as f64 / 6.0, kernel_size)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }
}

impl Default for BlurParams {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_KERNEL_SIZE as f64 / 6.0,
            kernel_size: DEFAULT_KERNEL_SIZE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams {
    sigma_n: f64,
    pub seed: u64,
}

impl NoiseParams {
    pub fn new(sigma_n: f64, seed: u64) -> Result<Self> {
        if !(sigma_n >= 0.0 && sigma_n.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {sigma_n}")));
        }
        Ok(Self { sigma_n, seed })
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    /// Parameters for frame `index` of a sequence.
    pub fn for_frame(&self, index: usize) -> Self {
        Self {
            sigma_n: self.sigma_n,
            seed: seed::mix(self.seed, index as u64),
        }
    }
}

/// Normalized `k x k` samples of the isotropic Gaussian, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    size: usize,
    weights: Vec<f64>,
}

impl GaussianKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(dx, dy)` from the centre.
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let r = (self.size / 2) as isize;
        self.weights[((dy + r) as usize) * self.size + (dx + r) as usize]
    }
}

pub fn gaussian_kernel(params: &BlurParams) -> GaussianKernel {
    let k = params.kernel_size;
    let r = (k / 2) as isize;
    let two_s2 = 2.0 * params.sigma * params.sigma;
    let norm = 1.0 / (std::f64::consts::PI * two_s2);
    let mut weights = Vec::with_capacity(k * k);
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = (dx * dx + dy * dy) as f64;
            weights.push(norm * (-d2 / two_s2).exp());
        }
    }
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    GaussianKernel { size: k, weights }
}

/// Per-channel convolution with the normalized kernel, reflect-101 borders.
pub fn blur(frame: &Frame, params: &BlurParams) -> Frame {
    let kernel = gaussian_kernel(params);
    let (w, h) = (frame.width(), frame.height());
    let r = (kernel.size / 2) as isize;
    let src = frame.as_bytes();
    let mut data = Vec::with_capacity(src.len());
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = [0.0f64; 3];
            let mut ki = 0;
            for dy in -r..=r {
                let sy = reflect101(y + dy, h);
                for dx in -r..=r {
                    let sx = reflect101(x + dx, w);
                    let wt = kernel.weights[ki];
                    ki += 1;
                    let i = (sy * w + sx) * 3;
                    acc[0] += wt * f64::from(src[i]);
                    acc[1] += wt * f64::from(src[i + 1]);
                    acc[2] += wt * f64::from(src[i + 2]);
                }
            }
            data.extend(acc.iter().map(|&v| quantize(v)));
        }
    }
    Frame::new(w, h, data).expect("same dimensions")
}

/// Adds independent `N(0, sigma_n^2)` noise to every channel sample, then
/// rounds half-to-even and clamps. The stream is fully determined by
/// `params.seed`.
pub fn add_noise(frame: &Frame, params: &NoiseParams) -> Frame {
    if params.sigma_n == 0.0 {
        return frame.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(0.0, params.sigma_n).expect("sigma validated");
    let data = frame
        .as_bytes()
        .iter()
        .map(|&v| quantize(f64::from(v) + normal.sample(&mut rng)))
        .collect();
    Frame::new(frame.width(), frame.height(), data).expect("same dimensions")
}

/// One of the four degradations, with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Degradation {
    Blur(BlurParams),
    Noise(NoiseParams),
    Eyemask,
    Facemask,
}

impl Degradation {
    pub fn name(&self) -> &'static str {
        match self {
            Degradation::Blur(_) => "blur",
            Degradation::Noise(_) => "noise",
            Degradation::Eyemask => "eyemask",
            Degradation::Facemask => "facemask",
        }
    }

    pub fn needs_landmarks(&self) -> bool {
        matches!(self, Degradation::Eyemask | Degradation::Facemask)
    }

    /// Degrades frame `index` of a sequence. Mask degradations also return
    /// the occlusion map.
    pub fn apply(
        &self,
        frame: &Frame,
        index: usize,
        landmarks: Option<&LandmarkSet>,
    ) -> Result<(Frame, Option<MaskImage>)> {
        let need = || {
            landmarks.ok_or_else(|| Error::InvalidParameter("mask degradations need landmarks".into()))
        };
        match self {
            Degradation::Blur(p) => Ok((blur(frame, p), None)),
            Degradation::Noise(p) => Ok((add_noise(frame, &p.for_frame(index)), None)),
            Degradation::Eyemask => {
                let shape = MaskShape::Ellipse(eyemask_geometry(need()?)?);
                let (f, m) = apply_mask(frame, &shape);
                Ok((f, Some(m)))
            }
            Degradation::Facemask => {
                let shape = MaskShape::Polygon(facemask_geometry(need()?)?);
                let (f, m) = apply_mask(frame, &shape);
                Ok((f, Some(m)))
            }
        }
    }
}
